#include "levitate/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "levitate/constants.hpp"
#include "levitate/errors.hpp"

namespace levitate {

namespace {

// exp(-gamma t / 2) times sin(w t)/w and cos(w t), with w^2 = omega^2 - gamma^2/4.
// For w^2 < 0 the pair continues to sinh/cosh; the decay is folded in before
// the exponentials are evaluated so strongly overdamped segments cannot
// overflow.
struct Oscillation {
    double sn;
    double cs;
};

Oscillation damped_oscillation(double omega, double gamma, double t) {
    const double h = 0.5 * gamma;
    const double w2 = omega * omega - h * h;
    const double e = std::exp(-h * t);
    if (w2 > 0.0) {
        const double w = std::sqrt(w2);
        return {e * std::sin(w * t) / w, e * std::cos(w * t)};
    }
    if (w2 == 0.0) return {e * t, e};
    const double k = std::sqrt(-w2);
    if (k * t < 1.0) return {e * std::sinh(k * t) / k, e * std::cosh(k * t)};
    const double slow = std::exp((k - h) * t);
    const double fast = std::exp(-(k + h) * t);
    return {0.5 * (slow - fast) / k, 0.5 * (slow + fast)};
}

// (1 - exp(-gamma t)) / gamma, continuous at gamma = 0.
double relaxed_time(double gamma, double t) {
    return gamma == 0.0 ? t : -std::expm1(-gamma * t) / gamma;
}

}  // namespace

Matrix2 operator*(const Matrix2& x, const Matrix2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d,
            x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
}

CovarianceState CovarianceState::thermal(double temperature, const TrapSpec& trap,
                                         const ParticleSpec& particle) {
    CovarianceState s;
    s.zz = thermal_position_variance(temperature, trap, particle);
    s.vv = thermal_velocity_variance(temperature, particle);
    return s;
}

Matrix2 segment_map(double omega, double gamma, double dt) {
    if (dt < 0.0) throw ValidationError("dt >= 0");
    const auto o = damped_oscillation(omega, gamma, dt);
    const double h = 0.5 * gamma;
    return {o.cs + h * o.sn, o.sn, -omega * omega * o.sn, o.cs - h * o.sn};
}

Matrix2 pulse_map(double depth, double omega_z) {
    const auto t = pulse_timings(depth, omega_z);
    return segment_map(omega_z, 0.0, t.tau_high) *
           segment_map(omega_z * std::sqrt(depth), 0.0, t.tau_low);
}

CovarianceState propagate(const CovarianceState& s, double omega, double gamma,
                          double velocity_diffusion, double dt) {
    if (!(omega > 0.0)) throw ValidationError("omega > 0");
    if (!(gamma >= 0.0)) throw ValidationError("gamma >= 0");
    if (!(velocity_diffusion >= 0.0)) throw ValidationError("diffusion >= 0");
    const Matrix2 m = segment_map(omega, gamma, dt);

    CovarianceState out;
    out.mean_z = m.a * s.mean_z + m.b * s.mean_v;
    out.mean_v = m.c * s.mean_z + m.d * s.mean_v;

    // M S M^T
    const double pz_z = m.a * s.zz + m.b * s.zv;
    const double pz_v = m.a * s.zv + m.b * s.vv;
    const double pv_z = m.c * s.zz + m.d * s.zv;
    const double pv_v = m.c * s.zv + m.d * s.vv;
    out.zz = pz_z * m.a + pz_v * m.b;
    out.zv = pz_z * m.c + pz_v * m.d;
    out.vv = pv_z * m.c + pv_v * m.d;

    // Process noise Q = Sigma_inf - M Sigma_inf M^T with the stationary
    // Sigma_inf = D/(2 gamma) diag(1/omega^2, 1), rewritten so the 1/gamma
    // cancels analytically and gamma = 0 is a regular point.
    if (velocity_diffusion > 0.0) {
        const double D = velocity_diffusion;
        const double w2 = omega * omega;
        const auto o = damped_oscillation(omega, gamma, dt);
        const double rt = relaxed_time(gamma, dt);
        const double sn2 = o.sn * o.sn;  // carries exp(-gamma dt)
        const double sncs = o.sn * o.cs;
        out.zz += D / (2.0 * w2) * (rt - sncs - 0.5 * gamma * sn2);
        out.zv += 0.5 * D * sn2;
        out.vv += 0.5 * D * (rt + sncs - 0.5 * gamma * sn2);
    }
    return out;
}

double velocity_diffusion(const GasEnvironment& gas, const ParticleSpec& particle) {
    const double g = gas_damping_rate(gas, particle);
    return 2.0 * g * constants::kBoltzmann * gas.temperature / mass_of(particle);
}

double predicted_expansion_db(int n_pulses, double depth) {
    if (n_pulses < 0) throw ValidationError("n_pulses >= 0");
    if (!(depth > 0.0 && depth <= 1.0)) throw ValidationError("0 < depth <= 1");
    return n_pulses * 10.0 * std::log10(1.0 / std::sqrt(depth));
}

GrowthConstants analytic_growth_constants(const ModulationSchedule& schedule) {
    const double p = schedule.period();
    const double ln_inv_s = -std::log(schedule.depth());
    return {p / (0.5 * ln_inv_s), p / ln_inv_s};
}

std::vector<CovarianceState> predict_moments(const SimConfig& config,
                                             const std::vector<double>& times) {
    config.validate();
    if (!std::is_sorted(times.begin(), times.end())) throw ValidationError("times sorted");
    const LangevinIntegrator layout(config);  // shares the breakpoint set only
    const auto& cuts = layout.breakpoints();

    CovarianceState state;
    if (const auto* th = std::get_if<ThermalInitialState>(&config.initial)) {
        state = CovarianceState::thermal(th->temperature, config.trap, config.particle);
    } else {
        const auto& p = std::get<PhaseSpacePoint>(config.initial);
        state.mean_z = p.position;
        state.mean_v = p.velocity;
    }
    const double omega = config.trap.angular_frequency;
    const double gas = gas_damping_rate(config.gas, config.particle);
    const double diffusion = velocity_diffusion(config.gas, config.particle);

    auto evolve = [&](double a, double b) {
        auto it = std::upper_bound(cuts.begin(), cuts.end(), a);
        while (a < b) {
            const double end = (it != cuts.end() && *it < b) ? *it++ : b;
            const double mid = 0.5 * (a + end);
            const double w = omega * std::sqrt(config.schedule.value(mid));
            const double g = gas + (layout.feedback_window_active(mid) ? config.feedback.gain : 0.0);
            state = propagate(state, w, g, diffusion, end - a);
            a = end;
        }
    };

    std::vector<CovarianceState> out;
    out.reserve(times.size());
    double t = 0.0;
    for (double target : times) {
        if (target < 0.0) throw ValidationError("times >= 0");
        evolve(t, target);
        t = target;
        out.push_back(state);
    }
    return out;
}

double ellipse_aspect_ratio(double zz, double zv, double vv, double omega) {
    // Scaled covariance [[zz, zv/w], [zv/w, vv/w^2]].
    const double a = zz;
    const double b = zv / omega;
    const double c = vv / (omega * omega);
    const double mean = 0.5 * (a + c);
    const double r = std::hypot(0.5 * (a - c), b);
    const double lo = mean - r;
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return std::sqrt((mean + r) / lo);
}

}  // namespace levitate
