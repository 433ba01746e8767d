#include "levitate/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "levitate/constants.hpp"
#include "levitate/errors.hpp"

namespace levitate {

double SimConfig::resolved_time_step() const {
    if (time_step > 0.0) return time_step;
    return 2.0 * constants::kPi / (200.0 * trap.angular_frequency);
}

double SimConfig::feedback_on_from() const {
    return feedback.on_from.value_or(schedule.end_time());
}

void SimConfig::validate() const {
    particle.validate();
    gas.validate();
    trap.validate();
    if (!(time_step >= 0.0) || !std::isfinite(time_step)) throw ValidationError("time_step > 0");
    if (!(duration >= 0.0) || !std::isfinite(duration)) throw ValidationError("duration >= 0");
    if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
        throw ValidationError("sample_rate > 0");
    if (sample_rate * resolved_time_step() > 1.0 + 1e-12)
        throw ValidationError("sample_rate <= 1/time_step");
    if (!(feedback.gain >= 0.0)) throw ValidationError("feedback gain >= 0");
    if (!(feedback.lock_amplitude >= 0.0)) throw ValidationError("lock_amplitude >= 0");
    if (const auto* th = std::get_if<ThermalInitialState>(&initial)) {
        if (!(th->temperature >= 0.0)) throw ValidationError("initial temperature >= 0");
    } else {
        const auto& p = std::get<PhaseSpacePoint>(initial);
        if (!std::isfinite(p.position) || !std::isfinite(p.velocity))
            throw ValidationError("initial state finite");
    }
}

PhaseSpacePoint draw_initial_state(double temperature, const TrapSpec& trap,
                                   const ParticleSpec& particle, RandomStream& rng) {
    if (!(temperature >= 0.0)) throw ValidationError("temperature >= 0");
    const double sz = std::sqrt(thermal_position_variance(temperature, trap, particle));
    const double sv = std::sqrt(thermal_velocity_variance(temperature, particle));
    const double z = sz * rng.normal();
    const double v = sv * rng.normal();
    return {z, v};
}

LangevinIntegrator::LangevinIntegrator(const SimConfig& config)
    : config_(config),
      time_step_(config.resolved_time_step()),
      gas_damping_(gas_damping_rate(config.gas, config.particle)),
      thermal_velocity_variance_(thermal_velocity_variance(config.gas.temperature,
                                                           config.particle)) {
    config_.validate();
    breakpoints_ = transition_times(config_.schedule);
    if (config_.feedback.active_before_protocol)
        breakpoints_.push_back(config_.schedule.start_time());
    breakpoints_.push_back(config_.feedback_on_from());
    if (std::isfinite(config_.feedback.on_until)) breakpoints_.push_back(config_.feedback.on_until);
    std::sort(breakpoints_.begin(), breakpoints_.end());
    breakpoints_.erase(std::unique(breakpoints_.begin(), breakpoints_.end()), breakpoints_.end());
}

bool LangevinIntegrator::feedback_window_active(double t) const {
    const auto& fb = config_.feedback;
    if (fb.gain == 0.0) return false;
    if (fb.active_before_protocol && t < config_.schedule.start_time()) return true;
    return t >= config_.feedback_on_from() && t < fb.on_until;
}

LangevinIntegrator::Coefficients LangevinIntegrator::coefficients(double total_damping,
                                                                  double dt) const {
    if (total_damping == 0.0) return {1.0, 0.0};
    // Stationary OU variance under total damping is Gamma_m kT / (m gamma).
    const double one_minus_c2 = -std::expm1(-2.0 * total_damping * dt);
    const double var = gas_damping_ * thermal_velocity_variance_ * one_minus_c2 / total_damping;
    return {std::exp(-total_damping * dt), std::sqrt(var)};
}

PhaseSpacePoint LangevinIntegrator::step_with(PhaseSpacePoint s, double depth, double dt,
                                              const Coefficients& c,
                                              RandomStream& rng) const {
    const double half = 0.5 * dt;
    double z = s.position;
    double v = s.velocity;
    v += half * depth * axial_acceleration(config_.trap, z);
    z += half * v;
    v = c.decay * v;
    if (c.noise_std != 0.0) v += c.noise_std * rng.normal();
    z += half * v;
    v += half * depth * axial_acceleration(config_.trap, z);
    return {z, v};
}

PhaseSpacePoint LangevinIntegrator::step(PhaseSpacePoint state, double t, double dt,
                                         RandomStream& rng) const {
    const double mid = t + 0.5 * dt;
    const double depth = config_.schedule.value(mid);
    bool fb = feedback_window_active(mid);
    if (fb && config_.feedback.lock_amplitude > 0.0)
        fb = std::abs(state.position) < config_.feedback.lock_amplitude;
    const double gamma = gas_damping_ + (fb ? config_.feedback.gain : 0.0);
    auto next = step_with(state, depth, dt, coefficients(gamma, dt), rng);
    if (!std::isfinite(next.position) || !std::isfinite(next.velocity))
        throw NonFiniteState(t + dt);
    return next;
}

PhaseSpacePoint LangevinIntegrator::advance(PhaseSpacePoint state, double t0, double t1,
                                            RandomStream& rng) const {
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t0);
    double a = t0;
    const double lock = config_.feedback.lock_amplitude;
    while (a < t1) {
        double b = t1;
        if (it != breakpoints_.end() && *it < t1) b = *it++;
        const double span = b - a;
        const auto n = static_cast<std::uint64_t>(
            std::max(1.0, std::ceil(span / time_step_ * (1.0 - 1e-12))));
        const double h = span / static_cast<double>(n);
        const double mid = a + 0.5 * span;
        const double depth = config_.schedule.value(mid);
        const bool window = feedback_window_active(mid);
        const Coefficients open = coefficients(gas_damping_, h);
        const Coefficients locked =
            window ? coefficients(gas_damping_ + config_.feedback.gain, h) : open;
        for (std::uint64_t k = 0; k < n; ++k) {
            const bool fb = window && (lock == 0.0 || std::abs(state.position) < lock);
            state = step_with(state, depth, h, fb ? locked : open, rng);
            if (!std::isfinite(state.position) || !std::isfinite(state.velocity))
                throw NonFiniteState(a + static_cast<double>(k + 1) * h);
        }
        steps_taken_ += n;
        a = b;
    }
    return state;
}

PhaseSpacePoint step(PhaseSpacePoint state, const SimConfig& config, double t, double dt,
                     RandomStream& rng) {
    return LangevinIntegrator(config).step(state, t, dt, rng);
}

std::size_t sample_count(const SimConfig& config) {
    return static_cast<std::size_t>(std::floor(config.duration * config.sample_rate * (1.0 + 1e-12))) + 1;
}

Trajectory simulate(const SimConfig& config, std::uint64_t stream) {
    const LangevinIntegrator integrator(config);
    RandomStream rng(config.seed, stream);

    PhaseSpacePoint state;
    if (const auto* th = std::get_if<ThermalInitialState>(&config.initial))
        state = draw_initial_state(th->temperature, config.trap, config.particle, rng);
    else
        state = std::get<PhaseSpacePoint>(config.initial);

    const std::size_t n = sample_count(config);
    Trajectory out;
    out.sample_period = 1.0 / config.sample_rate;
    out.seed_used = config.seed;
    out.stream = stream;
    out.positions.reserve(n);
    out.velocities.reserve(n);
    out.positions.push_back(state.position);
    out.velocities.push_back(state.velocity);
    double t = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        const double next = static_cast<double>(k) / config.sample_rate;
        state = integrator.advance(state, t, next, rng);
        out.positions.push_back(state.position);
        out.velocities.push_back(state.velocity);
        t = next;
    }
    return out;
}

namespace {

Trajectory simulate_indexed(const SimConfig& config, std::size_t index) {
    try {
        return simulate(config, index);
    } catch (const NonFiniteState& e) {
        throw NonFiniteState(e.time(), index);
    }
}

}  // namespace

std::vector<Trajectory> simulate_ensemble(const SimConfig& config, std::size_t count,
                                          std::size_t first, unsigned threads) {
    config.validate();
    std::vector<Trajectory> out(count);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) out[i] = simulate_indexed(config, first + i);
        return out;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < count; i += threads)
                    out[i] = simulate_indexed(config, first + i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace levitate
