#include "levitate/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "levitate/constants.hpp"
#include "levitate/errors.hpp"
#include "levitate/oracle.hpp"

namespace levitate {

using constants::kBoltzmann;
using constants::kHbar;

void EnsembleAccumulator::add(std::span<const double> z, std::span<const double> v,
                              double sample_period) {
    if (z.size() != v.size()) throw GridMismatch("positions and velocities differ in length");
    if (runs_ == 0) {
        sample_period_ = sample_period;
        mz_.assign(z.size(), 0.0);
        mv_.assign(z.size(), 0.0);
        szz_.assign(z.size(), 0.0);
        svv_.assign(z.size(), 0.0);
        szv_.assign(z.size(), 0.0);
    } else if (z.size() != mz_.size() || sample_period != sample_period_) {
        throw GridMismatch("trajectories do not share a sample grid");
    }
    ++runs_;
    const double inv = 1.0 / static_cast<double>(runs_);
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double dz = z[i] - mz_[i];
        const double dv = v[i] - mv_[i];
        mz_[i] += dz * inv;
        mv_[i] += dv * inv;
        szz_[i] += dz * (z[i] - mz_[i]);
        svv_[i] += dv * (v[i] - mv_[i]);
        szv_[i] += dz * (v[i] - mv_[i]);
    }
}

EnsembleStats EnsembleAccumulator::finish() const {
    if (runs_ < 2) throw ValidationError("run_count >= 2");
    const double norm = 1.0 / static_cast<double>(runs_ - 1);
    EnsembleStats s;
    s.run_count = runs_;
    const std::size_t n = mz_.size();
    s.times.resize(n);
    s.sigma_z.resize(n);
    s.sigma_v.resize(n);
    s.cov_zv.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.times[i] = static_cast<double>(i) * sample_period_;
        s.sigma_z[i] = std::sqrt(std::max(szz_[i] * norm, 0.0));
        s.sigma_v[i] = std::sqrt(std::max(svv_[i] * norm, 0.0));
        s.cov_zv[i] = szv_[i] * norm;
    }
    s.mean_z = mz_;
    s.mean_v = mv_;
    return s;
}

EnsembleStats ensemble_stats(std::span<const Trajectory> trajectories) {
    EnsembleAccumulator acc;
    for (const auto& t : trajectories) acc.add(t);
    return acc.finish();
}

double expansion_db(double sigma, double sigma_ref) {
    if (!(sigma > 0.0 && sigma_ref > 0.0)) throw ValidationError("sigma > 0 and sigma_ref > 0");
    return 10.0 * std::log10(sigma / sigma_ref);
}

double expansion_db_variance(double sigma, double sigma_ref) {
    return 2.0 * expansion_db(sigma, sigma_ref);
}

double effective_temperature(double sigma_sq, double sigma_sq_reference,
                             double reference_temperature) {
    if (!(sigma_sq > 0.0 && sigma_sq_reference > 0.0))
        throw ValidationError("sigma_sq > 0 and sigma_sq_reference > 0");
    return reference_temperature * sigma_sq / sigma_sq_reference;
}

double phonon_occupation(double temperature, double omega) {
    if (!(temperature >= 0.0)) throw ValidationError("temperature >= 0");
    if (temperature == 0.0) return 0.0;
    return 1.0 / std::expm1(kHbar * omega / (kBoltzmann * temperature));
}

double thermal_spread(double temperature, const ParticleSpec& particle, const TrapSpec& trap) {
    if (!(temperature >= 0.0)) throw ValidationError("temperature >= 0");
    const double w = trap.angular_frequency;
    const double zero_point = kHbar / (2.0 * mass_of(particle) * w);
    if (temperature == 0.0) return std::sqrt(zero_point);
    const double x = kHbar * w / (2.0 * kBoltzmann * temperature);
    return std::sqrt(zero_point / std::tanh(x));
}

GrowthFit growth_time_constant(std::span<const double> times, std::span<const double> sigma,
                               std::pair<double, double> window) {
    if (times.size() != sigma.size()) throw GridMismatch("times and sigma differ in length");
    const auto [lo, hi] = window;
    // Grid times are products i * dt; allow them to miss the edges by rounding.
    const double slack = 1e-9 * (hi - lo);
    if (times.empty() || !(lo < hi) || lo < times.front() - slack || hi > times.back() + slack)
        throw BadWindow("window must lie inside the sampled range");
    double st = 0, sy = 0, stt = 0, sty = 0, syy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < lo - slack || times[i] > hi + slack) continue;
        if (!(sigma[i] > 0.0)) throw BadWindow("sigma must be positive inside the window");
        const double t = times[i];
        const double y = std::log(sigma[i]);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        syy += y * y;
        ++n;
    }
    if (n < 2) throw BadWindow("window holds fewer than two samples");
    const double nn = static_cast<double>(n);
    const double vt = stt - st * st / nn;
    const double cty = sty - st * sy / nn;
    const double vy = syy - sy * sy / nn;
    GrowthFit fit;
    fit.points = n;
    fit.slope = cty / vt;
    fit.intercept = (sy - fit.slope * st) / nn;
    fit.r_squared = vy > 0.0 ? cty * cty / (vt * vy) : 1.0;
    // A flat curve (to rounding) has no growth time.
    const double scale = std::max(std::abs(sy / nn), 1.0);
    if (std::abs(fit.slope) * (hi - lo) <= 1e-12 * scale) {
        fit.slope = 0.0;
        fit.tau = std::numeric_limits<double>::infinity();
        fit.finite = false;
    } else {
        fit.tau = 1.0 / fit.slope;
        fit.finite = true;
    }
    return fit;
}

GrowthFit growth_time_constant(const EnsembleStats& stats, std::pair<double, double> window) {
    return growth_time_constant(stats.times, stats.sigma_z, window);
}

std::vector<double> moving_average(std::span<const double> values, std::size_t window) {
    if (window == 0 || window % 2 == 0) throw ValidationError("smoothing window odd and >= 1");
    const std::size_t n = values.size();
    std::vector<double> out(n, 0.0);
    if (n == 0) return out;
    if (window > n) throw ValidationError("smoothing window <= sample count");
    const std::size_t h = window / 2;
    double sum = 0.0;
    for (std::size_t i = 0; i < window; ++i) sum += values[i];
    out[h] = sum / static_cast<double>(window);
    for (std::size_t i = h + 1; i + h < n; ++i) {
        sum += values[i + h] - values[i - h - 1];
        out[i] = sum / static_cast<double>(window);
    }
    for (std::size_t i = 0; i < h; ++i) {
        out[i] = out[h];
        out[n - 1 - i] = out[n - 1 - h];
    }
    return out;
}

Peak find_peak(std::span<const double> times, std::span<const double> sigma,
               std::size_t smoothing_window) {
    if (times.size() != sigma.size()) throw GridMismatch("times and sigma differ in length");
    const auto smooth = moving_average(sigma, smoothing_window);
    const std::size_t n = smooth.size();
    const std::size_t h = smoothing_window / 2;
    const std::size_t reach = std::max<std::size_t>(smoothing_window, 1);
    // Only points whose smoothing window and neighbourhood are both complete.
    for (std::size_t i = h + reach; i + h + reach < n; ++i) {
        bool is_max = smooth[i] > smooth[i - 1];
        for (std::size_t j = i - reach; is_max && j <= i + reach; ++j)
            if (smooth[j] > smooth[i]) is_max = false;
        if (!is_max) continue;
        Peak p;
        p.index = i;
        p.time = times[i];
        p.sigma = smooth[i];
        p.envelope = *std::max_element(sigma.begin() + static_cast<std::ptrdiff_t>(i - h),
                                       sigma.begin() + static_cast<std::ptrdiff_t>(i + h + 1));
        return p;
    }
    throw NoPeak("smoothed curve has no interior local maximum");
}

Peak find_peak(const EnsembleStats& stats, std::size_t smoothing_window) {
    return find_peak(stats.times, stats.sigma_z, smoothing_window);
}

namespace {

double sample_std(std::span<const double> x) {
    if (x.size() < 2) return 0.0;
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double q = 0.0;
    for (double v : x) q += (v - m) * (v - m);
    return std::sqrt(q / static_cast<double>(x.size() - 1));
}

std::vector<double> symmetric_edges(double half_width, std::size_t bins) {
    std::vector<double> e(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
        e[i] = -half_width + 2.0 * half_width * static_cast<double>(i) / static_cast<double>(bins);
    return e;
}

std::size_t bin_of(double x, const std::vector<double>& edges) {
    const std::size_t bins = edges.size() - 1;
    const double lo = edges.front();
    const double width = (edges.back() - lo) / static_cast<double>(bins);
    const double k = std::floor((x - lo) / width);
    if (!(k >= 0.0)) return 0;
    return std::min(static_cast<std::size_t>(k), bins - 1);
}

}  // namespace

PhaseSpaceHistogram phase_space_histogram(std::span<const double> z, std::span<const double> v,
                                          double time, std::size_t bins) {
    if (z.size() != v.size()) throw GridMismatch("z and v sample counts differ");
    if (bins == 0) throw ValidationError("bins >= 1");
    PhaseSpaceHistogram h;
    h.time = time;
    h.bins = bins;
    h.run_count = z.size();
    // A degenerate (zero-spread) axis still gets a finite, positive width.
    const double sz = sample_std(z);
    const double sv = sample_std(v);
    const double tiny = std::numeric_limits<double>::min();
    h.z_edges = symmetric_edges(std::max(4.0 * sz, tiny), bins);
    h.v_edges = symmetric_edges(std::max(4.0 * sv, tiny), bins);
    h.counts.assign(bins * bins, 0);
    for (std::size_t i = 0; i < z.size(); ++i)
        ++h.counts[bin_of(z[i], h.z_edges) * bins + bin_of(v[i], h.v_edges)];
    return h;
}

std::size_t grid_index(double time, double sample_period, std::size_t size) {
    const double k = std::round(time / sample_period);
    if (k < 0.0 || k >= static_cast<double>(size) ||
        std::abs(k * sample_period - time) > 1e-6 * sample_period)
        throw GridMismatch("time " + std::to_string(time) + " s is not on the sample grid");
    return static_cast<std::size_t>(k);
}

PhaseSpaceHistogram phase_space_histogram(std::span<const Trajectory> trajectories, double time,
                                          std::size_t bins) {
    if (trajectories.empty()) throw ValidationError("at least one trajectory");
    const auto& first = trajectories.front();
    std::vector<double> z, v;
    z.reserve(trajectories.size());
    v.reserve(trajectories.size());
    for (const auto& t : trajectories) {
        if (t.size() != first.size() || t.sample_period != first.sample_period)
            throw GridMismatch("trajectories do not share a sample grid");
        const std::size_t i = grid_index(time, t.sample_period, t.size());
        z.push_back(t.positions[i]);
        v.push_back(t.velocities[i]);
    }
    return phase_space_histogram(z, v, time, bins);
}

double sample_aspect_ratio(std::span<const double> z, std::span<const double> v, double omega) {
    if (z.size() != v.size() || z.size() < 2) throw ValidationError("paired samples, n >= 2");
    const double n = static_cast<double>(z.size());
    double mz = 0, mv = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        mz += z[i];
        mv += v[i];
    }
    mz /= n;
    mv /= n;
    double zz = 0, zv = 0, vv = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        zz += (z[i] - mz) * (z[i] - mz);
        zv += (z[i] - mz) * (v[i] - mv);
        vv += (v[i] - mv) * (v[i] - mv);
    }
    return ellipse_aspect_ratio(zz / (n - 1), zv / (n - 1), vv / (n - 1), omega);
}

}  // namespace levitate
