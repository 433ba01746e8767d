#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "levitate/integrator.hpp"

namespace levitate {

struct EnsembleStats {
    std::vector<double> times;    // s
    std::vector<double> mean_z;   // m
    std::vector<double> mean_v;   // m/s
    std::vector<double> sigma_z;  // m
    std::vector<double> sigma_v;  // m/s
    std::vector<double> cov_zv;   // m^2/s
    std::size_t run_count = 0;

    std::size_t size() const { return times.size(); }
};

// Streaming, order-deterministic accumulation of per-time ensemble moments
// (Welford across runs, unbiased N-1 divisor). Lets large ensembles be reduced
// without holding every trajectory in memory.
class EnsembleAccumulator {
public:
    EnsembleAccumulator() = default;

    void add(std::span<const double> positions, std::span<const double> velocities,
             double sample_period);
    void add(const Trajectory& trajectory) {
        add(trajectory.positions, trajectory.velocities, trajectory.sample_period);
    }

    std::size_t run_count() const { return runs_; }
    double sample_period() const { return sample_period_; }
    EnsembleStats finish() const;

private:
    std::size_t runs_ = 0;
    double sample_period_ = 0.0;
    std::vector<double> mz_, mv_, szz_, svv_, szv_;
};

EnsembleStats ensemble_stats(std::span<const Trajectory> trajectories);

// 10 log10(sigma / sigma_ref): the amplitude convention.
double expansion_db(double sigma, double sigma_ref);
// 10 log10(sigma^2 / sigma_ref^2), offered alongside as the variance convention.
double expansion_db_variance(double sigma, double sigma_ref);

// reference_temperature * sigma_sq / sigma_sq_reference
double effective_temperature(double sigma_sq, double sigma_sq_reference,
                             double reference_temperature = 300.0);

// 1 / (exp(hbar omega / k_B T) - 1)
double phonon_occupation(double temperature, double omega);

// sqrt(hbar / (2 m omega) coth(hbar omega / (2 k_B T))); zero-point width at T = 0.
double thermal_spread(double temperature, const ParticleSpec& particle, const TrapSpec& trap);

struct GrowthFit {
    double tau = 0.0;        // s; +inf for a flat curve
    double slope = 0.0;      // 1/s, of ln sigma_z
    double intercept = 0.0;  // ln(m) at t = 0
    double r_squared = 0.0;
    std::size_t points = 0;
    bool finite = false;
};

// Least-squares line through ln sigma_z(t) for t in [window.first, window.second].
GrowthFit growth_time_constant(std::span<const double> times, std::span<const double> sigma,
                               std::pair<double, double> window);
GrowthFit growth_time_constant(const EnsembleStats& stats, std::pair<double, double> window);

// Centered moving average over full windows only; the first and last
// (window - 1)/2 entries copy the nearest full-window value.
std::vector<double> moving_average(std::span<const double> values, std::size_t window);

struct Peak {
    std::size_t index = 0;
    double time = 0.0;          // s
    double sigma = 0.0;         // m, smoothed curve at the peak
    double envelope = 0.0;      // m, largest raw sample within the smoothing window
};

// First local maximum of the smoothed curve: the first interior point that
// is not exceeded by any smoothed value within +/- smoothing_window samples.
Peak find_peak(std::span<const double> times, std::span<const double> sigma,
               std::size_t smoothing_window = 51);
Peak find_peak(const EnsembleStats& stats, std::size_t smoothing_window = 51);

struct PhaseSpaceHistogram {
    double time = 0.0;
    std::vector<double> z_edges;  // bins + 1
    std::vector<double> v_edges;  // bins + 1
    std::vector<std::size_t> counts;  // row-major [z bin][v bin]
    std::size_t bins = 0;
    std::size_t run_count = 0;

    std::size_t at(std::size_t iz, std::size_t iv) const { return counts[iz * bins + iv]; }
};

// Samples of (z, v) across runs, symmetric edges at +/- 4 sigma per axis;
// out-of-range samples land in the outermost bins.
PhaseSpaceHistogram phase_space_histogram(std::span<const double> z, std::span<const double> v,
                                          double time, std::size_t bins);
PhaseSpaceHistogram phase_space_histogram(std::span<const Trajectory> trajectories, double time,
                                          std::size_t bins);

// Index of `time` on a sample grid, or GridMismatch if it is not on it.
std::size_t grid_index(double time, double sample_period, std::size_t size);

// Major/minor semi-axis ratio of the sample covariance in (z, v / omega).
double sample_aspect_ratio(std::span<const double> z, std::span<const double> v, double omega);

}  // namespace levitate
