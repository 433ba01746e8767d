#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <variant>
#include <vector>

#include "levitate/modulation.hpp"
#include "levitate/physics.hpp"
#include "levitate/rng.hpp"

namespace levitate {

// Cold damping -gain * v. The feedback loop is locked (active) before the
// protocol starts and inside [on_from, on_until); on_from defaults to the end
// of the pulse train. With lock_amplitude > 0 it additionally requires
// |z| < lock_amplitude at the start of each step.
struct FeedbackSettings {
    double gain = 2.0 / 0.044;  // 1/s; sigma_z relaxes with time constant 2/gain
    bool active_before_protocol = true;
    std::optional<double> on_from;  // s
    double on_until = std::numeric_limits<double>::infinity();  // s
    double lock_amplitude = 0.0;  // m, 0 disables the amplitude condition
};

struct ThermalInitialState {
    double temperature = 4.18e-3;  // K
};

using InitialState = std::variant<ThermalInitialState, PhaseSpacePoint>;

struct SimConfig {
    ParticleSpec particle;
    GasEnvironment gas;
    TrapSpec trap;
    ModulationSchedule schedule;
    FeedbackSettings feedback;
    double time_step = 0.0;    // s; 0 selects 1 / (200 f_z)
    double duration = 1e-3;    // s
    double sample_rate = 2e6;  // Hz
    std::uint64_t seed = 1;
    InitialState initial = ThermalInitialState{};

    double resolved_time_step() const;
    double feedback_on_from() const;
    void validate() const;
};

struct Trajectory {
    double sample_period = 0.0;
    std::vector<double> positions;
    std::vector<double> velocities;
    std::uint64_t seed_used = 0;
    std::uint64_t stream = 0;

    std::size_t size() const { return positions.size(); }
    double time(std::size_t i) const { return static_cast<double>(i) * sample_period; }
};

PhaseSpacePoint draw_initial_state(double temperature, const TrapSpec& trap,
                                   const ParticleSpec& particle, RandomStream& rng);

// Splitting integrator for
//   m dv = [S(t) F(z) - m (Gamma_m + gamma_fb(t)) v] dt + sqrt(2 m Gamma_m k_B T) dW
// Each step is: half kick, half drift, exact Ornstein-Uhlenbeck velocity
// update under the total damping and thermal noise, half drift, half kick.
class LangevinIntegrator {
public:
    explicit LangevinIntegrator(const SimConfig& config);

    // One step of size dt starting at t. [t, t + dt] must not contain a
    // modulation transition or a feedback window edge.
    PhaseSpacePoint step(PhaseSpacePoint state, double t, double dt, RandomStream& rng) const;

    // Integrates from t0 to t1, landing exactly on every discontinuity in
    // between and using the largest uniform sub-step <= time_step on each piece.
    PhaseSpacePoint advance(PhaseSpacePoint state, double t0, double t1,
                            RandomStream& rng) const;

    // Sorted instants at which the right-hand side changes discontinuously.
    const std::vector<double>& breakpoints() const { return breakpoints_; }

    bool feedback_window_active(double t) const;
    double gas_damping() const { return gas_damping_; }
    double time_step() const { return time_step_; }

    // Number of steps taken by advance() since construction. Used by tests to
    // assert the splitting structure.
    std::uint64_t steps_taken() const { return steps_taken_; }

private:
    struct Coefficients {
        double decay;      // exp(-gamma dt)
        double noise_std;  // velocity noise standard deviation per step
    };
    Coefficients coefficients(double total_damping, double dt) const;
    PhaseSpacePoint step_with(PhaseSpacePoint s, double depth, double dt,
                              const Coefficients& c, RandomStream& rng) const;

    SimConfig config_;
    double time_step_;
    double gas_damping_;
    double thermal_velocity_variance_;  // k_B T / m of the bath
    std::vector<double> breakpoints_;
    mutable std::uint64_t steps_taken_ = 0;
};

// One step with a freshly built integrator. Convenient, not fast.
PhaseSpacePoint step(PhaseSpacePoint state, const SimConfig& config, double t, double dt,
                     RandomStream& rng);

// Runs trajectory `stream` of the ensemble defined by config.seed.
Trajectory simulate(const SimConfig& config, std::uint64_t stream = 0);

// Runs trajectories [first, first + count) on up to `threads` worker threads.
// The result does not depend on the thread count.
std::vector<Trajectory> simulate_ensemble(const SimConfig& config, std::size_t count,
                                          std::size_t first = 0, unsigned threads = 0);

// Number of samples on the grid t_k = k / sample_rate, 0 <= t_k <= duration.
std::size_t sample_count(const SimConfig& config);

}  // namespace levitate
