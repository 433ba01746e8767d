#pragma once

#include <vector>

namespace levitate {

struct PulseTimings {
    double tau_low;   // s, quarter period of the softened trap
    double tau_high;  // s, quarter period of the nominal trap
};

// tau_low = pi / (2 omega sqrt(S)), tau_high = pi / (2 omega).
PulseTimings pulse_timings(double depth, double omega_z);

// Piecewise-constant power ratio S(t): `depth` during the low phase of each
// pulse, 1 everywhere else. Pulse k occupies
// [start + k P, start + (k+1) P) with P = tau_low + tau_high, low phase first.
class ModulationSchedule {
public:
    // No pulses: S(t) = 1 everywhere.
    ModulationSchedule() = default;
    ModulationSchedule(double depth, double tau_low, double tau_high, int pulse_count,
                       double start_time = 0.0);

    // Quarter-period timings for a trap of angular frequency omega_z.
    static ModulationSchedule for_trap(double depth, double omega_z, int pulse_count,
                                       double start_time = 0.0);

    double depth() const { return depth_; }
    double tau_low() const { return tau_low_; }
    double tau_high() const { return tau_high_; }
    int pulse_count() const { return pulse_count_; }
    double start_time() const { return start_time_; }

    double period() const { return tau_low_ + tau_high_; }
    double end_time() const { return start_time_ + pulse_count_ * period(); }
    double total_low_time() const { return pulse_count_ * tau_low_; }

    double value(double t) const;

private:
    double depth_ = 1.0;
    double tau_low_ = 0.0;
    double tau_high_ = 0.0;
    int pulse_count_ = 0;
    double start_time_ = 0.0;
};

double schedule_value(const ModulationSchedule& schedule, double t);

// 1 / (tau_low + tau_high), in Hz. Requires at least one pulse.
double modulation_frequency(const ModulationSchedule& schedule);

// Every switch instant followed by the protocol end:
// [start, start + tau_low, start + P, ..., start + n P]. Empty for n = 0.
std::vector<double> transition_times(const ModulationSchedule& schedule);

}  // namespace levitate
