#include "levitate/modulation.hpp"

#include <cmath>

#include "levitate/constants.hpp"
#include "levitate/errors.hpp"

namespace levitate {

PulseTimings pulse_timings(double depth, double omega_z) {
    if (!(depth > 0.0 && depth <= 1.0)) throw ValidationError("0 < depth <= 1");
    if (!(omega_z > 0.0)) throw ValidationError("omega_z > 0");
    const double tau_high = constants::kPi / (2.0 * omega_z);
    return {tau_high / std::sqrt(depth), tau_high};
}

ModulationSchedule::ModulationSchedule(double depth, double tau_low, double tau_high,
                                       int pulse_count, double start_time)
    : depth_(depth),
      tau_low_(tau_low),
      tau_high_(tau_high),
      pulse_count_(pulse_count),
      start_time_(start_time) {
    if (!(depth > 0.0 && depth <= 1.0)) throw ValidationError("0 < depth <= 1");
    if (pulse_count < 0) throw ValidationError("pulse_count >= 0");
    if (!std::isfinite(start_time)) throw ValidationError("start_time finite");
    if (pulse_count > 0 && !(tau_low > 0.0 && tau_high > 0.0))
        throw ValidationError("tau_low > 0 and tau_high > 0");
}

ModulationSchedule ModulationSchedule::for_trap(double depth, double omega_z,
                                                int pulse_count, double start_time) {
    const auto t = pulse_timings(depth, omega_z);
    return {depth, t.tau_low, t.tau_high, pulse_count, start_time};
}

double ModulationSchedule::value(double t) const {
    if (pulse_count_ == 0 || t < start_time_ || t >= end_time()) return 1.0;
    const double since = t - start_time_;
    const double k = std::floor(since / period());
    return since - k * period() < tau_low_ ? depth_ : 1.0;
}

double schedule_value(const ModulationSchedule& schedule, double t) {
    return schedule.value(t);
}

double modulation_frequency(const ModulationSchedule& schedule) {
    if (schedule.pulse_count() < 1) throw ValidationError("pulse_count >= 1");
    return 1.0 / schedule.period();
}

std::vector<double> transition_times(const ModulationSchedule& schedule) {
    std::vector<double> out;
    const int n = schedule.pulse_count();
    if (n == 0) return out;
    out.reserve(2 * static_cast<std::size_t>(n) + 1);
    for (int k = 0; k < n; ++k) {
        const double begin = schedule.start_time() + k * schedule.period();
        out.push_back(begin);
        out.push_back(begin + schedule.tau_low());
    }
    out.push_back(schedule.end_time());
    return out;
}

}  // namespace levitate
