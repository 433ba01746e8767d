#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "levitate/constants.hpp"
#include "levitate/integrator.hpp"

namespace levitate {

struct AnalysisSettings {
    bool bandpass = false;
    double bandpass_bandwidth_hz = 14e3;
    int bandpass_order = 3;
    bool differentiate = true;
    std::size_t smoothing_window = 51;
    double growth_window_start_s = 0.1e-3;
    double growth_window_end_s = 0.7e-3;
    // Eight frames over the first 0.8 ms, on the 2 MHz grid.
    std::vector<double> histogram_times_s = {0.0,      1.145e-4, 2.285e-4, 3.43e-4,
                                             4.57e-4,  5.715e-4, 6.855e-4, 8e-4};
    std::size_t histogram_bins = 41;
    std::size_t welch_segment = 16384;
    double welch_overlap = 0.5;
};

// Synthetic calibration record and Lorentzian fit band.
struct CalibrationSettings {
    double pressure_mbar = 5.0;
    double temperature_k = 300.0;
    double duration_s = 0.2;
    double detector_scale = 1.0;  // detector units per metre of the synthetic record
    double fit_min_hz = 0.0;      // 0: 0.25 f_z
    double fit_max_hz = 0.0;      // 0: 1.75 f_z
};

// Everything a run needs, in the user-facing units of the config file. The
// physics-level SimConfig is derived from it by sim().
struct RunConfig {
    double particle_radius_m = 100e-9;
    double particle_density_kg_m3 = 1800.0;
    double particle_refractive_index = 1.44;

    double gas_pressure_mbar = 3e-7;
    double gas_temperature_k = 300.0;
    double gas_molecular_mass_kg = constants::kAirMolecularMass;

    TrapModel trap_model = TrapModel::GaussianAxial;
    double trap_f_z_hz = 77.6e3;
    double trap_medium_index = 1.0;
    double trap_waist_m = 0.5e-6;
    double trap_wavelength_m = 1.55e-6;

    double modulation_depth = 0.9;
    int modulation_pulses = 1000;
    double modulation_start_s = 0.0;

    double feedback_gain_per_s = 2.0 / 0.044;
    bool feedback_before_protocol = true;
    std::optional<double> feedback_on_from_s;  // unset: protocol end
    double feedback_on_until_s = std::numeric_limits<double>::infinity();
    double feedback_lock_amplitude_m = 0.0;

    double sim_time_step_s = 0.0;  // 0: 1 / (200 f_z)
    double sim_duration_s = 8e-3;
    double sim_sample_rate_hz = 2e6;
    std::uint64_t sim_seed = 1070;
    std::size_t sim_ensemble = 671;
    bool sim_initial_thermal = true;
    double sim_initial_temperature_k = 4.18e-3;
    double sim_initial_z_m = 0.0;
    double sim_initial_v_m_s = 0.0;
    bool sim_keep_trajectories = false;
    std::size_t sim_trajectory_stride = 1;

    AnalysisSettings analysis;
    CalibrationSettings calibration;

    SimConfig sim() const;
    // Throws ValidationError naming the first violated invariant.
    void validate() const;
};

RunConfig paper_defaults();

// Flat "section.key = value" text; '#' starts a comment. Unknown keys,
// duplicates and malformed values raise ParseError; keys left out keep their
// default values. An input with no keys at all is rejected.
RunConfig parse_config_text(std::string_view text, const std::string& origin = "<config>");
RunConfig parse_config_file(const std::filesystem::path& path);

// Every key, one per line, in a stable order. parse_config_text inverts it.
std::string serialize_config(const RunConfig& config);

// Ordered (key, value) pairs as they appear in serialize_config.
std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace levitate
