#pragma once

#include <filesystem>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "levitate/analysis.hpp"
#include "levitate/config.hpp"
#include "levitate/dsp.hpp"
#include "levitate/oracle.hpp"

namespace levitate {

inline constexpr const char* kToolVersion = "1.0.0";

struct OutputFile {
    std::string path;    // relative to the output directory
    std::string sha256;  // lowercase hex
};

struct RunManifest {
    std::string command;
    std::string tool_version = kToolVersion;
    std::uint64_t seed = 0;
    std::string started;   // UTC, ISO 8601
    std::string finished;  // UTC, ISO 8601
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<OutputFile> outputs;

    std::string to_text() const;
    RunConfig run_config() const;
};

RunManifest read_manifest(const std::filesystem::path& path);

std::string sha256_hex(const std::filesystem::path& file);

// Summary metrics of one sigma_z(t) curve.
struct ExpansionMetrics {
    double sigma_ref = 0.0;  // sigma_z at t = 0
    std::optional<Peak> peak;
    double db_peak_amp = 0.0;           // envelope, amplitude convention
    double db_peak_amp_smoothed = 0.0;  // smoothed curve, amplitude convention
    double db_peak_var = 0.0;           // envelope, variance convention
    std::optional<GrowthFit> growth;
    std::optional<double> radius_crossing_time;  // first t with sigma_z > radius
    double thermal_spread_300k = 0.0;
    std::string peak_note;
    std::string growth_note;
};

// A missing peak or an unusable growth window is recorded in the notes. With
// strict = true a growth window outside the record raises BadWindow.
ExpansionMetrics expansion_metrics(const EnsembleStats& stats, const RunConfig& config,
                                   bool strict);

struct SimulateResult {
    RunManifest manifest;
    EnsembleStats stats;
    ExpansionMetrics metrics;
    std::vector<PhaseSpaceHistogram> histograms;
};

// Runs config.sim_ensemble trajectories and writes stats.csv, metrics.txt,
// histogram_*.csv, trajectories/ (when kept) and manifest.txt.
SimulateResult run_simulate(const RunConfig& config, const std::filesystem::path& out_dir,
                            unsigned threads = 0);

struct OracleResult {
    RunManifest manifest;
    Matrix2 pulse;
    double db_per_pulse = 0.0;
    double cumulative_db = 0.0;  // after config.modulation_pulses pulses
    GrowthConstants growth{};
};

// Linear-model predictions: oracle.csv (moments on the sample grid),
// oracle_gain.csv (cumulative dB per pulse) and oracle_summary.txt.
OracleResult run_oracle(const RunConfig& config, const std::filesystem::path& out_dir);

struct CalibrationReport {
    RunManifest manifest;
    dsp::SpectrumEstimate spectrum;
    dsp::LorentzianFit fit;
    double factor = 0.0;           // metres per detector unit
    double sigma_sq_reference = 0.0;  // calibrated variance of the reference record, m^2
    std::optional<double> sigma_sq_cold;  // m^2
    double effective_temperature = 0.0;   // K, of the cold record (or the reference)
    double phonon_occupation = 0.0;
    double thermal_spread_reference = 0.0;  // m, at calibration temperature
    double thermal_spread_effective = 0.0;  // m, at effective temperature
};

// The reference record is either a trajectory CSV (its z column read as raw
// detector units) or, when `input` is empty, a synthetic thermal record at
// the calibration settings multiplied by calibration.detector_scale.
// `cold_input` is converted with the fitted factor to report T_eff and n.
CalibrationReport run_calibrate(const RunConfig& config,
                                const std::optional<std::filesystem::path>& input,
                                const std::optional<std::filesystem::path>& cold_input,
                                const std::filesystem::path& out_dir);

// Synthetic thermal detector record used by run_calibrate.
Trajectory synthetic_calibration_record(const RunConfig& config);

struct AnalyzeResult {
    RunManifest manifest;
    EnsembleStats stats;
    ExpansionMetrics metrics;
    std::vector<PhaseSpaceHistogram> histograms;
};

// Reads every traj_*.csv under trajectory_dir and runs the measurement chain:
// optional band-pass, velocity by differentiation, ensemble statistics, dB
// curve, growth fit, peak and histograms.
AnalyzeResult run_analyze(const std::filesystem::path& trajectory_dir, const RunConfig& config,
                          const std::filesystem::path& out_dir);

struct ProtocolSummary {
    double tau_low = 0.0;
    double tau_high = 0.0;
    double modulation_frequency = 0.0;  // Hz, 0 without pulses
    double frequency_ratio = 0.0;       // f_S / f_z
    double duration = 0.0;
    int pulses = 0;
    std::string to_text() const;
};

ProtocolSummary protocol_summary(const RunConfig& config);

// CSV helpers shared with the CLI and tests.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory,
                          std::size_t stride = 1);
Trajectory read_trajectory_csv(const std::filesystem::path& path);
void write_stats_csv(const std::filesystem::path& path, const EnsembleStats& stats);

}  // namespace levitate
