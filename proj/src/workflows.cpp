#include "levitate/workflows.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "levitate/errors.hpp"

namespace levitate {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

// Writes `text` under dir/name and records its checksum.
class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) { ensure_dir(dir_); }

    fs::path path(const std::string& name) const { return dir_ / name; }

    void record(const std::string& name) {
        outputs_.push_back({name, sha256_hex(dir_ / name)});
    }

    void write(const std::string& name, const std::string& text) {
        {
            auto out = open_out(path(name));
            out << text;
            if (!out) throw IoError("write failed: " + path(name).string());
        }
        record(name);
    }

    std::vector<OutputFile> take() { return std::move(outputs_); }

private:
    fs::path dir_;
    std::vector<OutputFile> outputs_;
};

std::string stats_csv(const EnsembleStats& s) {
    std::string out = "t,sigma_z,sigma_v,cov_zv,db_amp,db_var\n";
    const double ref = s.sigma_z.empty() ? 0.0 : s.sigma_z.front();
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += format_double(s.times[i]) + ',' + format_double(s.sigma_z[i]) + ',' +
               format_double(s.sigma_v[i]) + ',' + format_double(s.cov_zv[i]) + ',';
        if (s.sigma_z[i] > 0.0 && ref > 0.0) {
            out += format_double(expansion_db(s.sigma_z[i], ref)) + ',' +
                   format_double(expansion_db_variance(s.sigma_z[i], ref));
        } else {
            out += "nan,nan";
        }
        out += '\n';
    }
    return out;
}

std::string histogram_csv(const PhaseSpaceHistogram& h) {
    std::string out = "t,z_lo,z_hi,v_lo,v_hi,count\n";
    for (std::size_t iz = 0; iz < h.bins; ++iz) {
        for (std::size_t iv = 0; iv < h.bins; ++iv) {
            out += format_double(h.time) + ',' + format_double(h.z_edges[iz]) + ',' +
                   format_double(h.z_edges[iz + 1]) + ',' + format_double(h.v_edges[iv]) + ',' +
                   format_double(h.v_edges[iv + 1]) + ',' + std::to_string(h.at(iz, iv)) + '\n';
        }
    }
    return out;
}

std::string histogram_name(std::size_t k) {
    std::ostringstream name;
    name << "histogram_" << std::setw(2) << std::setfill('0') << k << ".csv";
    return name.str();
}

std::string trajectory_name(std::size_t k) {
    std::ostringstream name;
    name << "traj_" << std::setw(5) << std::setfill('0') << k << ".csv";
    return name.str();
}

std::string kv(const std::string& key, const std::string& value) {
    return key + " = " + value + '\n';
}

std::string metrics_text(const ExpansionMetrics& m, const EnsembleStats& stats,
                         const RunConfig& config) {
    const SimConfig sim = config.sim();
    std::string out = "# expansion metrics\n";
    out += kv("run_count", std::to_string(stats.run_count));
    out += kv("sigma_ref_m", format_double(m.sigma_ref));
    if (m.peak) {
        out += kv("t_peak_s", format_double(m.peak->time));
        out += kv("sigma_peak_envelope_m", format_double(m.peak->envelope));
        out += kv("sigma_peak_smoothed_m", format_double(m.peak->sigma));
        out += kv("db_peak_amp", format_double(m.db_peak_amp));
        out += kv("db_peak_amp_smoothed", format_double(m.db_peak_amp_smoothed));
        out += kv("db_peak_var", format_double(m.db_peak_var));
        out += kv("peak_over_radius_minus_one",
                  format_double(m.peak->envelope / config.particle_radius_m - 1.0));
        out += kv("peak_over_thermal_spread_minus_one",
                  format_double(m.peak->envelope / m.thermal_spread_300k - 1.0));
    } else {
        out += kv("t_peak_s", "none");
        out += kv("peak_note", m.peak_note);
    }
    out += kv("growth_window_s", format_double(config.analysis.growth_window_start_s) + ", " +
                                     format_double(config.analysis.growth_window_end_s));
    if (m.growth) {
        out += kv("growth_tau_s", format_double(m.growth->tau));
        out += kv("growth_slope_per_s", format_double(m.growth->slope));
        out += kv("growth_r_squared", format_double(m.growth->r_squared));
    } else {
        out += kv("growth_tau_s", "none");
        out += kv("growth_note", m.growth_note);
    }
    if (sim.schedule.pulse_count() > 0) {
        const auto g = analytic_growth_constants(sim.schedule);
        out += kv("tau_amp_analytic_s", format_double(g.amplitude));
        out += kv("tau_var_analytic_s", format_double(g.variance));
    }
    out += kv("db_per_pulse_analytic",
              format_double(predicted_expansion_db(1, config.modulation_depth)));
    out += kv("radius_crossing_time_s",
              m.radius_crossing_time ? format_double(*m.radius_crossing_time) : "none");
    out += kv("thermal_spread_300k_m", format_double(m.thermal_spread_300k));
    return out;
}

std::vector<PhaseSpaceHistogram> build_histograms(
    const std::vector<std::vector<double>>& z, const std::vector<std::vector<double>>& v,
    const std::vector<double>& times, std::size_t bins) {
    std::vector<PhaseSpaceHistogram> out;
    for (std::size_t k = 0; k < times.size(); ++k)
        out.push_back(phase_space_histogram(z[k], v[k], times[k], bins));
    return out;
}

// Histogram frames that fall inside a grid of `size` samples.
std::vector<std::pair<double, std::size_t>> histogram_frames(const RunConfig& config,
                                                              double sample_period,
                                                              std::size_t size) {
    std::vector<std::pair<double, std::size_t>> frames;
    const double last = static_cast<double>(size - 1) * sample_period;
    for (double t : config.analysis.histogram_times_s) {
        if (t > last * (1.0 + 1e-12)) continue;
        frames.emplace_back(t, grid_index(t, sample_period, size));
    }
    return frames;
}

RunManifest begin_manifest(const std::string& command, const RunConfig& config) {
    RunManifest m;
    m.command = command;
    m.seed = config.sim_seed;
    m.started = utc_now();
    m.config = config_entries(config);
    return m;
}

void finish_manifest(RunManifest& m, OutputSet& outputs) {
    m.outputs = outputs.take();
    m.finished = utc_now();
    outputs.write("manifest.txt", m.to_text());
}

double sample_variance(std::span<const double> x) {
    if (x.size() < 2) throw TooShort("need at least two samples");
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double q = 0.0;
    for (double v : x) q += (v - mean) * (v - mean);
    return q / static_cast<double>(x.size() - 1);
}

}  // namespace

std::string sha256_hex(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot read " + file.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i)
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return hex.str();
}

std::string RunManifest::to_text() const {
    std::string out = "# levitate run manifest\n";
    out += kv("manifest.command", command);
    out += kv("manifest.tool_version", tool_version);
    out += kv("manifest.seed", std::to_string(seed));
    out += kv("manifest.started", started);
    out += kv("manifest.finished", finished);
    for (const auto& [k, v] : config) out += kv("config." + k, v);
    for (const auto& o : outputs) out += kv("output." + o.path + ".sha256", o.sha256);
    return out;
}

RunConfig RunManifest::run_config() const {
    std::string text;
    for (const auto& [k, v] : config) text += k + " = " + v + '\n';
    return parse_config_text(text, "<manifest>");
}

RunManifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read manifest " + path.string());
    RunManifest m;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) throw ParseError(path.string(), line_no, "expected 'key = value'");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 3);
        if (key == "manifest.command") m.command = value;
        else if (key == "manifest.tool_version") m.tool_version = value;
        else if (key == "manifest.seed") m.seed = std::stoull(value);
        else if (key == "manifest.started") m.started = value;
        else if (key == "manifest.finished") m.finished = value;
        else if (key.rfind("config.", 0) == 0) m.config.emplace_back(key.substr(7), value);
        else if (key.rfind("output.", 0) == 0 && key.size() > 14 &&
                 key.compare(key.size() - 7, 7, ".sha256") == 0)
            m.outputs.push_back({key.substr(7, key.size() - 14), value});
        else throw ParseError(path.string(), line_no, "unknown manifest key '" + key + "'");
    }
    return m;
}

void write_trajectory_csv(const fs::path& path, const Trajectory& t, std::size_t stride) {
    if (stride == 0) throw ValidationError("stride >= 1");
    std::string out = "t,z,v\n";
    for (std::size_t i = 0; i < t.size(); i += stride)
        out += format_double(t.time(i)) + ',' + format_double(t.positions[i]) + ',' +
               format_double(t.velocities[i]) + '\n';
    auto f = open_out(path);
    f << out;
    if (!f) throw IoError("write failed: " + path.string());
}

Trajectory read_trajectory_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("t,z,v", 0) != 0)
        throw ParseError(path.string(), 1, "expected header 't,z,v'");
    Trajectory t;
    std::vector<double> times;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        double vals[3];
        std::size_t pos = 0;
        for (int k = 0; k < 3; ++k) {
            const auto comma = line.find(',', pos);
            const std::string cell = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            try {
                std::size_t used = 0;
                vals[k] = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw ParseError(path.string(), line_no, "bad number '" + cell + "'");
            }
            if (comma == std::string::npos && k < 2)
                throw ParseError(path.string(), line_no, "expected three columns");
            pos = comma + 1;
        }
        times.push_back(vals[0]);
        t.positions.push_back(vals[1]);
        t.velocities.push_back(vals[2]);
    }
    if (times.size() < 2) throw TooShort(path.string() + ": fewer than two samples");
    t.sample_period = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    return t;
}

void write_stats_csv(const fs::path& path, const EnsembleStats& stats) {
    auto f = open_out(path);
    f << stats_csv(stats);
}

ExpansionMetrics expansion_metrics(const EnsembleStats& stats, const RunConfig& config,
                                   bool strict) {
    ExpansionMetrics m;
    const SimConfig sim = config.sim();
    m.sigma_ref = stats.sigma_z.empty() ? 0.0 : stats.sigma_z.front();
    m.thermal_spread_300k = thermal_spread(300.0, sim.particle, sim.trap);

    try {
        m.peak = find_peak(stats, config.analysis.smoothing_window);
        if (m.sigma_ref > 0.0 && m.peak->envelope > 0.0 && m.peak->sigma > 0.0) {
            m.db_peak_amp = expansion_db(m.peak->envelope, m.sigma_ref);
            m.db_peak_amp_smoothed = expansion_db(m.peak->sigma, m.sigma_ref);
            m.db_peak_var = expansion_db_variance(m.peak->envelope, m.sigma_ref);
        }
    } catch (const NoPeak& e) {
        m.peak_note = e.what();
    } catch (const ValidationError& e) {  // smoothing window longer than the record
        if (strict) throw;
        m.peak_note = e.what();
    }

    const double w0 = config.analysis.growth_window_start_s;
    const double w1 = config.analysis.growth_window_end_s;
    if (strict && !stats.times.empty() &&
        (w0 < stats.times.front() || w1 > stats.times.back() * (1.0 + 1e-12)))
        throw BadWindow("growth window [" + format_double(w0) + ", " + format_double(w1) +
                        "] s lies outside the record");
    try {
        m.growth = growth_time_constant(stats, {w0, w1});
    } catch (const BadWindow& e) {
        // Inside the record but unusable, e.g. a zero-spread ensemble.
        m.growth_note = e.what();
    }

    for (std::size_t i = 0; i < stats.size(); ++i) {
        if (stats.sigma_z[i] > config.particle_radius_m) {
            m.radius_crossing_time = stats.times[i];
            break;
        }
    }
    return m;
}

SimulateResult run_simulate(const RunConfig& config, const fs::path& out_dir, unsigned threads) {
    config.validate();
    const SimConfig sim = config.sim();
    SimulateResult result;
    result.manifest = begin_manifest("simulate", config);
    OutputSet outputs(out_dir);
    if (config.sim_keep_trajectories) ensure_dir(out_dir / "trajectories");

    const std::size_t n = sample_count(sim);
    const double period = 1.0 / sim.sample_rate;
    const auto frames = histogram_frames(config, period, n);
    std::vector<std::vector<double>> hz(frames.size()), hv(frames.size());

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t batch = std::max<std::size_t>(4 * threads, 16);
    EnsembleAccumulator acc;
    for (std::size_t first = 0; first < config.sim_ensemble; first += batch) {
        const std::size_t count = std::min(batch, config.sim_ensemble - first);
        const auto runs = simulate_ensemble(sim, count, first, threads);
        for (std::size_t k = 0; k < runs.size(); ++k) {
            const auto& run = runs[k];
            acc.add(run);
            for (std::size_t f = 0; f < frames.size(); ++f) {
                hz[f].push_back(run.positions[frames[f].second]);
                hv[f].push_back(run.velocities[frames[f].second]);
            }
            if (config.sim_keep_trajectories) {
                const std::string name = "trajectories/" + trajectory_name(first + k);
                write_trajectory_csv(outputs.path(name), run, config.sim_trajectory_stride);
                outputs.record(name);
            }
        }
    }

    result.stats = acc.finish();
    result.metrics = expansion_metrics(result.stats, config, false);
    std::vector<double> times;
    for (const auto& f : frames) times.push_back(f.first);
    result.histograms = build_histograms(hz, hv, times, config.analysis.histogram_bins);

    outputs.write("stats.csv", stats_csv(result.stats));
    outputs.write("metrics.txt", metrics_text(result.metrics, result.stats, config));
    for (std::size_t k = 0; k < result.histograms.size(); ++k)
        outputs.write(histogram_name(k), histogram_csv(result.histograms[k]));
    finish_manifest(result.manifest, outputs);
    return result;
}

OracleResult run_oracle(const RunConfig& config, const fs::path& out_dir) {
    config.validate();
    const SimConfig sim = config.sim();
    OracleResult r;
    r.manifest = begin_manifest("oracle", config);
    OutputSet outputs(out_dir);

    r.pulse = pulse_map(config.modulation_depth, sim.trap.angular_frequency);
    r.db_per_pulse = predicted_expansion_db(1, config.modulation_depth);
    r.cumulative_db = predicted_expansion_db(config.modulation_pulses, config.modulation_depth);
    r.growth = analytic_growth_constants(
        ModulationSchedule::for_trap(config.modulation_depth, sim.trap.angular_frequency, 1));

    const std::size_t n = sample_count(sim);
    std::vector<double> times(n);
    for (std::size_t i = 0; i < n; ++i) times[i] = static_cast<double>(i) / sim.sample_rate;
    const auto moments = predict_moments(sim, times);
    EnsembleStats s;
    s.times = times;
    s.run_count = 0;
    for (const auto& c : moments) {
        s.sigma_z.push_back(std::sqrt(std::max(c.zz, 0.0)));
        s.sigma_v.push_back(std::sqrt(std::max(c.vv, 0.0)));
        s.cov_zv.push_back(c.zv);
    }
    outputs.write("oracle.csv", stats_csv(s));

    std::string gain = "pulse,t,db_amp,db_var\n";
    for (int k = 0; k <= config.modulation_pulses; ++k) {
        const double db = predicted_expansion_db(k, config.modulation_depth);
        gain += std::to_string(k) + ',' + format_double(sim.schedule.start_time() + k * sim.schedule.period()) +
                ',' + format_double(db) + ',' + format_double(2.0 * db) + '\n';
    }
    outputs.write("oracle_gain.csv", gain);

    std::string summary = "# linear-model predictions\n";
    summary += kv("pulse_map", format_double(r.pulse.a) + ", " + format_double(r.pulse.b) + "; " +
                                   format_double(r.pulse.c) + ", " + format_double(r.pulse.d));
    summary += kv("pulse_map_determinant", format_double(r.pulse.determinant()));
    summary += kv("db_per_pulse_amp", format_double(r.db_per_pulse));
    summary += kv("db_per_pulse_var", format_double(2.0 * r.db_per_pulse));
    summary += kv("pulses", std::to_string(config.modulation_pulses));
    summary += kv("cumulative_db_amp", format_double(r.cumulative_db));
    summary += kv("tau_amp_s", format_double(r.growth.amplitude));
    summary += kv("tau_var_s", format_double(r.growth.variance));
    outputs.write("oracle_summary.txt", summary);
    finish_manifest(r.manifest, outputs);
    return r;
}

Trajectory synthetic_calibration_record(const RunConfig& config) {
    RunConfig c = config;
    c.trap_model = TrapModel::Harmonic;
    c.gas_pressure_mbar = config.calibration.pressure_mbar;
    c.gas_temperature_k = config.calibration.temperature_k;
    c.modulation_pulses = 0;
    c.feedback_gain_per_s = 0.0;
    c.sim_initial_thermal = true;
    c.sim_initial_temperature_k = config.calibration.temperature_k;
    c.sim_duration_s = config.calibration.duration_s;
    Trajectory t = simulate(c.sim(), 0);
    for (double& z : t.positions) z *= config.calibration.detector_scale;
    for (double& v : t.velocities) v *= config.calibration.detector_scale;
    return t;
}

CalibrationReport run_calibrate(const RunConfig& config, const std::optional<fs::path>& input,
                                const std::optional<fs::path>& cold_input,
                                const fs::path& out_dir) {
    config.validate();
    const SimConfig sim = config.sim();
    CalibrationReport r;
    r.manifest = begin_manifest("calibrate", config);
    OutputSet outputs(out_dir);

    const Trajectory record =
        input ? read_trajectory_csv(*input) : synthetic_calibration_record(config);
    const double fs_hz = 1.0 / record.sample_period;
    const std::size_t segment = std::min(config.analysis.welch_segment, record.size());
    r.spectrum = dsp::welch_psd(record.positions, fs_hz, segment, config.analysis.welch_overlap);

    const double f_lo = config.calibration.fit_min_hz > 0.0 ? config.calibration.fit_min_hz
                                                            : 0.25 * config.trap_f_z_hz;
    const double f_hi = config.calibration.fit_max_hz > 0.0 ? config.calibration.fit_max_hz
                                                            : 1.75 * config.trap_f_z_hz;
    const auto band = r.spectrum.crop(f_lo, f_hi);
    r.fit = dsp::lorentzian_fit(band, dsp::estimate_lorentzian_guess(band));
    const double t_cal = config.calibration.temperature_k;
    r.factor = dsp::calibration_factor(r.fit.integrated_area, t_cal, sim.particle, sim.trap);
    r.sigma_sq_reference = sample_variance(record.positions) * r.factor * r.factor;
    if (cold_input) {
        const Trajectory cold = read_trajectory_csv(*cold_input);
        r.sigma_sq_cold = sample_variance(cold.positions) * r.factor * r.factor;
        r.effective_temperature = effective_temperature(*r.sigma_sq_cold, r.sigma_sq_reference, t_cal);
    } else {
        r.effective_temperature = t_cal;
    }
    r.phonon_occupation = phonon_occupation(r.effective_temperature, sim.trap.angular_frequency);
    r.thermal_spread_reference = thermal_spread(t_cal, sim.particle, sim.trap);
    r.thermal_spread_effective = thermal_spread(r.effective_temperature, sim.particle, sim.trap);

    std::string spectrum = "f,density\n";
    for (std::size_t i = 0; i < r.spectrum.frequencies.size(); ++i)
        spectrum += format_double(r.spectrum.frequencies[i]) + ',' +
                    format_double(r.spectrum.density[i]) + '\n';
    outputs.write("spectrum.csv", spectrum);

    std::string report = "# calibration report\n";
    report += kv("source", input ? input->string() : std::string("synthetic"));
    report += kv("welch_segment", std::to_string(r.spectrum.segment_length));
    report += kv("welch_averages", std::to_string(r.spectrum.averages));
    report += kv("fit_band_hz", format_double(f_lo) + ", " + format_double(f_hi));
    report += kv("fit_center_frequency_hz", format_double(r.fit.center_frequency));
    report += kv("fit_linewidth_per_s", format_double(r.fit.linewidth));
    report += kv("fit_amplitude", format_double(r.fit.amplitude));
    report += kv("fit_noise_floor", format_double(r.fit.noise_floor));
    report += kv("fit_area", format_double(r.fit.integrated_area));
    report += kv("fit_residual_norm", format_double(r.fit.residual_norm));
    report += kv("fit_iterations", std::to_string(r.fit.iterations));
    report += kv("fit_converged", r.fit.converged ? "true" : "false");
    report += kv("calibration_temperature_k", format_double(t_cal));
    report += kv("calibration_factor_m_per_unit", format_double(r.factor));
    report += kv("sigma_sq_reference_m2", format_double(r.sigma_sq_reference));
    if (r.sigma_sq_cold) report += kv("sigma_sq_cold_m2", format_double(*r.sigma_sq_cold));
    report += kv("effective_temperature_k", format_double(r.effective_temperature));
    report += kv("phonon_occupation", format_double(r.phonon_occupation));
    report += kv("thermal_spread_reference_m", format_double(r.thermal_spread_reference));
    report += kv("thermal_spread_effective_m", format_double(r.thermal_spread_effective));
    outputs.write("calibration.txt", report);
    finish_manifest(r.manifest, outputs);
    return r;
}

AnalyzeResult run_analyze(const fs::path& trajectory_dir, const RunConfig& config,
                          const fs::path& out_dir) {
    config.validate();
    std::vector<fs::path> files;
    if (!fs::is_directory(trajectory_dir))
        throw IoError("not a directory: " + trajectory_dir.string());
    for (const auto& entry : fs::directory_iterator(trajectory_dir)) {
        const auto name = entry.path().filename().string();
        if (entry.is_regular_file() && name.rfind("traj_", 0) == 0 &&
            entry.path().extension() == ".csv")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.size() < 2) throw ValidationError("analyze needs at least 2 trajectories");

    AnalyzeResult r;
    r.manifest = begin_manifest("analyze", config);
    OutputSet outputs(out_dir);

    EnsembleAccumulator acc;
    std::vector<std::pair<double, std::size_t>> frames;
    std::vector<std::vector<double>> hz, hv;
    std::optional<dsp::BandpassFilter> filter;
    for (std::size_t k = 0; k < files.size(); ++k) {
        Trajectory t = read_trajectory_csv(files[k]);
        if (k == 0) {
            frames = histogram_frames(config, t.sample_period, t.size());
            hz.resize(frames.size());
            hv.resize(frames.size());
            if (config.analysis.bandpass)
                filter.emplace(1.0 / t.sample_period, config.trap_f_z_hz,
                               config.analysis.bandpass_bandwidth_hz, config.analysis.bandpass_order);
        }
        // Periods parsed from text can differ in the last bits.
        if (acc.run_count() > 0) {
            const auto ref = acc.sample_period();
            if (std::abs(t.sample_period - ref) > 1e-9 * ref)
                throw GridMismatch(files[k].string() + ": sample grid differs");
            t.sample_period = ref;
        }
        if (filter) t.positions = filter->apply(t.positions);
        if (config.analysis.differentiate) t.velocities = dsp::differentiate(t.positions, t.sample_period);
        acc.add(t);
        for (std::size_t f = 0; f < frames.size(); ++f) {
            hz[f].push_back(t.positions[frames[f].second]);
            hv[f].push_back(t.velocities[frames[f].second]);
        }
    }
    r.stats = acc.finish();
    r.metrics = expansion_metrics(r.stats, config, true);
    std::vector<double> times;
    for (const auto& f : frames) times.push_back(f.first);
    r.histograms = build_histograms(hz, hv, times, config.analysis.histogram_bins);

    outputs.write("stats.csv", stats_csv(r.stats));
    outputs.write("metrics.txt", metrics_text(r.metrics, r.stats, config));
    for (std::size_t k = 0; k < r.histograms.size(); ++k)
        outputs.write(histogram_name(k), histogram_csv(r.histograms[k]));
    finish_manifest(r.manifest, outputs);
    return r;
}

std::string ProtocolSummary::to_text() const {
    std::ostringstream out;
    out << std::setprecision(6);
    out << "pulses            " << pulses << '\n';
    out << "tau_low           " << tau_low * 1e6 << " us\n";
    out << "tau_high          " << tau_high * 1e6 << " us\n";
    if (pulses > 0) {
        out << "f_S               " << modulation_frequency * 1e-3 << " kHz\n";
        out << "f_S / f_z         " << frequency_ratio << '\n';
    }
    out << "duration          " << duration * 1e3 << " ms\n";
    return out.str();
}

ProtocolSummary protocol_summary(const RunConfig& config) {
    config.validate();
    const SimConfig sim = config.sim();
    ProtocolSummary p;
    p.tau_low = sim.schedule.tau_low();
    p.tau_high = sim.schedule.tau_high();
    p.pulses = sim.schedule.pulse_count();
    if (p.pulses > 0) {
        p.modulation_frequency = modulation_frequency(sim.schedule);
        p.frequency_ratio = p.modulation_frequency / config.trap_f_z_hz;
    }
    p.duration = sim.schedule.end_time() - sim.schedule.start_time();
    return p;
}

}  // namespace levitate
