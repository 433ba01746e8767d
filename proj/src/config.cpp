#include "levitate/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "levitate/errors.hpp"

namespace levitate {

std::string format_double(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

namespace {

struct BadValue {
    std::string what;
};

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(std::string_view s) {
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v))
        throw BadValue{"expected a number, got '" + std::string(s) + "'"};
    return v;
}

template <class Int>
Int to_integer(std::string_view s) {
    Int v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw BadValue{"expected an integer, got '" + std::string(s) + "'"};
    return v;
}

bool to_bool(std::string_view s) {
    if (s == "true") return true;
    if (s == "false") return false;
    throw BadValue{"expected true or false, got '" + std::string(s) + "'"};
}

std::string from_bool(bool b) { return b ? "true" : "false"; }

template <class Int>
std::string from_integer(Int v) {
    return std::to_string(v);
}

struct Key {
    const char* name;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define LEV_DOUBLE(key, field)                                                     \
    Key {                                                                          \
        key, [](RunConfig& c, std::string_view s) { c.field = to_double(s); },    \
            [](const RunConfig& c) { return format_double(c.field); }              \
    }
#define LEV_BOOL(key, field)                                                     \
    Key {                                                                        \
        key, [](RunConfig& c, std::string_view s) { c.field = to_bool(s); },    \
            [](const RunConfig& c) { return from_bool(c.field); }                \
    }
#define LEV_INT(key, field)                                                              \
    Key {                                                                                \
        key,                                                                             \
            [](RunConfig& c, std::string_view s) {                                       \
                c.field = to_integer<decltype(c.field)>(s);                              \
            },                                                                           \
            [](const RunConfig& c) { return from_integer(c.field); }                     \
    }

const std::vector<Key>& keys() {
    static const std::vector<Key> table = {
        LEV_DOUBLE("particle.radius_m", particle_radius_m),
        LEV_DOUBLE("particle.density_kg_m3", particle_density_kg_m3),
        LEV_DOUBLE("particle.refractive_index", particle_refractive_index),

        LEV_DOUBLE("gas.pressure_mbar", gas_pressure_mbar),
        LEV_DOUBLE("gas.temperature_k", gas_temperature_k),
        LEV_DOUBLE("gas.molecular_mass_kg", gas_molecular_mass_kg),

        Key{"trap.model",
            [](RunConfig& c, std::string_view s) {
                try {
                    c.trap_model = trap_model_from_string(s);
                } catch (const ValidationError& e) {
                    throw BadValue{e.what()};
                }
            },
            [](const RunConfig& c) { return std::string(to_string(c.trap_model)); }},
        LEV_DOUBLE("trap.f_z_hz", trap_f_z_hz),
        LEV_DOUBLE("trap.medium_index", trap_medium_index),
        LEV_DOUBLE("trap.waist_m", trap_waist_m),
        LEV_DOUBLE("trap.wavelength_m", trap_wavelength_m),

        LEV_DOUBLE("modulation.depth", modulation_depth),
        LEV_INT("modulation.pulses", modulation_pulses),
        LEV_DOUBLE("modulation.start_s", modulation_start_s),

        LEV_DOUBLE("feedback.gain_per_s", feedback_gain_per_s),
        LEV_BOOL("feedback.before_protocol", feedback_before_protocol),
        Key{"feedback.on_from_s",
            [](RunConfig& c, std::string_view s) {
                if (s == "auto")
                    c.feedback_on_from_s.reset();
                else
                    c.feedback_on_from_s = to_double(s);
            },
            [](const RunConfig& c) {
                return c.feedback_on_from_s ? format_double(*c.feedback_on_from_s)
                                            : std::string("auto");
            }},
        LEV_DOUBLE("feedback.on_until_s", feedback_on_until_s),
        LEV_DOUBLE("feedback.lock_amplitude_m", feedback_lock_amplitude_m),

        Key{"sim.time_step_s",
            [](RunConfig& c, std::string_view s) {
                c.sim_time_step_s = s == "auto" ? 0.0 : to_double(s);
            },
            [](const RunConfig& c) {
                return c.sim_time_step_s == 0.0 ? std::string("auto")
                                                : format_double(c.sim_time_step_s);
            }},
        LEV_DOUBLE("sim.duration_s", sim_duration_s),
        LEV_DOUBLE("sim.sample_rate_hz", sim_sample_rate_hz),
        LEV_INT("sim.seed", sim_seed),
        LEV_INT("sim.ensemble", sim_ensemble),
        Key{"sim.initial_state",
            [](RunConfig& c, std::string_view s) {
                if (s == "thermal")
                    c.sim_initial_thermal = true;
                else if (s == "explicit")
                    c.sim_initial_thermal = false;
                else
                    throw BadValue{"expected thermal or explicit, got '" + std::string(s) + "'"};
            },
            [](const RunConfig& c) {
                return std::string(c.sim_initial_thermal ? "thermal" : "explicit");
            }},
        LEV_DOUBLE("sim.initial_temperature_k", sim_initial_temperature_k),
        LEV_DOUBLE("sim.initial_z_m", sim_initial_z_m),
        LEV_DOUBLE("sim.initial_v_m_s", sim_initial_v_m_s),
        LEV_BOOL("sim.keep_trajectories", sim_keep_trajectories),
        LEV_INT("sim.trajectory_stride", sim_trajectory_stride),

        LEV_BOOL("analysis.bandpass", analysis.bandpass),
        LEV_DOUBLE("analysis.bandpass_bandwidth_hz", analysis.bandpass_bandwidth_hz),
        LEV_INT("analysis.bandpass_order", analysis.bandpass_order),
        LEV_BOOL("analysis.differentiate", analysis.differentiate),
        LEV_INT("analysis.smoothing_window", analysis.smoothing_window),
        LEV_DOUBLE("analysis.growth_window_start_s", analysis.growth_window_start_s),
        LEV_DOUBLE("analysis.growth_window_end_s", analysis.growth_window_end_s),
        Key{"analysis.histogram_times_s",
            [](RunConfig& c, std::string_view s) {
                c.analysis.histogram_times_s.clear();
                if (trim(s).empty() || s == "none") return;
                std::size_t pos = 0;
                while (pos <= s.size()) {
                    const auto comma = s.find(',', pos);
                    const auto item = trim(s.substr(pos, comma == std::string_view::npos
                                                             ? std::string_view::npos
                                                             : comma - pos));
                    c.analysis.histogram_times_s.push_back(to_double(item));
                    if (comma == std::string_view::npos) break;
                    pos = comma + 1;
                }
            },
            [](const RunConfig& c) {
                if (c.analysis.histogram_times_s.empty()) return std::string("none");
                std::string out;
                for (std::size_t i = 0; i < c.analysis.histogram_times_s.size(); ++i) {
                    if (i) out += ", ";
                    out += format_double(c.analysis.histogram_times_s[i]);
                }
                return out;
            }},
        LEV_INT("analysis.histogram_bins", analysis.histogram_bins),
        LEV_INT("analysis.welch_segment", analysis.welch_segment),
        LEV_DOUBLE("analysis.welch_overlap", analysis.welch_overlap),

        LEV_DOUBLE("calibration.pressure_mbar", calibration.pressure_mbar),
        LEV_DOUBLE("calibration.temperature_k", calibration.temperature_k),
        LEV_DOUBLE("calibration.duration_s", calibration.duration_s),
        LEV_DOUBLE("calibration.detector_scale", calibration.detector_scale),
        LEV_DOUBLE("calibration.fit_min_hz", calibration.fit_min_hz),
        LEV_DOUBLE("calibration.fit_max_hz", calibration.fit_max_hz),
    };
    return table;
}

#undef LEV_DOUBLE
#undef LEV_BOOL
#undef LEV_INT

void require(bool ok, const char* invariant) {
    if (!ok) throw ValidationError(invariant);
}

}  // namespace

SimConfig RunConfig::sim() const {
    SimConfig c;
    c.particle = ParticleSpec(particle_radius_m, particle_density_kg_m3, particle_refractive_index);
    c.gas = GasEnvironment(constants::mbar_to_pascal(gas_pressure_mbar), gas_temperature_k,
                           gas_molecular_mass_kg);
    c.trap = TrapSpec(2.0 * constants::kPi * trap_f_z_hz, trap_model, trap_medium_index,
                      trap_waist_m, trap_wavelength_m);
    c.schedule = ModulationSchedule::for_trap(modulation_depth, c.trap.angular_frequency,
                                              modulation_pulses, modulation_start_s);
    c.feedback.gain = feedback_gain_per_s;
    c.feedback.active_before_protocol = feedback_before_protocol;
    c.feedback.on_from = feedback_on_from_s;
    c.feedback.on_until = feedback_on_until_s;
    c.feedback.lock_amplitude = feedback_lock_amplitude_m;
    c.time_step = sim_time_step_s;
    c.duration = sim_duration_s;
    c.sample_rate = sim_sample_rate_hz;
    c.seed = sim_seed;
    if (sim_initial_thermal)
        c.initial = ThermalInitialState{sim_initial_temperature_k};
    else
        c.initial = PhaseSpacePoint{sim_initial_z_m, sim_initial_v_m_s};
    c.validate();
    return c;
}

void RunConfig::validate() const {
    require(particle_radius_m > 0.0, "radius > 0");
    require(particle_density_kg_m3 > 0.0, "density > 0");
    require(particle_refractive_index >= 1.0, "refractive_index >= 1");
    require(gas_pressure_mbar >= 0.0, "pressure >= 0");
    require(gas_temperature_k >= 0.0, "temperature >= 0");
    require(gas_molecular_mass_kg > 0.0, "molecular_mass > 0");
    require(trap_f_z_hz > 0.0, "f_z > 0");
    require(trap_medium_index >= 1.0, "medium_index >= 1");
    require(modulation_depth > 0.0 && modulation_depth <= 1.0, "0 < depth <= 1");
    require(modulation_pulses >= 0, "pulses >= 0");
    require(feedback_gain_per_s >= 0.0, "feedback gain >= 0");
    require(feedback_lock_amplitude_m >= 0.0, "lock_amplitude >= 0");
    require(sim_time_step_s >= 0.0, "time_step > 0");
    require(sim_duration_s >= 0.0, "duration >= 0");
    require(sim_sample_rate_hz > 0.0, "sample_rate > 0");
    require(sim_ensemble >= 2, "ensemble >= 2");
    require(sim_initial_temperature_k >= 0.0, "initial temperature >= 0");
    require(sim_trajectory_stride >= 1, "trajectory_stride >= 1");
    require(analysis.bandpass_bandwidth_hz > 0.0, "bandpass bandwidth > 0");
    require(analysis.bandpass_order >= 1, "bandpass order >= 1");
    require(analysis.smoothing_window % 2 == 1, "smoothing window odd and >= 1");
    require(analysis.growth_window_start_s < analysis.growth_window_end_s,
            "growth window start < end");
    require(analysis.histogram_bins >= 1, "histogram bins >= 1");
    require(analysis.welch_segment >= 8, "welch segment >= 8");
    require(analysis.welch_overlap >= 0.0 && analysis.welch_overlap < 1.0,
            "0 <= welch overlap < 1");
    require(calibration.pressure_mbar > 0.0, "calibration pressure > 0");
    require(calibration.temperature_k > 0.0, "calibration temperature > 0");
    require(calibration.duration_s > 0.0, "calibration duration > 0");
    require(calibration.detector_scale > 0.0, "detector scale > 0");
    (void)sim();  // type-level invariants (Rayleigh range, sample rate vs step)
}

RunConfig paper_defaults() { return RunConfig{}; }

RunConfig parse_config_text(std::string_view text, const std::string& origin) {
    RunConfig cfg = paper_defaults();
    std::set<std::string> seen;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ParseError(origin, line_no, "expected 'section.key = value'");
        const std::string key(trim(line.substr(0, eq)));
        const auto value = trim(line.substr(eq + 1));
        const auto& table = keys();
        const auto it = std::find_if(table.begin(), table.end(),
                                     [&](const Key& k) { return key == k.name; });
        if (it == table.end()) throw ParseError(origin, line_no, "unknown key '" + key + "'");
        if (!seen.insert(key).second)
            throw ParseError(origin, line_no, "duplicate key '" + key + "'");
        if (value.empty()) throw ParseError(origin, line_no, "missing value for '" + key + "'");
        try {
            it->set(cfg, value);
        } catch (const BadValue& e) {
            throw ParseError(origin, line_no, key + ": " + e.what);
        }
    }
    if (seen.empty()) throw ParseError(origin, line_no, "no configuration keys");
    cfg.validate();
    return cfg;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path.string());
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunConfig& config) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& k : keys()) out.emplace_back(k.name, k.get(config));
    return out;
}

std::string serialize_config(const RunConfig& config) {
    std::string out;
    std::string section;
    for (const auto& [key, value] : config_entries(config)) {
        const auto sec = key.substr(0, key.find('.'));
        if (sec != section) {
            if (!section.empty()) out += '\n';
            out += "# " + sec + '\n';
            section = sec;
        }
        out += key + " = " + value + '\n';
    }
    return out;
}

}  // namespace levitate
