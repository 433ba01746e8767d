#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "levitate/analysis.hpp"
#include "levitate/config.hpp"
#include "levitate/dsp.hpp"
#include "levitate/errors.hpp"
#include "levitate/integrator.hpp"
#include "levitate/modulation.hpp"
#include "levitate/oracle.hpp"
#include "levitate/physics.hpp"
#include "levitate/workflows.hpp"

namespace py = pybind11;
using namespace levitate;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

// An empty string selects the built-in defaults.
RunConfig config_from(const std::string& text) {
    return text.empty() ? paper_defaults() : parse_config_text(text, "<python>");
}

py::dict metrics_dict(const ExpansionMetrics& m) {
    py::dict d;
    d["sigma_ref"] = m.sigma_ref;
    d["db_peak_amp"] = m.db_peak_amp;
    d["db_peak_amp_smoothed"] = m.db_peak_amp_smoothed;
    d["db_peak_var"] = m.db_peak_var;
    d["t_peak"] = m.peak ? py::object(py::float_(m.peak->time)) : py::object(py::none());
    d["sigma_peak_envelope"] =
        m.peak ? py::object(py::float_(m.peak->envelope)) : py::object(py::none());
    d["growth_tau"] = m.growth ? py::object(py::float_(m.growth->tau)) : py::object(py::none());
    d["radius_crossing_time"] = m.radius_crossing_time
                                    ? py::object(py::float_(*m.radius_crossing_time))
                                    : py::object(py::none());
    d["peak_note"] = m.peak_note;
    d["growth_note"] = m.growth_note;
    return d;
}

py::dict stats_dict(const EnsembleStats& s) {
    py::dict d;
    d["t"] = to_array(s.times);
    d["sigma_z"] = to_array(s.sigma_z);
    d["sigma_v"] = to_array(s.sigma_v);
    d["cov_zv"] = to_array(s.cov_zv);
    d["runs"] = s.run_count;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Levitated-particle squeezing simulator";
    m.attr("__version__") = kToolVersion;

    // Translators are tried newest first, so the base class goes first.
    py::register_exception<Error>(m, "LevitateError", PyExc_RuntimeError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

    m.def("default_config_text", [] { return serialize_config(paper_defaults()); });
    m.def("parse_config", [](const std::string& text) {
        py::dict d;
        for (const auto& [k, v] : config_entries(parse_config_text(text, "<python>"))) d[py::str(k)] = v;
        return d;
    }, py::arg("text"));

    m.def("pulse_timings", [](double depth, double omega_z) {
        const auto t = pulse_timings(depth, omega_z);
        return py::make_tuple(t.tau_low, t.tau_high);
    }, py::arg("depth"), py::arg("omega_z"));
    m.def("pulse_map", [](double depth, double omega_z) {
        const Matrix2 p = pulse_map(depth, omega_z);
        py::array_t<double> out({2, 2});
        auto r = out.mutable_unchecked<2>();
        r(0, 0) = p.a, r(0, 1) = p.b, r(1, 0) = p.c, r(1, 1) = p.d;
        return out;
    }, py::arg("depth"), py::arg("omega_z"));
    m.def("predicted_expansion_db", &predicted_expansion_db, py::arg("n_pulses"), py::arg("depth"));

    m.def("mass_of", [](double radius, double density) {
        return mass_of(ParticleSpec(radius, density));
    }, py::arg("radius"), py::arg("density"));
    m.def("gas_damping_rate", [](double pressure_pa, double temperature, double radius, double density) {
        return gas_damping_rate(GasEnvironment(pressure_pa, temperature), ParticleSpec(radius, density));
    }, py::arg("pressure_pa"), py::arg("temperature"), py::arg("radius"), py::arg("density"));

    m.def("expansion_db", &expansion_db, py::arg("sigma"), py::arg("sigma_ref"));
    m.def("effective_temperature", &effective_temperature, py::arg("sigma_sq"),
          py::arg("sigma_sq_reference"), py::arg("reference_temperature") = 300.0);
    m.def("phonon_occupation", &phonon_occupation, py::arg("temperature"), py::arg("omega"));

    m.def("simulate", [](const std::string& config_text, std::uint64_t stream) {
        const SimConfig sim = config_from(config_text).sim();
        Trajectory tr;
        {
            py::gil_scoped_release release;
            tr = simulate(sim, stream);
        }
        std::vector<double> t(tr.size());
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = tr.time(i);
        py::dict d;
        d["t"] = to_array(t);
        d["z"] = to_array(tr.positions);
        d["v"] = to_array(tr.velocities);
        return d;
    }, py::arg("config_text") = "", py::arg("stream") = 0);

    m.def("run_simulate", [](const std::string& config_text, const std::filesystem::path& out,
                             unsigned threads) {
        const RunConfig c = config_from(config_text);
        SimulateResult r;
        {
            py::gil_scoped_release release;
            r = run_simulate(c, out, threads);
        }
        py::dict d;
        d["stats"] = stats_dict(r.stats);
        d["metrics"] = metrics_dict(r.metrics);
        d["manifest"] = r.manifest.to_text();
        return d;
    }, py::arg("config_text"), py::arg("out_dir"), py::arg("threads") = 0);

    m.def("run_oracle", [](const std::string& config_text, const std::filesystem::path& out) {
        const OracleResult r = run_oracle(config_from(config_text), out);
        py::dict d;
        d["db_per_pulse"] = r.db_per_pulse;
        d["cumulative_db"] = r.cumulative_db;
        d["tau_amp"] = r.growth.amplitude;
        d["tau_var"] = r.growth.variance;
        return d;
    }, py::arg("config_text"), py::arg("out_dir"));

    m.def("welch_psd", [](const std::vector<double>& signal, double sample_rate,
                          std::size_t segment, double overlap) {
        const auto s = dsp::welch_psd(signal, sample_rate, segment, overlap);
        return py::make_tuple(to_array(s.frequencies), to_array(s.density));
    }, py::arg("signal"), py::arg("sample_rate"), py::arg("segment_length") = 16384,
       py::arg("overlap") = 0.5);

    m.def("fit_lorentzian", [](const std::vector<double>& signal, double sample_rate,
                               std::size_t segment, double f_min, double f_max) {
        auto s = dsp::welch_psd(signal, sample_rate, segment, 0.5);
        if (f_max > f_min) s = s.crop(f_min, f_max);
        const auto fit = dsp::lorentzian_fit(s, dsp::estimate_lorentzian_guess(s));
        py::dict d;
        d["center_frequency"] = fit.center_frequency;
        d["linewidth"] = fit.linewidth;
        d["amplitude"] = fit.amplitude;
        d["noise_floor"] = fit.noise_floor;
        d["integrated_area"] = fit.integrated_area;
        d["converged"] = fit.converged;
        return d;
    }, py::arg("signal"), py::arg("sample_rate"), py::arg("segment_length") = 16384,
       py::arg("f_min") = 0.0, py::arg("f_max") = 0.0);
}
