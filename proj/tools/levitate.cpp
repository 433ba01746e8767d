#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "levitate/config.hpp"
#include "levitate/errors.hpp"
#include "levitate/workflows.hpp"

namespace fs = std::filesystem;
using namespace levitate;

namespace {

struct Common {
    std::string config = "paper-defaults";
    std::string from_manifest;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> ensemble;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("-c,--config", c.config, "config file, or 'paper-defaults'");
    cmd->add_option("--from-manifest", c.from_manifest,
                    "reuse the configuration recorded in a manifest.txt");
    cmd->add_option("-o,--out", c.out, "output directory");
    cmd->add_option("--seed", c.seed, "override sim.seed");
    cmd->add_option("--ensemble", c.ensemble, "override sim.ensemble");
}

RunConfig load(const Common& c) {
    RunConfig cfg;
    if (!c.from_manifest.empty()) {
        cfg = read_manifest(c.from_manifest).run_config();
    } else if (c.config == "paper-defaults") {
        cfg = paper_defaults();
    } else {
        cfg = parse_config_file(c.config);
    }
    if (c.seed) cfg.sim_seed = *c.seed;
    if (c.ensemble) cfg.sim_ensemble = *c.ensemble;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo simulation and analysis of a levitated nanoparticle under "
                 "pulsed trap-stiffness modulation"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    Common sim_opts, oracle_opts, cal_opts, ana_opts, proto_opts;
    unsigned threads = 0;
    bool keep = false;
    std::size_t stride = 0;

    auto* sim = app.add_subcommand("simulate", "run the stochastic ensemble");
    add_common(sim, sim_opts);
    sim->add_flag("--keep-trajectories", keep, "write every trajectory as CSV");
    sim->add_option("--stride", stride, "keep every n-th sample of stored trajectories");
    sim->add_option("-j,--threads", threads, "worker threads (0: all cores)");

    auto* oracle = app.add_subcommand("oracle", "linear-model moment predictions");
    add_common(oracle, oracle_opts);

    std::string input, cold;
    auto* cal = app.add_subcommand("calibrate", "PSD fit and temperature calibration");
    add_common(cal, cal_opts);
    cal->add_option("--input", input, "reference trajectory CSV (default: synthetic record)");
    cal->add_option("--cold", cold, "cooled-state trajectory CSV to convert");

    std::string traj_dir;
    auto* ana = app.add_subcommand("analyze", "measurement chain over stored trajectories");
    add_common(ana, ana_opts);
    ana->add_option("--trajectories", traj_dir, "directory of traj_*.csv files")->required();

    auto* proto = app.add_subcommand("protocol", "print pulse timings");
    add_common(proto, proto_opts);
    bool dump_config = false;
    proto->add_flag("--dump-config", dump_config, "print the resolved configuration");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            RunConfig cfg = load(sim_opts);
            if (keep) cfg.sim_keep_trajectories = true;
            if (stride > 0) cfg.sim_trajectory_stride = stride;
            const auto r = run_simulate(cfg, sim_opts.out, threads);
            std::cout << "wrote " << r.manifest.outputs.size() << " files to " << sim_opts.out
                      << '\n';
            if (r.metrics.peak)
                std::cout << "peak " << r.metrics.db_peak_amp << " dB at "
                          << r.metrics.peak->time * 1e3 << " ms\n";
        } else if (*oracle) {
            const auto r = run_oracle(load(oracle_opts), oracle_opts.out);
            std::cout << "dB/pulse " << r.db_per_pulse << ", cumulative " << r.cumulative_db
                      << " dB, tau_amp " << r.growth.amplitude * 1e6 << " us, tau_var "
                      << r.growth.variance * 1e6 << " us\n";
        } else if (*cal) {
            std::optional<fs::path> in, cold_in;
            if (!input.empty()) in = input;
            if (!cold.empty()) cold_in = cold;
            const auto r = run_calibrate(load(cal_opts), in, cold_in, cal_opts.out);
            std::cout << "factor " << r.factor << " m/unit, T_eff "
                      << r.effective_temperature << " K, n " << r.phonon_occupation << '\n';
        } else if (*ana) {
            const auto r = run_analyze(traj_dir, load(ana_opts), ana_opts.out);
            std::cout << "analyzed " << r.stats.run_count << " trajectories\n";
        } else if (*proto) {
            const RunConfig cfg = load(proto_opts);
            if (dump_config) std::cout << serialize_config(cfg);
            else std::cout << protocol_summary(cfg).to_text();
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
