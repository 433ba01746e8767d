#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "levitate/config.hpp"
#include "levitate/errors.hpp"
#include "levitate/rng.hpp"

using namespace levitate;
using doctest::Approx;

namespace {

const std::filesystem::path kConfigs = LEVITATE_SOURCE_DIR "/configs";

std::string replace_line(std::string text, const std::string& key, const std::string& value) {
    const auto at = text.find(key + " = ");
    REQUIRE(at != std::string::npos);
    const auto end = text.find('\n', at);
    return text.replace(at, end - at, key + " = " + value);
}

}  // namespace

TEST_CASE("bundled defaults") {
    const auto c = parse_config_file(kConfigs / "paper-defaults.conf");
    CHECK(c.modulation_depth == 0.9);
    CHECK(c.modulation_pulses == 1000);
    CHECK(c.trap_f_z_hz == 77.6e3);
    CHECK(c.gas_pressure_mbar == 3e-7);
    CHECK(c.sim_initial_temperature_k == 4.18e-3);
    CHECK(c.sim_ensemble == 671);
    CHECK(c.trap_model == TrapModel::GaussianAxial);
    CHECK(c.sim().trap.rayleigh_range() == Approx(5.07e-7).epsilon(1e-3));
    CHECK(serialize_config(c) == serialize_config(paper_defaults()));
}

TEST_CASE("empty input is rejected") {
    CHECK_THROWS_AS(parse_config_text(""), ParseError);
    CHECK_THROWS_AS(parse_config_text("# only a comment\n\n"), ParseError);
}

TEST_CASE("invalid values name the invariant") {
    CHECK_THROWS_WITH_AS(parse_config_text("particle.radius_m = -1e-7\n"), "radius > 0",
                         ValidationError);
    CHECK_THROWS_WITH_AS(parse_config_text("sim.ensemble = 0\n"), "ensemble >= 2",
                         ValidationError);
    CHECK_THROWS_AS(parse_config_text("modulation.depth = 1.5\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("sim.time_step_s = 1e-5\n"), ValidationError);
    CHECK_THROWS_AS(parse_config_text("analysis.smoothing_window = 50\n"), ValidationError);
}

TEST_CASE("parse errors carry the line") {
    try {
        parse_config_text("gas.pressure_mbar = 1\n\ngas.bogus = 3\n", "x.conf");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("gas.bogus") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("gas.pressure_mbar = 1\ngas.pressure_mbar = 2\n"), ParseError);
    CHECK_THROWS_AS(parse_config_text("gas.pressure_mbar =\n"), ParseError);
    CHECK_THROWS_AS(parse_config_text("gas.pressure_mbar = 1 mbar\n"), ParseError);
    CHECK_THROWS_AS(parse_config_text("gas.pressure_mbar = nan\n"), ParseError);
    CHECK_THROWS_AS(parse_config_text("sim.seed = -4\n"), ParseError);
    CHECK_THROWS_AS(parse_config_text("sim.keep_trajectories = yes\n"), ParseError);
    CHECK_THROWS_AS(parse_config_text("trap.model = quartic\n"), ParseError);
    CHECK_THROWS_AS(parse_config_text("just some words\n"), ParseError);
    CHECK_THROWS_AS(parse_config_file(kConfigs / "does-not-exist.conf"), IoError);
}

TEST_CASE("comments and partial files") {
    const auto c = parse_config_text(
        "# header\n  sim.seed = 5   # trailing\nfeedback.on_from_s = 1e-3\n"
        "analysis.histogram_times_s = none\nsim.initial_state = explicit\n"
        "sim.initial_z_m = 1e-9\n");
    CHECK(c.sim_seed == 5);
    CHECK(c.feedback_on_from_s.value() == 1e-3);
    CHECK(c.analysis.histogram_times_s.empty());
    CHECK_FALSE(c.sim_initial_thermal);
    CHECK(std::get<PhaseSpacePoint>(c.sim().initial).position == 1e-9);
    CHECK(c.modulation_pulses == 1000);  // untouched keys keep their defaults
}

TEST_CASE("serialize then parse is the identity") {
    const std::string base = serialize_config(paper_defaults());
    RandomStream rng(2718, 0);
    auto pick = [&](double lo, double hi) {
        // random doubles with full mantissas exercise the shortest-repr path
        return lo + (hi - lo) * rng.uniform();
    };
    for (int trial = 0; trial < 300; ++trial) {
        std::string text = base;
        text = replace_line(text, "particle.radius_m", format_double(pick(1e-8, 1e-6)));
        text = replace_line(text, "gas.pressure_mbar", format_double(pick(0.0, 10.0)));
        text = replace_line(text, "gas.temperature_k", format_double(pick(0.0, 500.0)));
        text = replace_line(text, "trap.model", rng.uniform() < 0.5 ? "harmonic" : "gaussian_axial");
        text = replace_line(text, "trap.f_z_hz", format_double(pick(1e4, 2e5)));
        text = replace_line(text, "modulation.depth", format_double(pick(0.01, 1.0)));
        text = replace_line(text, "modulation.pulses", std::to_string(rng.next_u64() % 5000));
        text = replace_line(text, "feedback.on_from_s",
                            rng.uniform() < 0.5 ? "auto" : format_double(pick(0.0, 1e-2)));
        text = replace_line(text, "feedback.on_until_s",
                            rng.uniform() < 0.5 ? "inf" : format_double(pick(1e-2, 1.0)));
        text = replace_line(text, "sim.seed", std::to_string(rng.next_u64()));
        text = replace_line(text, "sim.ensemble", std::to_string(2 + rng.next_u64() % 10000));
        text = replace_line(text, "sim.time_step_s",
                            rng.uniform() < 0.5 ? "auto" : format_double(pick(1e-9, 4e-7)));
        text = replace_line(text, "sim.initial_state", rng.uniform() < 0.5 ? "thermal" : "explicit");
        text = replace_line(text, "sim.initial_v_m_s", format_double(pick(-1e-3, 1e-3)));
        text = replace_line(text, "analysis.histogram_times_s",
                            format_double(pick(0, 1e-3)) + ", " + format_double(pick(1e-3, 2e-3)));
        const auto first = parse_config_text(text);
        const auto again = parse_config_text(serialize_config(first));
        REQUIRE(config_entries(first) == config_entries(again));
        REQUIRE(serialize_config(again) == serialize_config(first));
    }
}

TEST_CASE("shortest round-trip number formatting") {
    for (double x : {0.1, 1e-7, 45.45454545454546, 4.8105816776026335e-26, 6.02214076e23, 0.0})
        CHECK(std::stod(format_double(x)) == x);
    CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("run config builds the simulation config") {
    auto c = paper_defaults();
    const auto s = c.sim();
    CHECK(s.trap.angular_frequency == Approx(2.0 * M_PI * 77.6e3));
    CHECK(s.gas.pressure == Approx(3e-5));
    CHECK(s.schedule.pulse_count() == 1000);
    CHECK(s.feedback_on_from() == Approx(s.schedule.end_time()));
    CHECK(s.resolved_time_step() == Approx(1.0 / (200.0 * 77.6e3)));
    CHECK(std::get<ThermalInitialState>(s.initial).temperature == 4.18e-3);
}
