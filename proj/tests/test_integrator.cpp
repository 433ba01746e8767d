#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "levitate/constants.hpp"
#include "levitate/errors.hpp"
#include "levitate/integrator.hpp"
#include "levitate/oracle.hpp"

using namespace levitate;
using doctest::Approx;

namespace {

const double kFz = 77.6e3;
const double kOmega = 2.0 * constants::kPi * kFz;

// Harmonic, no gas, no feedback, no pulses.
SimConfig noiseless() {
    SimConfig c;
    c.gas.pressure = 0.0;
    c.trap.model = TrapModel::Harmonic;
    c.feedback.gain = 0.0;
    c.schedule = ModulationSchedule::for_trap(0.9, kOmega, 0);
    c.time_step = 1.0 / (2000.0 * kFz);
    c.sample_rate = 2e6;
    return c;
}

double energy(const PhaseSpacePoint& p) {
    return 0.5 * p.velocity * p.velocity + 0.5 * kOmega * kOmega * p.position * p.position;
}

}  // namespace

TEST_CASE("initial state draws") {
    TrapSpec trap;
    ParticleSpec particle;
    RandomStream rng(42, 0);
    const int n = 20000;
    double cold = 0.0, warm = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto a = draw_initial_state(4.18e-3, trap, particle, rng);
        const auto b = draw_initial_state(300.0, trap, particle, rng);
        cold += a.position * a.position;
        warm += b.position * b.position;
        const auto zero = draw_initial_state(0.0, trap, particle, rng);
        REQUIRE(zero.position == 0.0);
        REQUIRE(zero.velocity == 0.0);
    }
    // standard error of a variance estimate is sqrt(2/n) relative, ~1%
    CHECK(std::sqrt(cold / n) == Approx(1.79e-10).epsilon(0.02));
    CHECK(warm / n == Approx(2.31e-15).epsilon(0.04));
}

TEST_CASE("one undamped period returns to the start") {
    auto c = noiseless();
    LangevinIntegrator it(c);
    RandomStream rng(1, 0);
    const double z0 = 1e-9;
    const auto end = it.advance({z0, 0.0}, 0.0, 2.0 * constants::kPi / kOmega, rng);
    CHECK(it.steps_taken() == 2000);
    CHECK(std::abs(end.position - z0) / z0 < 1e-6);
    // the scheme's phase error over one period is (omega dt)^2/24 * 2 pi ~ 2.6e-6
    CHECK(std::abs(end.velocity) / (kOmega * z0) < 5e-6);
}

TEST_CASE("energy has no secular drift") {
    auto c = noiseless();
    LangevinIntegrator it(c);
    RandomStream rng(1, 0);
    const PhaseSpacePoint start{2e-9, 0.0};
    const double period = 2.0 * constants::kPi / kOmega;
    const auto end = it.advance(start, 0.0, 100.0 * period, rng);
    CHECK(std::abs(energy(end) - energy(start)) / energy(start) < 1e-6);
}

TEST_CASE("one pulse matches the analytic pulse map") {
    auto c = noiseless();
    c.schedule = ModulationSchedule::for_trap(0.9, kOmega, 1);
    LangevinIntegrator it(c);
    RandomStream rng(1, 0);
    const auto m = pulse_map(0.9, kOmega);
    for (const PhaseSpacePoint p0 : {PhaseSpacePoint{1e-9, 0.0}, PhaseSpacePoint{0.0, 1e-3},
                                     PhaseSpacePoint{3e-10, -2e-4}}) {
        const auto p = it.advance(p0, 0.0, c.schedule.end_time(), rng);
        const double ez = m.a * p0.position + m.b * p0.velocity;
        const double ev = m.c * p0.position + m.d * p0.velocity;
        const double scale = std::hypot(ez, ev / kOmega);
        CHECK(std::abs(p.position - ez) / scale < 1e-3);
        CHECK(std::abs(p.velocity - ev) / (kOmega * scale) < 1e-3);
    }
}

TEST_CASE("noiseless envelope follows the pulse-map power") {
    const int n = 20;
    const double s = 0.9;
    auto c = noiseless();
    c.time_step = 0.0;  // default step
    c.schedule = ModulationSchedule::for_trap(s, kOmega, n);
    LangevinIntegrator it(c);
    RandomStream rng(1, 0);
    // velocity quadrature grows, position quadrature shrinks
    const auto grown = it.advance({0.0, 1e-4}, 0.0, c.schedule.end_time(), rng);
    CHECK(std::hypot(grown.position * kOmega, grown.velocity) / 1e-4 ==
          Approx(std::pow(1.0 / std::sqrt(s), n)).epsilon(1e-3));
    const auto shrunk = it.advance({1e-9, 0.0}, 0.0, c.schedule.end_time(), rng);
    CHECK(std::hypot(shrunk.position, shrunk.velocity / kOmega) / 1e-9 ==
          Approx(std::pow(std::sqrt(s), n)).epsilon(1e-3));

    // the nonlinear trap reduces to the same law for amplitudes far below z_R
    c.trap.model = TrapModel::GaussianAxial;
    LangevinIntegrator gauss(c);
    const auto g = gauss.advance({0.0, 1e-6}, 0.0, c.schedule.end_time(), rng);
    CHECK(std::hypot(g.position * kOmega, g.velocity) / 1e-6 ==
          Approx(std::pow(1.0 / std::sqrt(s), n)).epsilon(1e-3));
}

TEST_CASE("steps never straddle transitions or feedback edges") {
    SimConfig c;
    c.schedule = ModulationSchedule::for_trap(0.9, kOmega, 5, 1.234567e-6);
    c.feedback.on_from = 5e-5;
    c.feedback.on_until = 7.77e-5;
    LangevinIntegrator it(c);
    const auto& bp = it.breakpoints();
    for (double t : transition_times(c.schedule))
        CHECK(std::find(bp.begin(), bp.end(), t) != bp.end());
    CHECK(std::find(bp.begin(), bp.end(), 5e-5) != bp.end());
    CHECK(std::find(bp.begin(), bp.end(), 7.77e-5) != bp.end());
    CHECK(std::is_sorted(bp.begin(), bp.end()));

    // Over one piece the step count is ceil(piece / dt); summed over the
    // pieces that is what advance() takes.
    RandomStream rng(3, 0);
    const double t1 = 1e-4;
    std::vector<double> cuts{0.0};
    for (double t : bp)
        if (t > 0.0 && t < t1) cuts.push_back(t);
    cuts.push_back(t1);
    std::uint64_t expected = 0;
    for (std::size_t i = 1; i < cuts.size(); ++i)
        expected += static_cast<std::uint64_t>(
            std::max(1.0, std::ceil((cuts[i] - cuts[i - 1]) / it.time_step() * (1.0 - 1e-12))));
    it.advance({0.0, 0.0}, 0.0, t1, rng);
    CHECK(it.steps_taken() == expected);
}

TEST_CASE("feedback window") {
    SimConfig c;
    c.schedule = ModulationSchedule::for_trap(0.9, kOmega, 10, 1e-5);
    LangevinIntegrator it(c);
    CHECK(it.feedback_window_active(0.0));
    CHECK_FALSE(it.feedback_window_active(1e-5));
    CHECK_FALSE(it.feedback_window_active(0.5 * (1e-5 + c.schedule.end_time())));
    CHECK(it.feedback_window_active(c.schedule.end_time()));
    CHECK(it.feedback_window_active(1.0));

    c.feedback.active_before_protocol = false;
    c.feedback.on_until = 2e-4;
    LangevinIntegrator off(c);
    CHECK_FALSE(off.feedback_window_active(0.0));
    CHECK_FALSE(off.feedback_window_active(3e-4));
}

TEST_CASE("stationary moments match equipartition") {
    SimConfig c;
    c.gas = GasEnvironment(constants::mbar_to_pascal(5.0), 300.0);
    c.trap.model = TrapModel::Harmonic;
    c.feedback.gain = 0.0;
    c.schedule = ModulationSchedule::for_trap(0.9, kOmega, 0);
    c.initial = ThermalInitialState{300.0};
    c.duration = 50e-3;
    c.sample_rate = 2e5;
    c.seed = 2024;
    const auto runs = simulate_ensemble(c, 100, 0, 1);
    double zz = 0.0, vv = 0.0;
    std::size_t count = 0;
    for (const auto& r : runs) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            zz += r.positions[i] * r.positions[i];
            vv += r.velocities[i] * r.velocities[i];
            ++count;
        }
    }
    const double kt_m = constants::kBoltzmann * 300.0 / mass_of(c.particle);
    CHECK(zz / count == Approx(kt_m / (kOmega * kOmega)).epsilon(0.01));
    CHECK(vv / count == Approx(kt_m).epsilon(0.01));
}

TEST_CASE("simulate is deterministic and thread-count independent") {
    SimConfig c;
    c.duration = 2e-4;
    c.seed = 99;
    c.gas = GasEnvironment(50.0, 300.0);
    c.trap.model = TrapModel::GaussianAxial;
    const auto a = simulate(c, 3);
    const auto b = simulate(c, 3);
    CHECK(a.positions == b.positions);
    CHECK(a.velocities == b.velocities);
    CHECK(a.positions != simulate(c, 4).positions);

    const auto one = simulate_ensemble(c, 5, 2, 1);
    const auto many = simulate_ensemble(c, 5, 2, 3);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(one[i].positions == many[i].positions);
        CHECK(one[i].stream == 2 + i);
        CHECK(one[i].positions == simulate(c, 2 + i).positions);
    }
}

TEST_CASE("zero duration gives the initial state") {
    SimConfig c;
    c.duration = 0.0;
    c.initial = PhaseSpacePoint{1e-9, 2e-4};
    const auto t = simulate(c);
    REQUIRE(t.size() == 1);
    CHECK(t.positions[0] == 1e-9);
    CHECK(t.velocities[0] == 2e-4);
}

TEST_CASE("sample grid") {
    SimConfig c;
    c.duration = 1e-3;
    c.sample_rate = 2e6;
    CHECK(sample_count(c) == 2001);
    const auto t = simulate(c);
    CHECK(t.size() == 2001);
    CHECK(t.time(2000) == Approx(1e-3));
}

TEST_CASE("non-finite states are reported with their time and trajectory") {
    SimConfig c = noiseless();
    c.initial = PhaseSpacePoint{1e308, 0.0};
    c.duration = 1e-5;
    CHECK_THROWS_AS(simulate(c), NonFiniteState);
    try {
        simulate_ensemble(c, 2, 7, 1);
        FAIL("expected NonFiniteState");
    } catch (const NonFiniteState& e) {
        REQUIRE(e.trajectory().has_value());
        CHECK(*e.trajectory() == 7);
        CHECK(e.time() > 0.0);
    }
    RandomStream rng(1, 0);
    CHECK_THROWS_AS(step({1e308, 0.0}, c, 0.0, 1e-8, rng), NonFiniteState);
}

TEST_CASE("invalid configurations are rejected") {
    SimConfig c;
    c.duration = -1.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = SimConfig{};
    c.time_step = 1e-6;  // coarser than the 2 MHz sample grid
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = SimConfig{};
    c.feedback.gain = -1.0;
    CHECK_THROWS_AS(LangevinIntegrator{c}, ValidationError);
}
