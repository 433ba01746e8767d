#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "levitate/analysis.hpp"
#include "levitate/constants.hpp"
#include "levitate/errors.hpp"
#include "levitate/rng.hpp"

using namespace levitate;
using doctest::Approx;

namespace {

const double kOmega = 2.0 * constants::kPi * 77.6e3;

Trajectory constant_run(double z, double v, std::size_t n, double dt = 5e-7) {
    Trajectory t;
    t.sample_period = dt;
    t.positions.assign(n, z);
    t.velocities.assign(n, v);
    return t;
}

std::vector<double> grid(std::size_t n, double dt) {
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = i * dt;
    return t;
}

}  // namespace

TEST_CASE("identical runs have zero spread") {
    std::vector<Trajectory> runs(4, constant_run(1e-9, 2e-3, 10));
    const auto s = ensemble_stats(runs);
    CHECK(s.run_count == 4);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(s.sigma_z[i] == 0.0);
        CHECK(s.sigma_v[i] == 0.0);
        CHECK(s.mean_z[i] == Approx(1e-9));
    }
}

TEST_CASE("unbiased estimator on a pair") {
    const double a = 3e-9;
    std::vector<Trajectory> runs{constant_run(a, 0.0, 5), constant_run(-a, 0.0, 5)};
    const auto s = ensemble_stats(runs);
    CHECK(s.sigma_z[2] == Approx(a * std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("thermal draws reproduce the equipartition variance") {
    ParticleSpec p;
    TrapSpec trap;
    const double sz = std::sqrt(constants::kBoltzmann * 300.0 / (mass_of(p) * kOmega * kOmega));
    RandomStream rng(8, 0);
    const std::size_t n = 10000;
    std::vector<Trajectory> runs;
    for (std::size_t i = 0; i < n; ++i) runs.push_back(constant_run(sz * rng.normal(), 0.0, 2));
    const auto s = ensemble_stats(runs);
    const double var = s.sigma_z[0] * s.sigma_z[0];
    const double se = 2.31e-15 * std::sqrt(2.0 / (n - 1));
    CHECK(std::abs(var - 2.31e-15) < 3.0 * se + 2e-3 * 2.31e-15);
}

TEST_CASE("stats are invariant under reordering and sign flip") {
    RandomStream rng(4, 0);
    std::vector<Trajectory> runs;
    for (int r = 0; r < 7; ++r) {
        Trajectory t = constant_run(0.0, 0.0, 20);
        for (std::size_t i = 0; i < 20; ++i) {
            t.positions[i] = rng.normal() * 1e-9;
            t.velocities[i] = rng.normal() * 1e-3;
        }
        runs.push_back(t);
    }
    const auto base = ensemble_stats(runs);
    auto shuffled = runs;
    std::reverse(shuffled.begin(), shuffled.end());
    std::rotate(shuffled.begin(), shuffled.begin() + 3, shuffled.end());
    auto flipped = runs;
    for (auto& t : flipped) {
        for (double& z : t.positions) z = -z;
        for (double& v : t.velocities) v = -v;
    }
    const auto a = ensemble_stats(shuffled);
    const auto b = ensemble_stats(flipped);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(a.sigma_z[i] == Approx(base.sigma_z[i]).epsilon(1e-12));
        CHECK(b.sigma_z[i] == Approx(base.sigma_z[i]).epsilon(1e-12));
        CHECK(b.sigma_v[i] == Approx(base.sigma_v[i]).epsilon(1e-12));
        CHECK(b.cov_zv[i] == Approx(base.cov_zv[i]).epsilon(1e-12));
    }
}

TEST_CASE("grids must match") {
    std::vector<Trajectory> runs{constant_run(0.0, 0.0, 5), constant_run(0.0, 0.0, 6)};
    CHECK_THROWS_AS(ensemble_stats(runs), GridMismatch);
    runs[1] = constant_run(0.0, 0.0, 5, 1e-6);
    CHECK_THROWS_AS(ensemble_stats(runs), GridMismatch);
    std::vector<Trajectory> one{constant_run(0.0, 0.0, 5)};
    CHECK_THROWS_AS(ensemble_stats(one), ValidationError);
}

TEST_CASE("expansion in dB") {
    CHECK(expansion_db(124e-9, std::sqrt(3.21e-20)) == Approx(28.4).epsilon(0.05 / 28.4));
    CHECK(expansion_db(2e-9, 2e-9) == 0.0);
    CHECK(expansion_db(10.0, 1.0) == Approx(10.0));
    CHECK(expansion_db_variance(10.0, 1.0) == Approx(20.0));
    RandomStream rng(2, 0);
    for (int i = 0; i < 1000; ++i) {
        const double a = std::exp(20.0 * rng.normal()), b = std::exp(20.0 * rng.normal());
        REQUIRE(expansion_db(a, b) + expansion_db(b, a) == Approx(0.0).scale(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(expansion_db(0.0, 1.0), ValidationError);
}

TEST_CASE("effective temperature") {
    CHECK(effective_temperature(3.21e-20, 2.30e-15) == Approx(4.19e-3).epsilon(0.02 / 4.19));
    CHECK(effective_temperature(2e-15, 2e-15) == 300.0);
    CHECK(effective_temperature(1e-15, 2e-15) == Approx(150.0));
    const double k = effective_temperature(1e-20, 2.3e-15);
    for (double x : {2.0, 3.5, 1e3})
        CHECK(effective_temperature(x * 1e-20, 2.3e-15) == Approx(x * k).epsilon(1e-14));
}

TEST_CASE("phonon occupation") {
    const double n = phonon_occupation(4.18e-3, kOmega);
    CHECK(n == Approx(1.12e3).epsilon(5e-3));
    CHECK(std::abs(n - 1154.3) / 1154.3 < 0.04);
    CHECK(phonon_occupation(0.0, kOmega) == 0.0);
    CHECK(phonon_occupation(1e-9, kOmega) < 1e-100);
    for (double t : {1.0, 10.0, 300.0}) {
        const double x = constants::kBoltzmann * t / (constants::kHbar * kOmega);
        REQUIRE(x > 100.0);
        CHECK(phonon_occupation(t, kOmega) == Approx(x - 0.5).epsilon(1e-3));
    }
}

TEST_CASE("thermal spread") {
    ParticleSpec p;
    TrapSpec trap;
    const double l300 = thermal_spread(300.0, p, trap);
    CHECK(l300 == Approx(4.81e-8).epsilon(2e-3));
    CHECK(124e-9 / l300 - 1.0 == Approx(1.58).epsilon(0.03 / 1.58));
    CHECK(thermal_spread(0.0, p, trap) == Approx(3.79e-12).epsilon(2e-3));
    const double classical = std::sqrt(thermal_position_variance(300.0, trap, p));
    CHECK(l300 == Approx(classical).epsilon(1e-6));

    double prev = thermal_spread(0.0, p, trap);
    for (double t = 1e-9; t < 1e4; t *= 1.7) {
        const double l = thermal_spread(t, p, trap);
        REQUIRE(l >= prev);
        prev = l;
    }
}

TEST_CASE("growth time constant") {
    const auto t = grid(2001, 5e-7);
    std::vector<double> s(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) s[i] = 3e-10 * std::exp(t[i] / 125.6e-6);
    const auto fit = growth_time_constant(t, s, {1e-4, 7e-4});
    CHECK(fit.tau == Approx(125.6e-6).epsilon(1e-12));
    CHECK(fit.finite);
    CHECK(fit.r_squared == Approx(1.0));
    CHECK(fit.points == 1201);

    std::vector<double> flat(t.size(), 2e-10);
    const auto f = growth_time_constant(t, flat, {1e-4, 7e-4});
    CHECK_FALSE(f.finite);
    CHECK(std::isinf(f.tau));

    CHECK_THROWS_AS(growth_time_constant(t, s, {1e-4, 2e-3}), BadWindow);
    CHECK_THROWS_AS(growth_time_constant(t, s, {5e-4, 5.001e-4}), BadWindow);
    std::vector<double> zeros(t.size(), 0.0);
    CHECK_THROWS_AS(growth_time_constant(t, zeros, {1e-4, 7e-4}), BadWindow);
}

TEST_CASE("moving average") {
    const std::vector<double> x{1, 2, 3, 4, 5, 6, 7};
    const auto y = moving_average(x, 3);
    CHECK(y == std::vector<double>{2, 2, 3, 4, 5, 6, 6});
    CHECK(moving_average(x, 1) == x);
    CHECK_THROWS_AS(moving_average(x, 4), ValidationError);
    CHECK_THROWS_AS(moving_average(x, 9), ValidationError);
}

TEST_CASE("peak finding") {
    const auto t = grid(4001, 5e-7);
    const double t0 = 1.07e-3;
    std::vector<double> s(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double u = (t[i] - t0) / 2e-4;
        s[i] = std::exp(-u * u);
    }
    const auto p = find_peak(t, s, 51);
    CHECK(p.time == Approx(t0).epsilon(1e-12));
    CHECK(p.envelope == Approx(1.0));

    // a ripple before the main lobe is not a peak
    std::vector<double> noisy = s;
    RandomStream rng(12, 0);
    for (double& v : noisy) v *= 1.0 + 0.02 * rng.normal();
    CHECK(std::abs(find_peak(t, noisy, 51).time - t0) < 2e-5);

    std::vector<double> rising(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) rising[i] = 1.0 + t[i];
    CHECK_THROWS_AS(find_peak(t, rising, 51), NoPeak);
}

TEST_CASE("phase-space histogram") {
    RandomStream rng(77, 0);
    const std::size_t n = 20000;
    std::vector<double> z(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = 1e-9 * rng.normal();
        v[i] = 1e-9 * kOmega * rng.normal();
    }
    const auto h = phase_space_histogram(z, v, 0.0, 41);
    std::size_t total = 0;
    for (auto c : h.counts) total += c;
    CHECK(total == n);
    CHECK(h.run_count == n);
    CHECK(h.z_edges.size() == 42);
    CHECK(h.z_edges.front() == Approx(-h.z_edges.back()));
    CHECK(sample_aspect_ratio(z, v, kOmega) == Approx(1.0).epsilon(0.05));
    // binned second moment of z against the sample value
    double binned = 0.0;
    for (std::size_t iz = 0; iz < h.bins; ++iz) {
        const double c = 0.5 * (h.z_edges[iz] + h.z_edges[iz + 1]);
        for (std::size_t iv = 0; iv < h.bins; ++iv) binned += c * c * h.at(iz, iv);
    }
    double direct = 0.0;
    for (double x : z) direct += x * x;
    CHECK(binned == Approx(direct).epsilon(0.02));
}

TEST_CASE("histogram over trajectories uses the sample grid") {
    std::vector<Trajectory> runs;
    for (int r = 0; r < 3; ++r) runs.push_back(constant_run(r * 1e-9, r * 1e-3, 11));
    const auto h = phase_space_histogram(runs, 2.5e-6, 5);
    CHECK(h.run_count == 3);
    CHECK(grid_index(2.5e-6, 5e-7, 11) == 5);
    CHECK_THROWS_AS(phase_space_histogram(runs, 2.6e-6, 5), GridMismatch);
    CHECK_THROWS_AS(grid_index(1.0, 5e-7, 11), GridMismatch);
}
