#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "levitate/constants.hpp"
#include "levitate/errors.hpp"
#include "levitate/physics.hpp"

using namespace levitate;
using doctest::Approx;

namespace {

const double kOmega = 2.0 * constants::kPi * 77.6e3;

ParticleSpec sized(double r) { return ParticleSpec(r, 1800.0); }

GasEnvironment air(double pascal, double t = 300.0) { return GasEnvironment(pascal, t); }

}  // namespace

TEST_CASE("mass from radius and density") {
    CHECK(mass_of(sized(1e-7)) == Approx(7.54e-18).epsilon(1e-3));
    CHECK(mass_of(sized(5e-8)) == Approx(9.42e-19).epsilon(1e-3));
    // cubic scaling towards the r -> 0 limit
    CHECK(mass_of(sized(1e-12)) == Approx(mass_of(sized(1e-7)) * 1e-15).epsilon(1e-12));
    CHECK_THROWS_AS(ParticleSpec(0.0, 1800.0), ValidationError);
    CHECK_THROWS_WITH_AS(ParticleSpec(-1e-7, 1800.0), "radius > 0", ValidationError);
}

TEST_CASE("mean gas speed") {
    CHECK(mean_gas_speed(GasEnvironment(1.0, 300.0, 4.81e-26)) == Approx(293.4).epsilon(1e-3));
    CHECK(mean_gas_speed(GasEnvironment(1.0, 300.0, 6.646e-27)) == Approx(789.5).epsilon(1e-3));
    CHECK(mean_gas_speed(GasEnvironment(1.0, 0.0)) == 0.0);
    CHECK(constants::kAirMolecularMass == Approx(4.81e-26).epsilon(1e-3));
}

TEST_CASE("gas damping rate") {
    const auto p = sized(1e-7);
    CHECK(gas_damping_rate(air(500.0), p) == Approx(1.45e5).epsilon(5e-3));
    CHECK(gas_damping_rate(air(3e-5), p) == Approx(8.7e-3).epsilon(5e-3));
    CHECK(gas_damping_rate(air(0.0), p) == 0.0);
    CHECK(constants::mbar_to_pascal(5.0) == Approx(500.0));
}

TEST_CASE("damping is linear in pressure and quadratic in radius at fixed mass") {
    const auto p = sized(1e-7);
    const double base = gas_damping_rate(air(10.0), p);
    for (double k : {0.1, 0.5, 2.0, 7.0, 1e3}) {
        CHECK(gas_damping_rate(air(10.0 * k), p) == Approx(base * k).epsilon(1e-12));
    }
    for (double k : {0.5, 1.5, 3.0}) {
        ParticleSpec q(1e-7 * k, 1800.0 / (k * k * k));
        CHECK(gas_damping_rate(air(10.0), q) == Approx(base * k * k).epsilon(1e-12));
    }
}

TEST_CASE("polarizability prefactor") {
    TrapSpec trap;
    CHECK(polarizability_prefactor(sized(1e-7), trap) == Approx(5.52e-30).epsilon(2e-3));
    CHECK(polarizability_prefactor(ParticleSpec(1e-7, 1800.0, 1.0), trap) == 0.0);
    CHECK(polarizability_prefactor(sized(2e-7), trap) ==
          Approx(8.0 * polarizability_prefactor(sized(1e-7), trap)).epsilon(1e-12));
}

TEST_CASE("axial force") {
    const auto p = sized(1e-7);
    TrapSpec harmonic(kOmega, TrapModel::Harmonic);
    TrapSpec gauss(kOmega, TrapModel::GaussianAxial);
    CHECK(axial_force(harmonic, p, 1e-9) == Approx(-1.79e-15).epsilon(2e-3));
    CHECK(axial_force(harmonic, p, 0.0) == 0.0);
    CHECK(axial_force(gauss, p, 0.0) == 0.0);
    CHECK(gauss.rayleigh_range() == Approx(5.07e-7).epsilon(1e-3));

    const double zr = gauss.rayleigh_range();
    CHECK(axial_force(gauss, p, zr) == Approx(0.25 * axial_force(harmonic, p, zr)).epsilon(1e-12));
}

TEST_CASE("gaussian profile agrees with harmonic to first order and is softer") {
    const auto p = sized(1e-7);
    TrapSpec harmonic(kOmega, TrapModel::Harmonic);
    TrapSpec gauss(kOmega, TrapModel::GaussianAxial);
    const double zr = gauss.rayleigh_range();
    for (int i = -30; i <= 30; ++i) {
        if (i == 0) continue;
        const double z = zr * i / 100.0;
        const double fh = axial_force(harmonic, p, z);
        const double fg = axial_force(gauss, p, z);
        CHECK(std::abs(fg - fh) / std::abs(fh) <= 3.0 * (z / zr) * (z / zr));
    }
    for (double u : {1e-4, 0.01, 0.3, 1.0, 3.0, 50.0, -0.2, -4.0}) {
        const double z = u * zr;
        CHECK(std::abs(axial_force(gauss, p, z)) < std::abs(axial_force(harmonic, p, z)));
        // odd function
        CHECK(axial_force(gauss, p, -z) == -axial_force(gauss, p, z));
    }
}

TEST_CASE("fluctuation force amplitude") {
    // mass 7.54e-18 kg: radius chosen so the sphere has exactly that mass
    const double r = std::cbrt(3.0 * 7.54e-18 / (4.0 * constants::kPi * 1800.0));
    const auto p = sized(r);
    CHECK(noise_force_amplitude(air(1.0), p, 8.68e-3) == Approx(2.33e-20).epsilon(2e-3));
    CHECK(noise_force_amplitude(air(1.0), p, 0.0) == 0.0);
    CHECK(noise_force_amplitude(air(1.0, 0.0), p, 8.68e-3) == 0.0);
}

TEST_CASE("thermal variances") {
    TrapSpec trap;
    const auto p = sized(1e-7);
    CHECK(thermal_position_variance(300.0, trap, p) == Approx(2.31e-15).epsilon(2e-3));
    CHECK(thermal_velocity_variance(300.0, p) ==
          Approx(constants::kBoltzmann * 300.0 / mass_of(p)).epsilon(1e-14));
}

TEST_CASE("trap model names round-trip") {
    for (auto m : {TrapModel::Harmonic, TrapModel::GaussianAxial})
        CHECK(trap_model_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(trap_model_from_string("quartic"), ValidationError);
}
