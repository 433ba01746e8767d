#pragma once

#include <string_view>

#include "levitate/constants.hpp"

namespace levitate {

// Silica sphere of the experiment: 200 nm diameter, 1800 kg/m^3, n = 1.44.
struct ParticleSpec {
    double radius = 100e-9;         // m
    double density = 1800.0;        // kg/m^3
    double refractive_index = 1.44;

    ParticleSpec() = default;
    ParticleSpec(double radius, double density, double refractive_index = 1.44);

    void validate() const;
};

struct GasEnvironment {
    double pressure = constants::mbar_to_pascal(3e-7);  // Pa
    double temperature = 300.0;                          // K
    double molecular_mass = constants::kAirMolecularMass;  // kg

    GasEnvironment() = default;
    GasEnvironment(double pressure, double temperature,
                   double molecular_mass = constants::kAirMolecularMass);

    void validate() const;
};

enum class TrapModel { Harmonic, GaussianAxial };

std::string_view to_string(TrapModel model);
TrapModel trap_model_from_string(std::string_view name);

// Axial trap. The strength is parametrized by the measured small-amplitude
// frequency; the beam geometry only fixes the Rayleigh range used by the
// GaussianAxial profile I(z) ∝ 1/(1 + (z/z_R)^2).
struct TrapSpec {
    double angular_frequency = 2.0 * constants::kPi * 77.6e3;  // rad/s
    double medium_index = 1.0;
    double waist_radius = 0.5e-6;  // m
    double wavelength = 1.55e-6;   // m
    TrapModel model = TrapModel::Harmonic;

    TrapSpec() = default;
    TrapSpec(double angular_frequency, TrapModel model, double medium_index = 1.0,
             double waist_radius = 0.5e-6, double wavelength = 1.55e-6);

    double rayleigh_range() const;
    void validate() const;
};

struct PhaseSpacePoint {
    double position = 0.0;  // m
    double velocity = 0.0;  // m/s
};

double mass_of(const ParticleSpec& particle);

// sqrt(k_B T / m_gas)
double mean_gas_speed(const GasEnvironment& gas);

// Gamma_m = 64 P r^2 / (m v_gas). Zero when the gas is at T = 0 or P = 0.
double gas_damping_rate(const GasEnvironment& gas, const ParticleSpec& particle);

// (2 pi n_m r^3 / c) (n_r^2 - 1)/(n_r^2 + 2), the factor multiplying dI/dz in
// the Rayleigh-regime gradient force.
double polarizability_prefactor(const ParticleSpec& particle, const TrapSpec& trap);

// Force per unit mass along the trap axis, before the modulation factor S(t).
inline double axial_acceleration(const TrapSpec& trap, double z) {
    const double w2 = trap.angular_frequency * trap.angular_frequency;
    if (trap.model == TrapModel::Harmonic) return -w2 * z;
    const double zr = trap.rayleigh_range();
    const double q = 1.0 + (z / zr) * (z / zr);
    return -w2 * z / (q * q);
}

double axial_force(const TrapSpec& trap, const ParticleSpec& particle, double z);

// Amplitude of the Langevin force, sqrt(2 m Gamma k_B T). The stochastic force
// is amplitude * eta(t) with <eta(t) eta(t')> = delta(t - t').
double noise_force_amplitude(const GasEnvironment& gas, const ParticleSpec& particle,
                             double damping);

// Equipartition variances of a thermal state in the harmonic trap.
double thermal_position_variance(double temperature, const TrapSpec& trap,
                                 const ParticleSpec& particle);
double thermal_velocity_variance(double temperature, const ParticleSpec& particle);

}  // namespace levitate
