#include "levitate/physics.hpp"

#include <cmath>
#include <string>

#include "levitate/errors.hpp"

namespace levitate {

using constants::kBoltzmann;
using constants::kPi;

namespace {

void require(bool ok, const char* invariant) {
    if (!ok) throw ValidationError(invariant);
}

}  // namespace

ParticleSpec::ParticleSpec(double radius, double density, double refractive_index)
    : radius(radius), density(density), refractive_index(refractive_index) {
    validate();
}

void ParticleSpec::validate() const {
    require(std::isfinite(radius) && radius > 0.0, "radius > 0");
    require(std::isfinite(density) && density > 0.0, "density > 0");
    require(std::isfinite(refractive_index) && refractive_index >= 1.0,
            "refractive_index >= 1");
}

GasEnvironment::GasEnvironment(double pressure, double temperature, double molecular_mass)
    : pressure(pressure), temperature(temperature), molecular_mass(molecular_mass) {
    validate();
}

void GasEnvironment::validate() const {
    require(std::isfinite(pressure) && pressure >= 0.0, "pressure >= 0");
    require(std::isfinite(temperature) && temperature >= 0.0, "temperature >= 0");
    require(std::isfinite(molecular_mass) && molecular_mass > 0.0, "molecular_mass > 0");
}

std::string_view to_string(TrapModel model) {
    return model == TrapModel::Harmonic ? "harmonic" : "gaussian_axial";
}

TrapModel trap_model_from_string(std::string_view name) {
    if (name == "harmonic") return TrapModel::Harmonic;
    if (name == "gaussian_axial") return TrapModel::GaussianAxial;
    throw ValidationError("trap.model must be harmonic or gaussian_axial, got '" +
                          std::string(name) + "'");
}

TrapSpec::TrapSpec(double angular_frequency, TrapModel model, double medium_index,
                   double waist_radius, double wavelength)
    : angular_frequency(angular_frequency),
      medium_index(medium_index),
      waist_radius(waist_radius),
      wavelength(wavelength),
      model(model) {
    validate();
}

double TrapSpec::rayleigh_range() const {
    return kPi * waist_radius * waist_radius / wavelength;
}

void TrapSpec::validate() const {
    require(std::isfinite(angular_frequency) && angular_frequency > 0.0,
            "angular_frequency > 0");
    require(std::isfinite(medium_index) && medium_index >= 1.0, "medium_index >= 1");
    if (model == TrapModel::GaussianAxial) {
        require(std::isfinite(waist_radius) && waist_radius > 0.0, "waist_radius > 0");
        require(std::isfinite(wavelength) && wavelength > 0.0, "wavelength > 0");
        require(rayleigh_range() > 0.0, "rayleigh_range > 0");
    }
}

double mass_of(const ParticleSpec& particle) {
    const double r = particle.radius;
    return 4.0 * kPi * r * r * r * particle.density / 3.0;
}

double mean_gas_speed(const GasEnvironment& gas) {
    return std::sqrt(kBoltzmann * gas.temperature / gas.molecular_mass);
}

double gas_damping_rate(const GasEnvironment& gas, const ParticleSpec& particle) {
    const double v = mean_gas_speed(gas);
    if (gas.pressure == 0.0 || v == 0.0) return 0.0;
    const double r = particle.radius;
    return 64.0 * gas.pressure * r * r / (mass_of(particle) * v);
}

double polarizability_prefactor(const ParticleSpec& particle, const TrapSpec& trap) {
    const double nr = particle.refractive_index / trap.medium_index;
    const double nr2 = nr * nr;
    const double r = particle.radius;
    return 2.0 * kPi * trap.medium_index * r * r * r / constants::kSpeedOfLight *
           (nr2 - 1.0) / (nr2 + 2.0);
}

double axial_force(const TrapSpec& trap, const ParticleSpec& particle, double z) {
    return mass_of(particle) * axial_acceleration(trap, z);
}

double noise_force_amplitude(const GasEnvironment& gas, const ParticleSpec& particle,
                             double damping) {
    if (damping < 0.0) throw ValidationError("damping >= 0");
    return std::sqrt(2.0 * mass_of(particle) * damping * kBoltzmann * gas.temperature);
}

double thermal_position_variance(double temperature, const TrapSpec& trap,
                                 const ParticleSpec& particle) {
    const double w = trap.angular_frequency;
    return kBoltzmann * temperature / (mass_of(particle) * w * w);
}

double thermal_velocity_variance(double temperature, const ParticleSpec& particle) {
    return kBoltzmann * temperature / mass_of(particle);
}

}  // namespace levitate
