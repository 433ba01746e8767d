#pragma once

#include <vector>

#include "levitate/integrator.hpp"

namespace levitate {

// Row-major 2x2 matrix acting on (z, v).
struct Matrix2 {
    double a = 1.0, b = 0.0;
    double c = 0.0, d = 1.0;

    static Matrix2 identity() { return {}; }
    double determinant() const { return a * d - b * c; }
    Matrix2 transpose() const { return {a, c, b, d}; }
};

Matrix2 operator*(const Matrix2& x, const Matrix2& y);

struct CovarianceState {
    double mean_z = 0.0;  // m
    double mean_v = 0.0;  // m/s
    double zz = 0.0;      // m^2
    double zv = 0.0;      // m^2/s
    double vv = 0.0;      // m^2/s^2

    static CovarianceState thermal(double temperature, const TrapSpec& trap,
                                   const ParticleSpec& particle);
    double determinant() const { return zz * vv - zv * zv; }
};

// exp(A dt) for A = [[0, 1], [-omega^2, -gamma]]; all damping regimes.
Matrix2 segment_map(double omega, double gamma, double dt);

// One pulse: a quarter period at omega sqrt(S), then a quarter period at
// omega. Equals diag(-sqrt(S), -1/sqrt(S)).
Matrix2 pulse_map(double depth, double omega_z);

// Exact moment update of dz = v dt, dv = (-omega^2 z - gamma v) dt + sqrt(D) dW
// over dt. `velocity_diffusion` is D = 2 Gamma_m k_B T / m in m^2/s^3.
CovarianceState propagate(const CovarianceState& state, double omega, double gamma,
                          double velocity_diffusion, double dt);

// 2 Gamma_m k_B T / m of the configured gas.
double velocity_diffusion(const GasEnvironment& gas, const ParticleSpec& particle);

// n * 10 log10(1/sqrt(S)): gain of the position standard deviation along the
// major axis after n pulses, in the amplitude dB convention.
double predicted_expansion_db(int n_pulses, double depth);

// Pulse period divided by ln(1/sqrt(S)) and by ln(1/S) respectively.
struct GrowthConstants {
    double amplitude;  // s
    double variance;   // s
};
GrowthConstants analytic_growth_constants(const ModulationSchedule& schedule);

// Linear-model moments of the ensemble described by `config` (harmonic force
// regardless of config.trap.model) at each requested time, sorted ascending.
std::vector<CovarianceState> predict_moments(const SimConfig& config,
                                             const std::vector<double>& times);

// Ratio of semi-axes (major/minor) of the covariance ellipse in the scaled
// coordinates (z, v / omega).
double ellipse_aspect_ratio(double zz, double zv, double vv, double omega);

}  // namespace levitate
