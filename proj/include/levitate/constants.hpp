#pragma once

#include <numbers>

namespace levitate::constants {

inline constexpr double kPi = std::numbers::pi;

// CODATA 2018 exact / recommended values.
inline constexpr double kBoltzmann = 1.380649e-23;      // J/K
inline constexpr double kHbar = 1.054571817e-34;        // J s
inline constexpr double kSpeedOfLight = 2.99792458e8;   // m/s
inline constexpr double kAvogadro = 6.02214076e23;      // 1/mol

// Dry air, 28.97 g/mol, per molecule.
inline constexpr double kAirMolecularMass = 28.97e-3 / kAvogadro;  // kg

inline constexpr double kPascalPerMbar = 100.0;

inline constexpr double mbar_to_pascal(double mbar) { return mbar * kPascalPerMbar; }
inline constexpr double pascal_to_mbar(double pa) { return pa / kPascalPerMbar; }

}  // namespace levitate::constants
