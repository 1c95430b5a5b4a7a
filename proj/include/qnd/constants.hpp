#pragma once

#include <numbers>

namespace qnd::constants {

// CODATA 2018 exact values (SI).
inline constexpr double speed_of_light = 299792458.0;    // m/s
inline constexpr double planck = 6.62607015e-34;         // J s

inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline constexpr double amu_ca40 = 39.9625909;           // 40Ca mass number scale
inline constexpr double amu_n2 = 28.0061;                // 14N2 (charge-neutral difference irrelevant here)

}
