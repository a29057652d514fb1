#pragma once

#include <numbers>

namespace vsp::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// CODATA 2018 exact / recommended values, SI.
inline constexpr double speed_of_light = 299792458.0;     // m/s
inline constexpr double planck = 6.62607015e-34;          // J s
inline constexpr double hbar = planck / two_pi;           // J s
inline constexpr double boltzmann = 1.380649e-23;         // J/K
inline constexpr double torr = 101325.0 / 760.0;          // Pa
inline constexpr double zero_celsius = 273.15;            // K

// Unit helpers. Angular frequency <-> cyclic MHz is the common conversion at
// the file and command-line boundaries.
inline constexpr double mhz_to_rad_s(double mhz) { return two_pi * mhz * 1e6; }
inline constexpr double rad_s_to_mhz(double w) { return w / (two_pi * 1e6); }

}  // namespace vsp::constants
