// units.hpp: conversions between quoted lab units and internal units
//
// Internally every rate is an angular frequency in rad/us and every time is
// in us. A value quoted as "14.0 * 2pi MHz" is stored as 14.0 * 2pi rad/us.

#pragma once

#include <numbers>

namespace tdas::units {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// "x * 2pi MHz" -> rad/us
constexpr double from_2pi_mhz(double x) { return two_pi * x; }
constexpr double to_2pi_mhz(double rad_per_us) { return rad_per_us / two_pi; }

// "x * 2pi Hz" -> rad/us
constexpr double from_2pi_hz(double x) { return two_pi * x * 1e-6; }
constexpr double to_2pi_hz(double rad_per_us) { return rad_per_us / two_pi * 1e6; }

constexpr double ms_to_us(double ms) { return ms * 1e3; }
constexpr double s_to_us(double s) { return s * 1e6; }

} // namespace tdas::units
