#pragma once

#include <cmath>
#include <numbers>

// Internal unit system: frequency THz, symbol rate GBaud, length km,
// power W, field attenuation 1/km, dispersion ps^k/km, gamma 1/(W km).

namespace uwbnli {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSpeedOfLight = 2.99792458e8; // m/s
inline constexpr double kPlanck = 6.62607015e-34;     // J s

/// dB/km of power loss per 1/km of field attenuation: 2 * 10 log10(e).
inline constexpr double kDbPerFieldNeper = 20.0 * std::numbers::log10e;

inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watt_to_dbm(double watt) { return 10.0 * std::log10(watt / 1e-3); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

inline constexpr double gbaud_to_thz(double gbaud) { return gbaud * 1e-3; }
inline constexpr double ghz_to_thz(double ghz) { return ghz * 1e-3; }

} // namespace uwbnli
