#pragma once

#include <cmath>
#include <numbers>

namespace biphoton {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Vacuum wavelength <-> absolute frequency.
inline double wavelength_nm_to_hz(double wavelength_nm) {
    return kSpeedOfLight / (wavelength_nm * 1e-9);
}

inline double hz_to_wavelength_nm(double frequency_hz) {
    return kSpeedOfLight / frequency_hz * 1e9;
}

// Principal phase branch (-pi, pi].
inline double wrap_phase(double phase_rad) {
    double w = std::remainder(phase_rad, kTwoPi);
    if (w <= -kPi) w += kTwoPi;
    return w;
}

}  // namespace biphoton
