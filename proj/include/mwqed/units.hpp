#pragma once

#include <numbers>

// Internal units: hbar = omega_r = k_r = 1. Then m = 1/2, d = pi, omega_k = k^2.
namespace mwqed {

inline constexpr double pi = std::numbers::pi;

namespace codata {
inline constexpr double hbar = 1.054571817e-34;         // J s
inline constexpr double amu = 1.66053906660e-27;        // kg
inline constexpr double bohr_radius = 5.29177210903e-11;  // m
inline constexpr double g_standard = 9.80665;           // m/s^2
inline constexpr double rb87_mass_amu = 86.909180527;
}  // namespace codata

// Conversion record between internal and SI units.
struct SiUnits {
    double omega_r = 0.0;  // rad/s
    double k_r = 0.0;      // 1/m

    double seconds(double t) const { return t / omega_r; }
    double ms(double t) const { return 1e3 * t / omega_r; }
    double us(double t) const { return 1e6 * t / omega_r; }
    double from_ms(double t_ms) const { return 1e-3 * t_ms * omega_r; }
    double from_seconds(double t_s) const { return t_s * omega_r; }
    // angular rate (internal) -> f in kHz, with omega = 2 pi f
    double khz(double rate) const { return rate * omega_r / (2.0 * pi) / 1e3; }
    double from_khz(double f_khz) const { return 2.0 * pi * f_khz * 1e3 / omega_r; }
    double meters(double x) const { return x / k_r; }
};

}  // namespace mwqed
