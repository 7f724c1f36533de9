#include "mwqed/faddeeva.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace mwqed::spectral {

namespace {

constexpr double two_over_sqrt_pi = 2.0 * std::numbers::inv_sqrtpi;

// Weideman's rational expansion (SIAM J. Numer. Anal. 31 (1994) 1497), N = 48 terms.
// Relative error near 1e-15 throughout the closed upper half plane.
constexpr int kTerms = 48;

struct WeidemanCoefficients {
    double L;
    std::array<double, kTerms> a;  // a[m-1] multiplies Z^(m-1)

    WeidemanCoefficients() {
        const int M = 2 * kTerms;
        const int n = 2 * M;
        L = std::sqrt(kTerms / std::sqrt(2.0));
        std::vector<double> f(n, 0.0);
        for (int k = -M + 1; k <= M - 1; ++k) {
            const double t = L * std::tan(0.5 * k * std::numbers::pi / M);
            f[k + M] = std::exp(-t * t) * (L * L + t * t);
        }
        // a_m = Re FFT(fftshift(f))_m / n
        for (int m = 1; m <= kTerms; ++m) {
            double re = 0.0;
            for (int i = 0; i < n; ++i) re += f[(i + n / 2) % n] * std::cos(2.0 * std::numbers::pi * m * i / n);
            a[m - 1] = re / n;
        }
    }
};

const WeidemanCoefficients& coefficients() {
    static const WeidemanCoefficients c;
    return c;
}

// w(z) for Im z >= 0
cplx w_upper(cplx z) {
    const auto& c = coefficients();
    const cplx iz(-z.imag(), z.real());
    const cplx den = c.L - iz;
    const cplx Z = (c.L + iz) / den;
    cplx p = c.a[kTerms - 1];
    for (int m = kTerms - 2; m >= 0; --m) p = p * Z + c.a[m];
    return 2.0 * p / (den * den) + std::numbers::inv_sqrtpi / den;
}

}  // namespace

cplx faddeeva_w(cplx z) {
    if (z.imag() >= 0.0) return w_upper(z);
    // reflection into the upper half plane
    return 2.0 * std::exp(-z * z) - w_upper(-z);
}

cplx faddeeva_w_scaled(cplx z, double c) {
    if (z.imag() >= 0.0) return std::exp(-c * c) * w_upper(z);
    return 2.0 * std::exp(-c * c - z * z) - std::exp(-c * c) * w_upper(-z);
}

cplx faddeeva_w_derivative(cplx z) { return -2.0 * z * faddeeva_w(z) + cplx(0.0, two_over_sqrt_pi); }

cplx cerfc(cplx z) {
    if (z.real() >= 0.0) {
        // erfc(z) = exp(-z^2) w(iz) with Im(iz) = Re z >= 0
        return std::exp(-z * z) * w_upper(cplx(-z.imag(), z.real()));
    }
    const cplx mz = -z;
    return 2.0 - std::exp(-mz * mz) * w_upper(cplx(-mz.imag(), mz.real()));
}

}  // namespace mwqed::spectral
