#pragma once

#include <complex>

namespace mwqed::spectral {

using cplx = std::complex<double>;

// Faddeeva function w(z) = exp(-z^2) erfc(-iz).
cplx faddeeva_w(cplx z);

// exp(-c^2) w(z), evaluated without forming exp(-c^2) and w(z) separately when Im z < 0.
cplx faddeeva_w_scaled(cplx z, double c);

// w'(z) = -2 z w(z) + 2i/sqrt(pi)
cplx faddeeva_w_derivative(cplx z);

// complementary error function for complex argument
cplx cerfc(cplx z);

}  // namespace mwqed::spectral
