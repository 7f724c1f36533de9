#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace mwqed::quad {

using cplx = std::complex<double>;

// Fills out[0..n) with the integrand at x.
using VecIntegrand = std::function<void(double x, cplx* out)>;

struct VecResult {
    std::vector<cplx> value;
    double error = 0.0;  // max over components of the Gauss/Kronrod difference
    int evaluations = 0;
    bool converged = false;
};

// Globally adaptive 7/15-point Gauss-Kronrod for vector-valued integrands on [a, b].
// Stops when error <= max(abs_tol, rel_tol * max|value|) or after max_intervals.
VecResult adaptive_gk15(const VecIntegrand& f, int n, double a, double b, double abs_tol, double rel_tol,
                        int max_intervals = 4000);

// Composite Gauss-Legendre (20 points per panel) of a real integrand.
double gauss_legendre(const std::function<double(double)>& f, double a, double b, int panels);

}  // namespace mwqed::quad
