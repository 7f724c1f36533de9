#pragma once

#include <vector>

#include "mwqed/emission_rates.hpp"
#include "mwqed/lattice.hpp"

namespace mwqed::sx {

// Box-quantized continuum: k_m = 2 pi m / L with |k_m| <= k_cutoff.
struct KGrid {
    double box_length = 400.0;  // units of d
    double k_cutoff = 6.0;      // units of k_r

    double length() const { return box_length * pi; }  // units of 1/k_r
    double dk() const { return 2.0 * pi / length(); }
    int m_max() const;
    int count() const { return 2 * m_max() + 1; }
    std::vector<double> modes() const;

    // Errors for hard violations, warnings for soft ones.
    void validate(const lattice::LatticeParams& p, const rates::DriveParams& drive) const;
};

}  // namespace mwqed::sx
