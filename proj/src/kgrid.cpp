#include "mwqed/kgrid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mwqed/errors.hpp"

namespace mwqed::sx {

int KGrid::m_max() const {
    // tolerate k_cutoff * L / 2pi landing a hair below an integer
    return static_cast<int>(std::floor(k_cutoff / dk() + 1e-9));
}

std::vector<double> KGrid::modes() const {
    const int mm = m_max();
    std::vector<double> k(2 * mm + 1);
    for (int m = -mm; m <= mm; ++m) k[m + mm] = m * dk();
    return k;
}

void KGrid::validate(const lattice::LatticeParams& p, const rates::DriveParams& drive) const {
    if (!(box_length > 0.0)) throw PhysicsError("box_length must be positive");
    if (!(k_cutoff > 0.0)) throw PhysicsError("k_cutoff must be positive");
    const double scale = std::max({drive.omega_rabi(), std::abs(drive.delta()), 1e-300});
    const double ratio = k_cutoff * k_cutoff / scale;
    if (ratio < 4.0)
        throw PhysicsError("k_cutoff too small: k_cutoff^2 / max(Omega, Delta) = " + std::to_string(ratio) +
                           " < 4");
    if (ratio < 10.0)
        warn("k_cutoff marginal: k_cutoff^2 / max(Omega, Delta) = " + std::to_string(ratio) + " < 10");
    if (drive.delta() > 0.0 && drive.omega_rabi() > 0.0 && p.s_z > 0.0) {
        const double g1 = rates::gamma_single(p, drive);
        const double v_g = 2.0 * std::sqrt(drive.delta());
        const double need = 10.0 * v_g / g1;
        if (length() < need)
            warn("box length " + std::to_string(length()) + " / k_r is below 10 v_g / Gamma_1 = " +
                 std::to_string(need) + "; boundary reflections possible");
    }
}

}  // namespace mwqed::sx
