#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <string>
#include <vector>

#include "mwqed/emission_rates.hpp"
#include "mwqed/faddeeva.hpp"
#include "mwqed/kgrid.hpp"
#include "mwqed/lattice.hpp"

// Even-parity sector of three emitters at sites -1, 0, 1 started in (1,1,1)/sqrt(3).
// Everything is parameterized by zeta = sqrt(omega); Im zeta >= 0 is the physical sheet.
namespace mwqed::spectral {

using lattice::LatticeParams;
using rates::DriveParams;
using Vec3c = std::array<cplx, 3>;

struct SheetPoint {
    cplx zeta;

    cplx omega() const { return zeta * zeta; }
    // 0 on the physical sheet, 1 on the second sheet
    int sheet() const { return zeta.imag() >= 0.0 ? 0 : 1; }
    bool principal() const { return sheet() == 0; }

    // Physical-sheet preimage of omega.
    static SheetPoint physical(cplx omega);
    // Value just above the positive real axis, omega + i0.
    static SheetPoint above_real(double omega);
};

cplx gtilde(int n, SheetPoint pt, const LatticeParams& p, const DriveParams& drive);
cplx gtilde_dzeta(int n, SheetPoint pt, const LatticeParams& p, const DriveParams& drive);

Eigen::Matrix2cd gmatrix(SheetPoint pt, const LatticeParams& p, const DriveParams& drive);
cplx gdet(SheetPoint pt, const LatticeParams& p, const DriveParams& drive);

// F(zeta) = zeta^2 det G(zeta^2), regular at zeta = 0, and dF/dzeta.
struct EntireDet {
    cplx value;
    cplx derivative;
};
EntireDet entire_det(cplx zeta, const LatticeParams& p, const DriveParams& drive);

enum class ModeClass { BS, sR, SR, other };
std::string to_string(ModeClass c);

struct SpectralMode {
    cplx omega;
    cplx zeta;
    Vec3c amplitudes{};
    ModeClass cls = ModeClass::other;
    double residual = 0.0;  // |last Newton step| in zeta
    bool retained = false;  // enclosed by the reconstruction contour
    std::string label;      // BS1, BS2, sR, SR, other
};

struct SearchRegion {
    double re_min, re_max, im_min, im_max;
};

SearchRegion default_search_region(const DriveParams& drive);

struct PoleSearchOptions {
    double tol = 1e-12;          // |F| target after polishing
    double min_box = 1e-3;       // subdivision stops below this size
    double cut_angle = pi / 12;  // zeta-ray angle of the deformed cut
};

struct PoleSearch {
    std::vector<SpectralMode> modes;   // sorted by Re omega, then Im omega
    std::vector<std::string> failures;  // non-fatal seed failures
};

PoleSearch find_poles(const LatticeParams& p, const DriveParams& drive, const SearchRegion& region,
                      const PoleSearchOptions& opt = {});

// (G22, G22 - G21, G22) / (sqrt(3) d det G / d omega) at a simple zero
Vec3c residue_amplitudes(cplx zeta, const LatticeParams& p, const DriveParams& drive);
// amplitude vector at time t: A_{p,0} exp(-i omega_p t)
Vec3c mode_amplitudes_at(const SpectralMode& m, double t);

struct BicProfile {
    std::vector<double> k;
    std::vector<cplx> B_k;
    std::vector<double> n_k;  // |B_k|^2 / dk
    std::vector<double> z;
    std::vector<double> n_z;  // |B_z|^2
    double norm = 0.0;        // Σ|B_k|^2
};

// Field of one mode at time t on the box grid. z grid defaults to the box DFT grid.
BicProfile bic_profile(const SpectralMode& mode, const LatticeParams& p, const DriveParams& drive,
                       const sx::KGrid& grid, double t = 0.0, std::vector<double> z = {});

struct SpectralEvolution {
    std::vector<double> t;
    std::vector<cplx> I1, I2;
    std::vector<Vec3c> sites;
    std::vector<double> excited_fraction;
    double cut_error = 0.0;  // quadrature error estimate of the branch-cut term
    cplx completeness_I1, completeness_I2;  // pole sum + cut at t = 0
};

SpectralEvolution evolve_spectral(const LatticeParams& p, const DriveParams& drive, const std::vector<double>& t,
                                  const std::vector<SpectralMode>& modes, double cut_angle = pi / 12);

}  // namespace mwqed::spectral
