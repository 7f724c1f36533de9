#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "mwqed/units.hpp"

namespace mwqed::lattice {

using cplx = std::complex<double>;

struct SiOverrides {
    std::optional<double> lambda_z;     // m
    std::optional<double> lambda_perp;  // m
    std::optional<double> mass;         // kg
    std::optional<double> gravity;      // m/s^2
    std::optional<double> omega_z;      // rad/s, residual longitudinal trap
};

struct LatticeParams {
    double s_z = 0.0;
    double s_perp = 0.0;
    double lambda_z = 790.0e-9;
    double lambda_perp = 1064.0e-9;
    double mass = codata::rb87_mass_amu * codata::amu;
    double gravity = codata::g_standard;

    // internal units
    double k_r = 1.0;
    double d = pi;
    double omega_r = 1.0;
    double omega_ho = 0.0;
    double omega_z = 0.0;  // validity bound only

    SiUnits si;

    // s_z^(-1/4); throws at zero depth where the oscillator length is undefined
    double a_ho() const;
    // transverse oscillator length in units of 1/k_r (built from s_perp, lambda_perp)
    double a_perp() const;
    // longest simulated time before the residual trap matters, 2 pi / omega_z
    double max_free_time() const;
};

LatticeParams derive_params(double s_z, double s_perp, const SiOverrides& overrides = {});

// Throw if t_total runs past the free-propagation window.
void check_free_time(const LatticeParams& p, double t_total);

struct BoxNorm {
    double length;  // units of 1/k_r
};
struct WignerSeitz {};

// gamma_{j,k} for a Gaussian Wannier state at site j and a plane wave k.
cplx franck_condon(int j, double k, const LatticeParams& p, BoxNorm norm);
cplx franck_condon(int j, double k, const LatticeParams& p, WignerSeitz);

struct BandStructure {
    double s_z = 0.0;
    std::vector<double> q;        // (-1, 1]
    std::vector<double> epsilon;  // ground band
    int plane_wave_cutoff = 0;
    double convergence_residual = 0.0;
};

BandStructure band_structure(double s_z, int n_q = 64, int cutoff = 21);

// Fourier coefficient -(1/2) Int_{-1}^{1} dq e^{i q pi} eps_q; imaginary part is a symmetry residual.
cplx tunneling_coefficient(const BandStructure& band);
double hubbard_J(const BandStructure& band);

// scattering_length in m; default 100 a0
double hubbard_U(const LatticeParams& p, double scattering_length = 100.0 * codata::bohr_radius);

struct Dispersion {
    double k_resonant = 0.0;  // >= 0
    double k_tilde = 0.0;     // (-1, 1]
    int band_index = 0;
    double v_g = 0.0;
};

Dispersion dispersion(double delta);
double reduced_zone_energy(double k_tilde, int band_index);
// fold any wavenumber into (-1, 1]
double fold_quasimomentum(double q);

struct BlochPhase {
    double q = 0.0;
    double tau_B = 0.0;  // internal time units
};

BlochPhase bloch_phase(double t_B, const LatticeParams& p);

}  // namespace mwqed::lattice
