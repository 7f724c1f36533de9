#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <vector>

#include "mwqed/emission_rates.hpp"
#include "mwqed/lattice.hpp"

// Hardcore bosons on a short chain, local basis {empty, r, g}; r decays into the continuum, g is a spectator.
namespace mwqed::master {

using cplx = std::complex<double>;
using lattice::LatticeParams;
using rates::DriveParams;

struct CouplingMatrix {
    Eigen::MatrixXd gamma;    // Γ_{jj'}
    Eigen::MatrixXd j_shift;  // J_{jj'}
    double delta = 0.0;
    int max_separation = 0;
    std::vector<double> gamma_n, j_n;  // by separation n = |j - j'|
    double pv_residual = 0.0;          // largest change under the last grid doubling
};

// Separation-resolved couplings Γ_n/2 + i J_n = Int_0^inf dτ G_n(τ) e^{iΔτ}:
// Γ_n from the on-shell delta term, J_n from a principal-value k integral.
CouplingMatrix compute_couplings(const LatticeParams& p, const DriveParams& drive, int max_separation,
                                 int n_sites = -1);

enum class Local { empty = 0, r = 1, g = 2 };

struct LocalState {
    cplx empty = 0.0, r = 0.0, g = 0.0;
    static LocalState vacancy() { return {1.0, 0.0, 0.0}; }
    static LocalState red() { return {0.0, 1.0, 0.0}; }
    static LocalState green() { return {0.0, 0.0, 1.0}; }
    static LocalState superposition(cplx alpha, cplx beta) { return {0.0, alpha, beta}; }
};

struct SiteRegister {
    std::vector<LocalState> sites;
    int size() const { return static_cast<int>(sites.size()); }
    void validate() const;
};

struct DensityMatrix {
    double t = 0.0;
    Eigen::MatrixXcd rho;
};

struct MasterOptions {
    double delta_g = 0.0;
    bool include_lamb_shift = true;
    double rtol = 1e-10;
    double atol = 1e-12;
    int max_steps = 2000000;
    bool check_invariants = true;
};

struct MasterTrajectory {
    int n_sites = 0;
    std::vector<DensityMatrix> states;
    double max_trace_error = 0.0;
    double max_hermiticity_error = 0.0;
    double min_eigenvalue = 0.0;
    double max_ng_drift = 0.0;
    int steps = 0;
};

// Basis index Σ_j s_j 3^j with s_j in {0: empty, 1: r, 2: g}.
int hilbert_dim(int n_sites);
Eigen::VectorXcd product_state(const SiteRegister& reg);

// Sparse r_j, g_j annihilators and number operators
Eigen::SparseMatrix<cplx> lower_r(int n_sites, int j);
Eigen::SparseMatrix<cplx> lower_g(int n_sites, int j);

// Lindblad generator pieces, exposed for the dense superoperator cross-check.
struct Generator {
    Eigen::SparseMatrix<cplx> h_eff;             // H - (i/2) Σ Γ r_j^† r_j'
    std::vector<Eigen::SparseMatrix<cplx>> jumps;  // √λ Σ v_j r_j
    Eigen::SparseMatrix<cplx> hamiltonian;
};
Generator build_generator(int n_sites, const CouplingMatrix& c, const MasterOptions& opt);
Eigen::MatrixXcd apply_generator(const Generator& g, const Eigen::MatrixXcd& rho);

MasterTrajectory evolve_master(const SiteRegister& reg, const CouplingMatrix& c, const std::vector<double>& t_grid,
                               const MasterOptions& opt = {});
MasterTrajectory evolve_master(const Eigen::MatrixXcd& rho0, int n_sites, const CouplingMatrix& c,
                               const std::vector<double>& t_grid, const MasterOptions& opt = {});

// q grid of n points, cell centers tiling (-1.5, 1.5]
std::vector<double> default_q_grid(int n = 300);

struct MasterObservables {
    std::vector<double> t, q;
    std::vector<double> N_r, N_g;
    std::vector<std::vector<double>> n_r, n_g;  // [t][q]
};

// n_c(q) = (1/2) Σ_{jj'} <c_j^† c_j'> e^{i q π (j - j')}, Gaussian-smoothed with width sigma_k.
// Without smoothing Int over one zone of n_c equals N_c.
MasterObservables observables_master(const MasterTrajectory& tr, double sigma_k = 0.15,
                                     std::vector<double> q = {});
std::vector<double> quasimomentum_density(const Eigen::MatrixXcd& one_body, const std::vector<double>& q,
                                          double sigma_k);
Eigen::MatrixXcd one_body_matrix(const Eigen::MatrixXcd& rho, int n_sites, Local species);
// rho restricted to basis states holding exactly n_r red atoms (not renormalized)
Eigen::MatrixXcd project_excitations(const Eigen::MatrixXcd& rho, int n_sites, int n_r);

struct Visibility {
    double c0 = 0.0, c1 = 0.0;
    double c0_minus_c1() const { return c0 - c1; }
    double c1_minus_c0() const { return c1 - c0; }
};

// c0: |q| <= 0.5, c1: 0.5 < |q| <= 1.5, normalized to the total; uniform cell-centered grid expected
Visibility visibility(const std::vector<double>& q, const std::vector<double>& n);

}  // namespace mwqed::master
