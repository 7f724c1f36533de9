#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "mwqed/emission_rates.hpp"
#include "mwqed/kgrid.hpp"
#include "mwqed/lattice.hpp"

namespace mwqed::sx {

using cplx = std::complex<double>;
using lattice::LatticeParams;
using rates::DriveParams;

inline constexpr double default_resolution = 0.15;  // detector width in k_r

// One excitation shared between emitters and box modes:
// H = Σ Δ |j><j| + Σ k^2 |k><k| + Σ (Ω/2)(γ_{j,k} |j><k| + h.c.)
struct CoupledModeModel {
    std::vector<int> sites;  // lattice labels, emitter j sits at z = d j
    KGrid grid;
    std::vector<double> k;
    double delta = 0.0;
    Eigen::MatrixXcd V;  // sites x modes

    int n_sites() const { return static_cast<int>(sites.size()); }
    int n_modes() const { return static_cast<int>(k.size()); }
    int dim() const { return n_sites() + n_modes(); }

    void apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const;
    Eigen::MatrixXcd dense() const;
    // Gershgorin interval containing the spectrum
    std::pair<double, double> spectral_bounds() const;
};

CoupledModeModel build_model(const LatticeParams& p, const DriveParams& drive, int M, const KGrid& grid);
CoupledModeModel build_model(const LatticeParams& p, const DriveParams& drive, std::vector<int> sites,
                             const KGrid& grid);

struct InitialState {
    enum class Kind { TDS, Localized, Custom };
    Kind kind = Kind::TDS;
    double q = 0.0;                  // TDS quasimomentum (k_r)
    int j0 = 0;                      // Localized site label
    std::vector<cplx> amplitudes;    // Custom, one per model site

    static InitialState tds(double q) { return {Kind::TDS, q, 0, {}}; }
    static InitialState localized(int j0) { return {Kind::Localized, 0.0, j0, {}}; }
    static InitialState custom(std::vector<cplx> a) { return {Kind::Custom, 0.0, 0, std::move(a)}; }
};

Eigen::VectorXcd initial_vector(const CoupledModeModel& model, const InitialState& init);

struct WaveState {
    double t = 0.0;
    Eigen::VectorXcd A;
    Eigen::VectorXcd B;
};

struct Trajectory {
    std::vector<WaveState> states;
    double max_norm_drift = 0.0;
    int matvecs = 0;
};

struct EvolveOptions {
    double truncation = 1e-16;   // Chebyshev coefficient cutoff
    double max_chunk = 400.0;    // largest half-width * dt per propagation chunk
    double norm_tolerance = 1e-8;
};

Trajectory evolve(const CoupledModeModel& model, const InitialState& init, const std::vector<double>& t_grid,
                  const EvolveOptions& opt = {});
// Same, from an arbitrary full state vector (sites then modes).
Trajectory evolve_vector(const CoupledModeModel& model, Eigen::VectorXcd psi, const std::vector<double>& t_grid,
                         const EvolveOptions& opt = {});

double excited_fraction(const WaveState& s);

struct Distribution {
    std::vector<double> x;
    std::vector<double> density;
};

// Σ_m |B_m|^2 g_σ(k - k_m) on the mode grid; σ = 0 gives |B_k|^2 / dk
Distribution momentum_distribution(const WaveState& s, const KGrid& grid, double sigma_k = default_resolution);
// |Σ_m L^-1/2 e^{i k_m z} B_m|^2; the default z grid is the box DFT grid
Distribution position_distribution(const WaveState& s, const KGrid& grid, std::vector<double> z = {});

struct Directional {
    double P_plus = 0.0;
    double P_minus = 0.0;
};
Directional directional_populations(const WaveState& s, const KGrid& grid);

struct SweepSpec {
    std::vector<double> deltas;
    std::vector<double> phis;
    int M = 4;
    double omega_rabi = 0.6;
    double t_pulse = 0.0;  // 1/ω_r
    KGrid grid;
    double sigma_k = default_resolution;
    std::vector<double> k_out;  // momentum sampling for stored distributions; empty = none
    int threads = 1;
};

struct SweepCell {
    double delta = 0.0, phi = 0.0;
    double P_plus = 0.0, P_minus = 0.0, emitted = 0.0;
    std::vector<double> n_k;
};

struct EmissionMap {
    std::vector<double> deltas, phis, k_out;
    std::vector<SweepCell> cells;  // row-major: cells[i * phis.size() + j] is (deltas[i], phis[j])
    // per Δ row: peak position in q of P_minus(φ) and its offset from -k(Δ) folded into the zone
    std::vector<double> center_q;
    std::vector<double> center_deviation;

    const SweepCell& at(size_t i, size_t j) const { return cells[i * phis.size() + j]; }
};

EmissionMap sweep_emission_map(const LatticeParams& p, const SweepSpec& spec);

// Peak position in q of a sampled periodic response, from its first Fourier harmonic.
double first_harmonic_center(const std::vector<double>& phis, const std::vector<double>& values);

struct ThermalResult {
    std::vector<double> t;
    std::vector<double> q;
    std::vector<double> weights;
    std::vector<double> excited_fraction;          // weighted over q
    std::vector<std::vector<double>> survival;     // [q][t]
};

ThermalResult thermal_average(const LatticeParams& p, const DriveParams& drive, int M, const std::vector<double>& q,
                              const std::vector<double>& weights, const std::vector<double>& t_grid,
                              const KGrid& grid, int threads = 1);

}  // namespace mwqed::sx
