#include "mwqed/lattice.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "mwqed/errors.hpp"

namespace mwqed::lattice {

namespace {

double lowest_band_energy(double s, double q, int cutoff) {
    // H = (q + 2n)^2 + s/2 - (s/4)(e^{2ikz} + h.c.) in the plane-wave basis
    const int half = cutoff / 2;
    const int n = 2 * half + 1;
    Eigen::VectorXd diag(n);
    Eigen::VectorXd sub = Eigen::VectorXd::Constant(n - 1, -s / 4.0);
    for (int i = 0; i < n; ++i) {
        const double k = q + 2.0 * (i - half);
        diag(i) = k * k + s / 2.0;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

}  // namespace

double LatticeParams::a_ho() const {
    if (s_z <= 0.0) throw PhysicsError("a_ho undefined at s_z = 0 (no longitudinal confinement)");
    return std::pow(s_z, -0.25);
}

double LatticeParams::a_perp() const {
    if (s_perp <= 0.0) throw PhysicsError("transverse oscillator length undefined at s_perp = 0");
    return std::pow(s_perp, -0.25) * lambda_perp / lambda_z;
}

double LatticeParams::max_free_time() const { return 2.0 * pi / omega_z; }

LatticeParams derive_params(double s_z, double s_perp, const SiOverrides& ov) {
    if (!(s_z >= 0.0)) throw PhysicsError("lattice depth s_z must be >= 0, got " + std::to_string(s_z));
    if (!(s_perp >= 0.0)) throw PhysicsError("lattice depth s_perp must be >= 0, got " + std::to_string(s_perp));
    LatticeParams p;
    p.s_z = s_z;
    p.s_perp = s_perp;
    if (ov.lambda_z) p.lambda_z = *ov.lambda_z;
    if (ov.lambda_perp) p.lambda_perp = *ov.lambda_perp;
    if (ov.mass) p.mass = *ov.mass;
    if (ov.gravity) p.gravity = *ov.gravity;
    if (p.lambda_z <= 0 || p.lambda_perp <= 0 || p.mass <= 0)
        throw PhysicsError("wavelengths and mass must be positive");

    p.si.k_r = 2.0 * pi / p.lambda_z;
    p.si.omega_r = codata::hbar * p.si.k_r * p.si.k_r / (2.0 * p.mass);
    p.omega_ho = 2.0 * std::sqrt(s_z);

    // measured range 2pi x [73, 90] Hz over s_perp in [0, 40]; linear in between
    double wz_si = 2.0 * pi * (73.0 + 17.0 * std::min(s_perp, 40.0) / 40.0);
    if (ov.omega_z) wz_si = *ov.omega_z;
    p.omega_z = wz_si / p.si.omega_r;
    return p;
}

void check_free_time(const LatticeParams& p, double t_total) {
    if (t_total > p.max_free_time()) {
        const std::string msg = "simulated time " + std::to_string(p.si.ms(t_total)) +
                                " ms exceeds the residual-trap period " +
                                std::to_string(p.si.ms(p.max_free_time())) + " ms; trap is not modeled";
        warn(msg);
        throw PhysicsError(msg);
    }
}

cplx franck_condon(int j, double k, const LatticeParams& p, BoxNorm norm) {
    if (!(norm.length > 0.0)) throw PhysicsError("box length must be positive");
    const double a = p.a_ho();
    const double mag = std::sqrt(2.0 / norm.length) * std::pow(pi * a * a, 0.25) * std::exp(-0.5 * k * k * a * a);
    return std::polar(mag, k * p.d * j);
}

cplx franck_condon(int j, double k, const LatticeParams& p, WignerSeitz) {
    return franck_condon(j, k, p, BoxNorm{p.d});
}

BandStructure band_structure(double s_z, int n_q, int cutoff) {
    if (cutoff < 5) throw PhysicsError("plane-wave cutoff must be >= 5");
    if (n_q < 16) throw PhysicsError("band-structure grid needs n_q >= 16");
    if (s_z < 0) throw PhysicsError("lattice depth must be >= 0");
    BandStructure b;
    b.s_z = s_z;
    b.plane_wave_cutoff = cutoff;
    b.q.resize(n_q);
    b.epsilon.resize(n_q);
    double resid = 0.0;
    for (int i = 0; i < n_q; ++i) {
        const double q = -1.0 + 2.0 * (i + 1) / n_q;
        b.q[i] = q;
        b.epsilon[i] = lowest_band_energy(s_z, q, cutoff);
        resid = std::max(resid, std::abs(b.epsilon[i] - lowest_band_energy(s_z, q, 2 * cutoff + 1)));
    }
    b.convergence_residual = resid;
    if (resid > 1e-8) throw ConvergenceError("band structure not converged at cutoff " + std::to_string(cutoff), resid);
    return b;
}

cplx tunneling_coefficient(const BandStructure& band) {
    // periodic trapezoid rule on (-1, 1]
    const double h = 2.0 / band.q.size();
    cplx sum = 0.0;
    for (size_t i = 0; i < band.q.size(); ++i) sum += std::polar(1.0, pi * band.q[i]) * band.epsilon[i];
    return -0.5 * h * sum;
}

double hubbard_J(const BandStructure& band) { return tunneling_coefficient(band).real(); }

double hubbard_U(const LatticeParams& p, double scattering_length) {
    if (!(scattering_length >= 0.0)) throw PhysicsError("scattering length must be >= 0");
    const double a_s = scattering_length * p.si.k_r;
    const double az = p.a_ho();
    const double ap = p.a_perp();
    // (4 pi hbar^2 a / m) Int |w|^4 with Gaussian w; m = 1/2
    return 8.0 * pi * a_s * std::pow(2.0 * pi, -1.5) / (az * ap * ap);
}

double fold_quasimomentum(double q) { return q - 2.0 * std::ceil((q - 1.0) / 2.0); }

Dispersion dispersion(double delta) {
    if (!(delta >= 0.0))
        throw PhysicsError("detuning below the continuum edge (delta < 0): use the spectral module for bound states");
    Dispersion d;
    d.k_resonant = std::sqrt(delta);
    d.k_tilde = fold_quasimomentum(d.k_resonant);
    d.band_index = static_cast<int>(std::lround((d.k_resonant - d.k_tilde) / 2.0));
    d.v_g = 2.0 * d.k_resonant;
    return d;
}

double reduced_zone_energy(double k_tilde, int band_index) {
    const double k = k_tilde + 2.0 * band_index;
    return k * k;
}

BlochPhase bloch_phase(double t_B, const LatticeParams& p) {
    if (!(t_B >= 0.0)) throw PhysicsError("Bloch pulse duration must be >= 0");
    const double d_si = p.lambda_z / 2.0;
    const double tau_si = 2.0 * pi * codata::hbar / (p.mass * p.gravity * d_si);
    BlochPhase b;
    b.tau_B = p.si.from_seconds(tau_si);
    b.q = fold_quasimomentum(-2.0 * t_B / b.tau_B);
    return b;
}

}  // namespace mwqed::lattice
