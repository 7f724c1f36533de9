#include "mwqed/master_equation.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "mwqed/errors.hpp"
#include "mwqed/quadrature.hpp"

namespace mwqed::master {

namespace {

using SpMat = Eigen::SparseMatrix<cplx>;

constexpr int max_sites = 6;

// PV Int_0^inf g(k) / (k0 - k) dk on a fixed panel count; the pole is folded away on [0, 2 k0].
double pv_half_line(const std::function<double(double)>& g, double k0, double k_max, int panels) {
    auto folded = [&](double u) {
        if (u < 1e-300) return 0.0;
        return (g(k0 - u) - g(k0 + u)) / u;
    };
    double s = quad::gauss_legendre(folded, 0.0, k0, panels);
    if (k_max > 2.0 * k0) {
        auto tail = [&](double k) { return g(k) / (k0 - k); };
        const int tail_panels = std::max(panels, static_cast<int>(std::ceil(panels * (k_max - 2 * k0) / k0)));
        s += quad::gauss_legendre(tail, 2.0 * k0, k_max, std::min(tail_panels, 64 * panels));
    }
    return s;
}

Eigen::MatrixXd toeplitz(const std::vector<double>& by_sep, int n) {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = by_sep[std::abs(i - j)];
    return m;
}

int digit(int index, int site) {
    for (int s = 0; s < site; ++s) index /= 3;
    return index % 3;
}

int pow3(int n) {
    int r = 1;
    for (int i = 0; i < n; ++i) r *= 3;
    return r;
}

SpMat lower(int n_sites, int j, int from) {
    const int dim = hilbert_dim(n_sites);
    const int stride = pow3(j);
    std::vector<Eigen::Triplet<cplx>> trips;
    for (int b = 0; b < dim; ++b)
        if (digit(b, j) == from) trips.emplace_back(b - from * stride, b, 1.0);
    SpMat m(dim, dim);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

// couplings laid out for n sites, checking the separations are covered
void coupling_matrices(const CouplingMatrix& c, int n, Eigen::MatrixXd& gamma, Eigen::MatrixXd& jm) {
    if (c.gamma.rows() == n && c.j_shift.rows() == n) {
        gamma = c.gamma;
        jm = c.j_shift;
        return;
    }
    if (c.max_separation < n - 1 || static_cast<int>(c.gamma_n.size()) < n || static_cast<int>(c.j_n.size()) < n)
        throw PhysicsError("couplings cover separations up to " + std::to_string(c.max_separation) + " but " +
                           std::to_string(n) + " sites need " + std::to_string(n - 1));
    gamma = toeplitz(c.gamma_n, n);
    jm = toeplitz(c.j_n, n);
}

double ng_expectation(const Eigen::MatrixXcd& rho, int n_sites) {
    double s = 0.0;
    for (int b = 0; b < rho.rows(); ++b) {
        int count = 0;
        for (int j = 0; j < n_sites; ++j) count += digit(b, j) == 2;
        s += count * rho(b, b).real();
    }
    return s;
}

}  // namespace

CouplingMatrix compute_couplings(const LatticeParams& p, const DriveParams& drive, int max_separation,
                                 int n_sites) {
    const double delta = drive.delta();
    if (!(delta > 0.0)) throw PhysicsError("Markovian couplings need delta > 0");
    if (max_separation < 0) throw PhysicsError("max_separation must be >= 0");
    if (n_sites < 0) n_sites = max_separation + 1;
    if (n_sites > max_separation + 1)
        throw PhysicsError("n_sites exceeds the separations requested from compute_couplings");

    const double a = p.a_ho();
    const double om = drive.omega_rabi();
    const double k0 = std::sqrt(delta);
    const double g1 = rates::gamma_single(p, drive);
    const double pref = om * om * a / (4.0 * std::sqrt(pi));
    const double k_max = std::max(3.0 * k0, std::sqrt(42.0) / a + 2.0);

    CouplingMatrix c;
    c.delta = delta;
    c.max_separation = max_separation;
    for (int n = 0; n <= max_separation; ++n) {
        c.gamma_n.push_back(g1 * std::cos(n * pi * k0));
        // 2 Int_0^inf f / ((k0 - k)(k0 + k)), f = exp(-a^2 k^2) cos(n pi k)
        auto g = [&](double k) { return std::exp(-a * a * k * k) * std::cos(n * pi * k) / (k0 + k); };
        int panels = 4;
        double prev = pv_half_line(g, k0, k_max, panels);
        double change = 0.0;
        bool ok = false;
        for (int it = 0; it < 8; ++it) {
            panels *= 2;
            const double cur = pv_half_line(g, k0, k_max, panels);
            change = std::abs(cur - prev);
            prev = cur;
            if (change <= 1e-12 + 1e-10 * std::abs(cur)) {
                ok = true;
                break;
            }
        }
        if (!ok) throw ConvergenceError("principal-value coupling integral did not converge", change);
        c.pv_residual = std::max(c.pv_residual, change);
        c.j_n.push_back(pref * 2.0 * prev);
    }
    c.gamma = toeplitz(c.gamma_n, n_sites);
    c.j_shift = toeplitz(c.j_n, n_sites);
    return c;
}

void SiteRegister::validate() const {
    if (sites.empty()) throw PhysicsError("site register is empty");
    if (size() > max_sites)
        throw PhysicsError("register has " + std::to_string(size()) + " sites; dimension 3^n is capped at n = " +
                           std::to_string(max_sites));
    for (size_t i = 0; i < sites.size(); ++i) {
        const auto& s = sites[i];
        const double n = std::norm(s.empty) + std::norm(s.r) + std::norm(s.g);
        if (std::abs(n - 1.0) > 1e-10)
            throw PhysicsError("local state of site " + std::to_string(i) + " is not normalized");
    }
}

int hilbert_dim(int n_sites) {
    if (n_sites < 1 || n_sites > max_sites)
        throw PhysicsError("site count " + std::to_string(n_sites) + " outside 1.." + std::to_string(max_sites));
    return pow3(n_sites);
}

Eigen::VectorXcd product_state(const SiteRegister& reg) {
    reg.validate();
    const int n = reg.size();
    const int dim = hilbert_dim(n);
    Eigen::VectorXcd psi(dim);
    for (int b = 0; b < dim; ++b) {
        cplx amp = 1.0;
        for (int j = 0; j < n; ++j) {
            const auto& s = reg.sites[j];
            const int d = digit(b, j);
            amp *= d == 0 ? s.empty : (d == 1 ? s.r : s.g);
        }
        psi(b) = amp;
    }
    return psi;
}

SpMat lower_r(int n_sites, int j) { return lower(n_sites, j, 1); }
SpMat lower_g(int n_sites, int j) { return lower(n_sites, j, 2); }

Generator build_generator(int n_sites, const CouplingMatrix& c, const MasterOptions& opt) {
    Eigen::MatrixXd gamma, jm;
    coupling_matrices(c, n_sites, gamma, jm);
    const int dim = hilbert_dim(n_sites);

    std::vector<SpMat> r(n_sites);
    for (int j = 0; j < n_sites; ++j) r[j] = lower_r(n_sites, j);

    SpMat h(dim, dim);
    for (int j = 0; j < n_sites; ++j) {
        SpMat nr = r[j].adjoint() * r[j];
        h += c.delta * nr;
        if (opt.delta_g != 0.0) {
            SpMat gj = lower_g(n_sites, j);
            h += opt.delta_g * SpMat(gj.adjoint() * gj);
        }
    }
    SpMat decay(dim, dim);
    for (int j = 0; j < n_sites; ++j)
        for (int k = 0; k < n_sites; ++k) {
            SpMat hop = r[j].adjoint() * r[k];
            const double J = (j == k && !opt.include_lamb_shift) ? 0.0 : jm(j, k);
            if (J != 0.0) h += J * hop;
            if (gamma(j, k) != 0.0) decay += gamma(j, k) * hop;
        }

    Generator g;
    g.hamiltonian = h;
    g.h_eff = h - cplx(0.0, 0.5) * decay;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    for (int l = 0; l < n_sites; ++l) {
        double lam = es.eigenvalues()(l);
        if (lam < -1e-8 * scale) {
            std::ostringstream os;
            os << "dissipator matrix is not positive semidefinite (eigenvalue " << lam << ")";
            throw PhysicsError(os.str());
        }
        if (lam <= 1e-12 * scale) continue;
        SpMat L(dim, dim);
        for (int j = 0; j < n_sites; ++j) L += (std::sqrt(lam) * es.eigenvectors()(j, l)) * r[j];
        L.prune(cplx(0.0));
        g.jumps.push_back(L);
    }
    return g;
}

Eigen::MatrixXcd apply_generator(const Generator& g, const Eigen::MatrixXcd& rho) {
    Eigen::MatrixXcd hr = g.h_eff * rho;
    // -i (H_eff rho - rho H_eff^†) = -i hr + i hr^†, using rho = rho^†
    Eigen::MatrixXcd out = cplx(0.0, -1.0) * hr;
    out += cplx(0.0, 1.0) * hr.adjoint();
    // L rho L^† = L (L rho)^† for Hermitian rho; keeps both products sparse x dense
    Eigen::MatrixXcd lr;
    for (const auto& L : g.jumps) {
        lr.noalias() = L * rho;
        out.noalias() += L * lr.adjoint();
    }
    return out;
}

MasterTrajectory evolve_master(const SiteRegister& reg, const CouplingMatrix& c, const std::vector<double>& t_grid,
                               const MasterOptions& opt) {
    const Eigen::VectorXcd psi = product_state(reg);
    return evolve_master(Eigen::MatrixXcd(psi * psi.adjoint()), reg.size(), c, t_grid, opt);
}

MasterTrajectory evolve_master(const Eigen::MatrixXcd& rho0, int n_sites, const CouplingMatrix& c,
                               const std::vector<double>& t_grid, const MasterOptions& opt) {
    const int dim = hilbert_dim(n_sites);
    if (rho0.rows() != dim || rho0.cols() != dim) throw PhysicsError("initial density matrix has wrong dimension");
    for (size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] >= t_grid[i - 1])) throw PhysicsError("time grid must be non-decreasing");
    if (!t_grid.empty() && t_grid.front() < 0.0) throw PhysicsError("time grid must start at t >= 0");

    const Generator gen = build_generator(n_sites, c, opt);
    auto f = [&](const Eigen::MatrixXcd& r) { return apply_generator(gen, r); };

    MasterTrajectory tr;
    tr.n_sites = n_sites;
    const double ng0 = ng_expectation(rho0, n_sites);

    auto record = [&](double t, const Eigen::MatrixXcd& rho) {
        Eigen::MatrixXcd sym = 0.5 * (rho + rho.adjoint());
        const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
        const double trace_err = std::abs(rho.trace() - 1.0);
        const double ng_drift = std::abs(ng_expectation(rho, n_sites) - ng0);
        double lam_min = 0.0;
        if (opt.check_invariants) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sym, Eigen::EigenvaluesOnly);
            lam_min = es.eigenvalues().minCoeff();
        }
        tr.max_trace_error = std::max(tr.max_trace_error, trace_err);
        tr.max_hermiticity_error = std::max(tr.max_hermiticity_error, herm);
        tr.min_eigenvalue = std::min(tr.min_eigenvalue, lam_min);
        tr.max_ng_drift = std::max(tr.max_ng_drift, ng_drift);
        if (opt.check_invariants) {
            std::ostringstream os;
            if (trace_err > 1e-8) os << "trace drifted by " << trace_err;
            else if (herm > 1e-8) os << "density matrix lost hermiticity by " << herm;
            else if (lam_min < -1e-8) os << "density matrix eigenvalue " << lam_min;
            else if (ng_drift > 1e-6) os << "N_g drifted by " << ng_drift;
            if (!os.str().empty()) throw ConvergenceError(os.str() + " at t = " + std::to_string(t), trace_err);
        }
        tr.states.push_back({t, sym});
    };

    // Dormand-Prince 5(4), first same as last
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    (void)c2, (void)c3, (void)c4, (void)c5;  // autonomous generator

    Eigen::MatrixXcd rho = rho0;
    double t = 0.0;
    Eigen::MatrixXcd k1 = f(rho);
    double h = 0.0;
    {
        const double nrm = k1.cwiseAbs().maxCoeff();
        h = nrm > 0.0 ? 0.01 / nrm : 1.0;
    }

    for (double t_out : t_grid) {
        while (t < t_out) {
            if (tr.steps >= opt.max_steps)
                throw ConvergenceError("master equation integrator exceeded its step budget", t_out - t);
            const bool last = t + h >= t_out;
            const double hs = last ? t_out - t : h;
            Eigen::MatrixXcd k2 = f(rho + hs * (a21 * k1));
            Eigen::MatrixXcd k3 = f(rho + hs * (a31 * k1 + a32 * k2));
            Eigen::MatrixXcd k4 = f(rho + hs * (a41 * k1 + a42 * k2 + a43 * k3));
            Eigen::MatrixXcd k5 = f(rho + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
            Eigen::MatrixXcd k6 = f(rho + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
            Eigen::MatrixXcd y = rho + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            Eigen::MatrixXcd k7 = f(y);
            Eigen::MatrixXcd err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            const double scale = opt.atol + opt.rtol * std::max(rho.cwiseAbs().maxCoeff(), y.cwiseAbs().maxCoeff());
            const double en = err.cwiseAbs().maxCoeff() / scale;
            ++tr.steps;
            if (en <= 1.0) {
                t = last ? t_out : t + hs;
                rho = 0.5 * (y + y.adjoint());
                k1 = k7;
                const double fac = en > 0.0 ? std::min(5.0, 0.9 * std::pow(en, -0.2)) : 5.0;
                if (!last || fac < 1.0) h = hs * fac;
            } else {
                h = hs * std::max(0.2, 0.9 * std::pow(en, -0.2));
            }
        }
        record(t_out, rho);
    }
    return tr;
}

std::vector<double> default_q_grid(int n) {
    if (n < 6 || n % 6 != 0) throw PhysicsError("q grid size must be a positive multiple of 6");
    std::vector<double> q(n);
    const double h = 3.0 / n;
    for (int i = 0; i < n; ++i) q[i] = -1.5 + (i + 0.5) * h;
    return q;
}

Eigen::MatrixXcd one_body_matrix(const Eigen::MatrixXcd& rho, int n_sites, Local species) {
    if (species == Local::empty) throw PhysicsError("one-body matrix is defined for r or g");
    const int from = static_cast<int>(species);
    const int dim = hilbert_dim(n_sites);
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(n_sites, n_sites);
    std::vector<int> stride(n_sites);
    for (int j = 0; j < n_sites; ++j) stride[j] = pow3(j);
    // <c_j^† c_k> = Σ_b rho(b', b) with c_j^† c_k |b> = |b'>
    for (int b = 0; b < dim; ++b)
        for (int k = 0; k < n_sites; ++k) {
            if (digit(b, k) != from) continue;
            const int mid = b - from * stride[k];
            for (int j = 0; j < n_sites; ++j) {
                if (digit(mid, j) != 0) continue;
                const int bp = mid + from * stride[j];
                C(j, k) += rho(b, bp);
            }
        }
    return C;
}

std::vector<double> quasimomentum_density(const Eigen::MatrixXcd& C, const std::vector<double>& q, double sigma_k) {
    const int n = static_cast<int>(C.rows());
    std::vector<double> out(q.size(), 0.0);
    for (size_t i = 0; i < q.size(); ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const int m = j - k;
                const double damp = std::exp(-0.5 * sigma_k * sigma_k * pi * pi * m * m);
                s += damp * (C(j, k) * std::polar(1.0, pi * q[i] * m)).real();
            }
        out[i] = 0.5 * s;
    }
    return out;
}

MasterObservables observables_master(const MasterTrajectory& tr, double sigma_k, std::vector<double> q) {
    if (sigma_k < 0.0) throw PhysicsError("resolution must be >= 0");
    MasterObservables o;
    o.q = q.empty() ? default_q_grid() : std::move(q);
    for (const auto& s : tr.states) {
        const Eigen::MatrixXcd Cr = one_body_matrix(s.rho, tr.n_sites, Local::r);
        const Eigen::MatrixXcd Cg = one_body_matrix(s.rho, tr.n_sites, Local::g);
        o.t.push_back(s.t);
        o.N_r.push_back(Cr.trace().real());
        o.N_g.push_back(Cg.trace().real());
        o.n_r.push_back(quasimomentum_density(Cr, o.q, sigma_k));
        o.n_g.push_back(quasimomentum_density(Cg, o.q, sigma_k));
    }
    return o;
}

Visibility visibility(const std::vector<double>& q, const std::vector<double>& n) {
    if (q.size() != n.size() || q.size() < 2) throw PhysicsError("visibility needs matching q and n grids");
    const double h = q[1] - q[0];
    Visibility v;
    double c0 = 0.0, c1 = 0.0;
    for (size_t i = 0; i < q.size(); ++i) {
        const double lo = q[i] - 0.5 * h, hi = q[i] + 0.5 * h;
        auto overlap = [&](double a, double b) { return std::max(0.0, std::min(hi, b) - std::max(lo, a)); };
        const double in0 = overlap(-0.5, 0.5);
        const double in1 = overlap(-1.5, -0.5) + overlap(0.5, 1.5);
        c0 += n[i] * in0;
        c1 += n[i] * in1;
    }
    const double tot = c0 + c1;
    if (tot != 0.0) {
        v.c0 = c0 / tot;
        v.c1 = c1 / tot;
    }
    return v;
}

Eigen::MatrixXcd project_excitations(const Eigen::MatrixXcd& rho, int n_sites, int n_r) {
    const int dim = hilbert_dim(n_sites);
    std::vector<int> keep;
    for (int b = 0; b < dim; ++b) {
        int count = 0;
        for (int j = 0; j < n_sites; ++j) count += digit(b, j) == 1;
        if (count == n_r) keep.push_back(b);
    }
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
    for (int a : keep)
        for (int b : keep) out(a, b) = rho(a, b);
    return out;
}

}  // namespace mwqed::master
