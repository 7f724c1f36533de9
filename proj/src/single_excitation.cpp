#include "mwqed/single_excitation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <string>
#include <thread>

#include "mwqed/errors.hpp"

namespace mwqed::sx {

namespace {

// Runs body(i) for i in [0, n) on up to `threads` workers; first exception wins.
template <class F>
void parallel_for(size_t n, int threads, F body) {
    const int nw = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (nw == 1) {
        for (size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr err;
    std::mutex mu;
    {
        std::vector<std::jthread> pool;
        for (int w = 0; w < nw; ++w)
            pool.emplace_back([&] {
                for (size_t i = next++; i < n; i = next++) {
                    try {
                        body(i);
                    } catch (...) {
                        std::lock_guard lock(mu);
                        if (!err) err = std::current_exception();
                    }
                }
            });
    }
    if (err) std::rethrow_exception(err);
}

// exp(-i H dt) by Chebyshev expansion on [lo, hi]
class ChebyshevPropagator {
public:
    ChebyshevPropagator(const CoupledModeModel& m, const EvolveOptions& opt) : model_(m), opt_(opt) {
        auto [lo, hi] = m.spectral_bounds();
        const double pad = 1e-3 * std::max(1.0, hi - lo);
        half_ = 0.5 * (hi - lo) + pad;
        mid_ = 0.5 * (hi + lo);
    }

    void step(Eigen::VectorXcd& psi, double dt, int& matvecs) {
        if (dt <= 0.0) return;
        const int chunks = static_cast<int>(std::ceil(half_ * dt / opt_.max_chunk));
        const double h = dt / chunks;
        const std::vector<double>& c = coefficients(h);
        for (int s = 0; s < chunks; ++s) {
            propagate(psi, h, c, matvecs);
        }
    }

private:
    const std::vector<double>& coefficients(double h) {
        auto it = cache_.find(h);
        if (it != cache_.end()) return it->second;
        const double x = half_ * h;
        std::vector<double> J;
        int quiet = 0;
        for (int n = 0;; ++n) {
            const double v = std::cyl_bessel_j(static_cast<double>(n), x);
            if (!std::isfinite(v)) throw ConvergenceError("Chebyshev coefficient not finite", x);
            J.push_back(v);
            if (n > x && std::abs(v) < opt_.truncation) {
                if (++quiet >= 3) break;
            } else {
                quiet = 0;
            }
            if (n > 10 * x + 200)
                throw ConvergenceError("Chebyshev series did not reach truncation", std::abs(v));
        }
        return cache_.emplace(h, std::move(J)).first->second;
    }

    void scaled_apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) {
        model_.apply(x, y);
        y = (y - mid_ * x) / half_;
    }

    void propagate(Eigen::VectorXcd& psi, double h, const std::vector<double>& J, int& matvecs) {
        // e^{-iHh} = e^{-i mid h} [J0 T0 + 2 Σ (-i)^n Jn Tn](Hs)
        Eigen::VectorXcd t0 = psi, t1(psi.size()), t2(psi.size());
        scaled_apply(t0, t1);
        ++matvecs;
        Eigen::VectorXcd acc = J[0] * t0 + 2.0 * cplx(0.0, -1.0) * J[1] * t1;
        cplx phase(0.0, -1.0);
        for (size_t n = 2; n < J.size(); ++n) {
            scaled_apply(t1, t2);
            ++matvecs;
            t2 = 2.0 * t2 - t0;
            phase *= cplx(0.0, -1.0);
            acc += (2.0 * J[n]) * phase * t2;
            std::swap(t0, t1);
            std::swap(t1, t2);
        }
        psi = std::exp(cplx(0.0, -mid_ * h)) * acc;
    }

    const CoupledModeModel& model_;
    EvolveOptions opt_;
    double half_ = 1.0, mid_ = 0.0;
    std::map<double, std::vector<double>> cache_;
};

double normal_pdf(double x, double s) { return std::exp(-0.5 * x * x / (s * s)) / (std::sqrt(2.0 * pi) * s); }

}  // namespace

void CoupledModeModel::apply(const Eigen::VectorXcd& x, Eigen::VectorXcd& y) const {
    const int ns = n_sites(), nm = n_modes();
    y.resize(dim());
    const auto xa = x.head(ns);
    const auto xb = x.tail(nm);
    y.head(ns).noalias() = delta * xa + V * xb;
    y.tail(nm).noalias() = V.adjoint() * xa;
    for (int m = 0; m < nm; ++m) y(ns + m) += k[m] * k[m] * xb(m);
}

Eigen::MatrixXcd CoupledModeModel::dense() const {
    const int ns = n_sites(), nm = n_modes();
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(dim(), dim());
    for (int j = 0; j < ns; ++j) H(j, j) = delta;
    for (int m = 0; m < nm; ++m) H(ns + m, ns + m) = k[m] * k[m];
    H.topRightCorner(ns, nm) = V;
    H.bottomLeftCorner(nm, ns) = V.adjoint();
    return H;
}

std::pair<double, double> CoupledModeModel::spectral_bounds() const {
    double lo = delta, hi = delta;
    const int ns = n_sites(), nm = n_modes();
    for (int j = 0; j < ns; ++j) {
        const double r = V.row(j).cwiseAbs().sum();
        lo = std::min(lo, delta - r);
        hi = std::max(hi, delta + r);
    }
    for (int m = 0; m < nm; ++m) {
        const double r = V.col(m).cwiseAbs().sum();
        const double w = k[m] * k[m];
        lo = std::min(lo, w - r);
        hi = std::max(hi, w + r);
    }
    return {lo, hi};
}

CoupledModeModel build_model(const LatticeParams& p, const DriveParams& drive, int M, const KGrid& grid) {
    if (M < 1) throw PhysicsError("model needs at least one site");
    return build_model(p, drive, rates::site_range(M), grid);
}

CoupledModeModel build_model(const LatticeParams& p, const DriveParams& drive, std::vector<int> sites,
                             const KGrid& grid) {
    if (sites.empty()) throw PhysicsError("model needs at least one site");
    grid.validate(p, drive);
    CoupledModeModel m;
    m.sites = std::move(sites);
    m.grid = grid;
    m.k = grid.modes();
    m.delta = drive.delta();
    const double L = grid.length();
    const double half = 0.5 * drive.omega_rabi();
    m.V.resize(m.n_sites(), m.n_modes());
    for (int j = 0; j < m.n_sites(); ++j)
        for (int n = 0; n < m.n_modes(); ++n)
            m.V(j, n) = half * lattice::franck_condon(m.sites[j], m.k[n], p, lattice::BoxNorm{L});
    return m;
}

Eigen::VectorXcd initial_vector(const CoupledModeModel& model, const InitialState& init) {
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(model.dim());
    const int ns = model.n_sites();
    switch (init.kind) {
        case InitialState::Kind::TDS:
            for (int j = 0; j < ns; ++j) psi(j) = std::polar(1.0 / std::sqrt(double(ns)), init.q * pi * model.sites[j]);
            break;
        case InitialState::Kind::Localized: {
            auto it = std::find(model.sites.begin(), model.sites.end(), init.j0);
            if (it == model.sites.end()) throw PhysicsError("localized site " + std::to_string(init.j0) + " not in model");
            psi(it - model.sites.begin()) = 1.0;
            break;
        }
        case InitialState::Kind::Custom: {
            if (static_cast<int>(init.amplitudes.size()) != ns)
                throw PhysicsError("custom initial state needs one amplitude per site");
            double n2 = 0.0;
            for (int j = 0; j < ns; ++j) {
                psi(j) = init.amplitudes[j];
                n2 += std::norm(init.amplitudes[j]);
            }
            if (std::abs(n2 - 1.0) > 1e-10) throw PhysicsError("custom initial state is not normalized");
            break;
        }
    }
    return psi;
}

Trajectory evolve(const CoupledModeModel& model, const InitialState& init, const std::vector<double>& t_grid,
                  const EvolveOptions& opt) {
    return evolve_vector(model, initial_vector(model, init), t_grid, opt);
}

Trajectory evolve_vector(const CoupledModeModel& model, Eigen::VectorXcd psi, const std::vector<double>& t_grid,
                         const EvolveOptions& opt) {
    if (psi.size() != model.dim()) throw PhysicsError("state dimension does not match model");
    const double n0 = psi.squaredNorm();
    if (std::abs(n0 - 1.0) > 1e-10) throw PhysicsError("initial state is not normalized");
    for (size_t i = 1; i < t_grid.size(); ++i)
        if (t_grid[i] < t_grid[i - 1]) throw PhysicsError("time grid must be non-decreasing");
    if (!t_grid.empty() && t_grid.front() < 0.0) throw PhysicsError("time grid must start at t >= 0");

    ChebyshevPropagator prop(model, opt);
    Trajectory tr;
    double t = 0.0;
    const int ns = model.n_sites();
    for (double target : t_grid) {
        prop.step(psi, target - t, tr.matvecs);
        t = target;
        const double drift = std::abs(psi.squaredNorm() - 1.0);
        tr.max_norm_drift = std::max(tr.max_norm_drift, drift);
        if (drift > opt.norm_tolerance)
            throw ConvergenceError("norm drift exceeded tolerance at t = " + std::to_string(t), drift);
        tr.states.push_back({t, psi.head(ns), psi.tail(model.n_modes())});
    }
    return tr;
}

double excited_fraction(const WaveState& s) { return s.A.squaredNorm(); }

Distribution momentum_distribution(const WaveState& s, const KGrid& grid, double sigma_k) {
    if (!(sigma_k >= 0.0)) throw PhysicsError("resolution must be >= 0");
    Distribution d;
    d.x = grid.modes();
    const int n = static_cast<int>(d.x.size());
    if (s.B.size() != n) throw PhysicsError("state does not match the k grid");
    d.density.assign(n, 0.0);
    const double dk = grid.dk();
    if (sigma_k == 0.0) {
        for (int m = 0; m < n; ++m) d.density[m] = std::norm(s.B(m)) / dk;
        return d;
    }
    const int reach = static_cast<int>(std::ceil(9.0 * sigma_k / dk));
    std::vector<double> kernel(reach + 1);
    for (int i = 0; i <= reach; ++i) kernel[i] = normal_pdf(i * dk, sigma_k);
    for (int m = 0; m < n; ++m) {
        const double w = std::norm(s.B(m));
        if (w == 0.0) continue;
        const int lo = std::max(0, m - reach), hi = std::min(n - 1, m + reach);
        for (int i = lo; i <= hi; ++i) d.density[i] += w * kernel[std::abs(i - m)];
    }
    return d;
}

Distribution position_distribution(const WaveState& s, const KGrid& grid, std::vector<double> z) {
    const std::vector<double> k = grid.modes();
    const int n = static_cast<int>(k.size());
    if (s.B.size() != n) throw PhysicsError("state does not match the k grid");
    const double L = grid.length();
    if (z.empty()) {
        z.resize(n);
        for (int i = 0; i < n; ++i) z[i] = -0.5 * L + L * i / n;
    }
    Distribution d;
    d.x = z;
    d.density.resize(z.size());
    const int mm = grid.m_max();
    for (size_t i = 0; i < z.size(); ++i) {
        // e^{i k_m z} = e^{i m dk z}, built by repeated rotation from m = -mm
        const cplx step = std::polar(1.0, grid.dk() * z[i]);
        cplx ph = std::polar(1.0, -mm * grid.dk() * z[i]);
        cplx acc = 0.0;
        for (int m = 0; m < n; ++m) {
            if (m % 64 == 0) ph = std::polar(1.0, (m - mm) * grid.dk() * z[i]);
            acc += ph * s.B(m);
            ph *= step;
        }
        d.density[i] = std::norm(acc) / L;
    }
    return d;
}

Directional directional_populations(const WaveState& s, const KGrid& grid) {
    const std::vector<double> k = grid.modes();
    Directional d;
    for (size_t m = 0; m < k.size(); ++m) {
        const double w = std::norm(s.B(m));
        if (k[m] > 0.0) d.P_plus += w;
        else if (k[m] < 0.0) d.P_minus += w;
        else {
            d.P_plus += 0.5 * w;
            d.P_minus += 0.5 * w;
        }
    }
    return d;
}

double first_harmonic_center(const std::vector<double>& phis, const std::vector<double>& values) {
    cplx c = 0.0;
    for (size_t i = 0; i < phis.size(); ++i) c += values[i] * std::polar(1.0, -phis[i]);
    return lattice::fold_quasimomentum(-std::arg(c) / pi);
}

EmissionMap sweep_emission_map(const LatticeParams& p, const SweepSpec& spec) {
    if (spec.deltas.empty() || spec.phis.empty()) throw PhysicsError("sweep grids must be non-empty");
    if (spec.t_pulse <= 0.0) throw PhysicsError("sweep pulse duration must be positive");
    lattice::check_free_time(p, spec.t_pulse);
    EmissionMap out;
    out.deltas = spec.deltas;
    out.phis = spec.phis;
    out.k_out = spec.k_out;
    const size_t nd = spec.deltas.size(), np = spec.phis.size();
    out.cells.resize(nd * np);

    // one model per Δ, shared read-only by its φ cells
    std::vector<CoupledModeModel> models(nd);
    parallel_for(nd, spec.threads, [&](size_t i) {
        models[i] = build_model(p, DriveParams(spec.omega_rabi, spec.deltas[i]), spec.M, spec.grid);
    });
    parallel_for(nd * np, spec.threads, [&](size_t c) {
        const size_t i = c / np, j = c % np;
        const double phi = rates::fold_phase(spec.phis[j]);
        const Trajectory tr = evolve(models[i], InitialState::tds(phi / pi), {spec.t_pulse});
        const WaveState& s = tr.states.back();
        SweepCell cell;
        cell.delta = spec.deltas[i];
        cell.phi = spec.phis[j];
        const Directional dir = directional_populations(s, spec.grid);
        cell.P_plus = dir.P_plus;
        cell.P_minus = dir.P_minus;
        cell.emitted = 1.0 - excited_fraction(s);
        if (!spec.k_out.empty()) {
            const Distribution d = momentum_distribution(s, spec.grid, spec.sigma_k);
            // linear interpolation onto the requested k samples
            const double dk = spec.grid.dk();
            const int mm = spec.grid.m_max();
            cell.n_k.resize(spec.k_out.size());
            for (size_t a = 0; a < spec.k_out.size(); ++a) {
                const double x = spec.k_out[a] / dk + mm;
                const int lo = static_cast<int>(std::floor(x));
                if (lo < 0 || lo + 1 >= static_cast<int>(d.density.size())) {
                    cell.n_k[a] = 0.0;
                    continue;
                }
                const double f = x - lo;
                cell.n_k[a] = (1.0 - f) * d.density[lo] + f * d.density[lo + 1];
            }
        }
        out.cells[c] = std::move(cell);
    });

    for (size_t i = 0; i < nd; ++i) {
        std::vector<double> row(np), ph(np);
        for (size_t j = 0; j < np; ++j) {
            row[j] = out.at(i, j).P_minus;
            ph[j] = spec.phis[j];
        }
        const double qc = first_harmonic_center(ph, row);
        const double expected = lattice::fold_quasimomentum(-std::sqrt(spec.deltas[i]));
        out.center_q.push_back(qc);
        out.center_deviation.push_back(lattice::fold_quasimomentum(qc - expected));
    }
    return out;
}

ThermalResult thermal_average(const LatticeParams& p, const DriveParams& drive, int M, const std::vector<double>& q,
                              const std::vector<double>& weights, const std::vector<double>& t_grid,
                              const KGrid& grid, int threads) {
    if (q.empty() || q.size() != weights.size()) throw PhysicsError("q grid and weights must match");
    double wsum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw PhysicsError("thermal weights must be non-negative");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-9) throw PhysicsError("thermal weights must sum to 1");
    if (!t_grid.empty()) lattice::check_free_time(p, t_grid.back());
    const CoupledModeModel model = build_model(p, drive, M, grid);
    ThermalResult out;
    out.t = t_grid;
    out.q = q;
    out.weights = weights;
    out.survival.resize(q.size());
    parallel_for(q.size(), threads, [&](size_t i) {
        const Trajectory tr = evolve(model, InitialState::tds(q[i]), t_grid);
        std::vector<double> s;
        for (const auto& st : tr.states) s.push_back(excited_fraction(st));
        out.survival[i] = std::move(s);
    });
    out.excited_fraction.assign(t_grid.size(), 0.0);
    for (size_t i = 0; i < q.size(); ++i)
        for (size_t n = 0; n < t_grid.size(); ++n) out.excited_fraction[n] += weights[i] * out.survival[i][n];
    return out;
}

}  // namespace mwqed::sx
