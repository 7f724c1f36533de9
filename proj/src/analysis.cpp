#include "mwqed/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>

#include "mwqed/errors.hpp"
#include "mwqed/units.hpp"

namespace mwqed::analysis {

namespace {

struct LinearPiece {
    double ge = 0.0, gl = 0.0, ssr = 0.0;
};

// For fixed t_c the continuous model is linear in (γ_e, γ_l); solve the 2-variable
// non-negative least squares by enumerating the active sets.
LinearPiece solve_fixed_tc(const std::vector<double>& t, const std::vector<double>& z, double t0, double tc) {
    double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
    for (size_t i = 0; i < t.size(); ++i) {
        const double x1 = std::min(t[i], tc) - t0;
        const double x2 = std::max(t[i] - tc, 0.0);
        s11 += x1 * x1;
        s12 += x1 * x2;
        s22 += x2 * x2;
        b1 += x1 * z[i];
        b2 += x2 * z[i];
    }
    auto ssr = [&](double ge, double gl) {
        double s = 0.0;
        for (size_t i = 0; i < t.size(); ++i) {
            const double r = z[i] - ge * (std::min(t[i], tc) - t0) - gl * std::max(t[i] - tc, 0.0);
            s += r * r;
        }
        return s;
    };
    std::vector<LinearPiece> cand;
    const double det = s11 * s22 - s12 * s12;
    if (std::abs(det) > 1e-300) {
        const double ge = (b1 * s22 - b2 * s12) / det;
        const double gl = (b2 * s11 - b1 * s12) / det;
        if (ge >= 0 && gl >= 0) cand.push_back({ge, gl, 0.0});
    }
    if (s11 > 0) cand.push_back({std::max(0.0, b1 / s11), 0.0, 0.0});
    if (s22 > 0) cand.push_back({0.0, std::max(0.0, b2 / s22), 0.0});
    cand.push_back({0.0, 0.0, 0.0});
    LinearPiece best;
    best.ssr = std::numeric_limits<double>::infinity();
    for (auto& c : cand) {
        c.ssr = ssr(c.ge, c.gl);
        if (c.ssr < best.ssr) best = c;
    }
    return best;
}

double model_log(double ge, double gl, double tc, double t0, double t) {
    return -ge * (std::min(t, tc) - t0) - gl * std::max(t - tc, 0.0);
}

}  // namespace

double piecewise_model(const PiecewiseExpFit& f, double t, double t0) {
    return std::exp(f.log_p0 + model_log(f.gamma_early, f.gamma_late, f.t_c, t0, t));
}

PiecewiseExpFit fit_piecewise(const Series& s, Window w, int min_points) {
    if (s.t.size() != s.y.size()) throw PhysicsError("trajectory t and y differ in length");
    if (min_points < 2) throw PhysicsError("min_points must be >= 2");
    const double t_max = w.t_max > 0.0 ? w.t_max : std::numeric_limits<double>::infinity();
    std::vector<double> t, ly;
    for (size_t i = 0; i < s.t.size(); ++i)
        if (s.t[i] >= w.t_min && s.t[i] <= t_max && s.y[i] > 0.0) {
            t.push_back(s.t[i]);
            ly.push_back(std::log(s.y[i]));
        }
    const int n = static_cast<int>(t.size());
    if (n < 2 * min_points)
        throw PhysicsError("degenerate fit window: " + std::to_string(n) + " usable points, need " +
                           std::to_string(2 * min_points));
    for (int i = 1; i < n; ++i)
        if (!(t[i] > t[i - 1])) throw PhysicsError("trajectory times must increase");

    const double t0 = t.front();
    std::vector<double> z(n);
    for (int i = 0; i < n; ++i) z[i] = ly[0] - ly[i];

    // scan t_c between data points so that each segment keeps min_points
    const int lo = min_points - 1, hi = n - min_points;
    double best_tc = t[lo];
    LinearPiece best = solve_fixed_tc(t, z, t0, best_tc);
    int best_i = lo;
    double ssr_min = best.ssr, ssr_max = best.ssr;
    const int sub = 4;
    for (int i = lo; i < hi; ++i)
        for (int k = 0; k <= sub; ++k) {
            const double tc = t[i] + (t[i + 1] - t[i]) * k / sub;
            const LinearPiece lp = solve_fixed_tc(t, z, t0, tc);
            ssr_min = std::min(ssr_min, lp.ssr);
            ssr_max = std::max(ssr_max, lp.ssr);
            if (lp.ssr < best.ssr) {
                best = lp;
                best_tc = tc;
                best_i = i;
            }
        }
    // golden-section refinement inside the neighbouring intervals
    {
        double a = t[std::max(lo, best_i - 1)], b = t[std::min(hi, best_i + 2)];
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double x1 = b - g * (b - a), x2 = a + g * (b - a);
        double f1 = solve_fixed_tc(t, z, t0, x1).ssr, f2 = solve_fixed_tc(t, z, t0, x2).ssr;
        for (int it = 0; it < 80 && b - a > 1e-12 * std::max(1.0, std::abs(b)); ++it) {
            if (f1 < f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - g * (b - a);
                f1 = solve_fixed_tc(t, z, t0, x1).ssr;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + g * (b - a);
                f2 = solve_fixed_tc(t, z, t0, x2).ssr;
            }
        }
        const double xm = 0.5 * (a + b);
        const LinearPiece lp = solve_fixed_tc(t, z, t0, xm);
        if (lp.ssr <= best.ssr) {
            best = lp;
            best_tc = xm;
        }
    }

    PiecewiseExpFit f;
    f.gamma_early = best.ge;
    f.gamma_late = best.gl;
    f.t_c = best_tc;
    f.log_p0 = ly[0];
    f.points = n;
    f.residual = std::sqrt(best.ssr / n);

    // covariance from the Jacobian of the three parameters
    Eigen::MatrixXd J(n, 3);
    const double h_tc = 1e-6 * std::max(1.0, std::abs(best_tc));
    for (int i = 0; i < n; ++i) {
        J(i, 0) = std::min(t[i], best_tc) - t0;
        J(i, 1) = std::max(t[i] - best_tc, 0.0);
        J(i, 2) = (model_log(best.ge, best.gl, best_tc + h_tc, t0, t[i]) -
                   model_log(best.ge, best.gl, best_tc - h_tc, t0, t[i])) /
                  (2.0 * h_tc);
    }
    const double s2 = n > 3 ? best.ssr / (n - 3) : 0.0;
    Eigen::Matrix3d JtJ = J.transpose() * J;
    Eigen::FullPivLU<Eigen::Matrix3d> lu(JtJ);
    if (lu.isInvertible()) {
        Eigen::Matrix3d cov = s2 * lu.inverse();
        f.sigma_gamma_early = std::sqrt(std::max(0.0, cov(0, 0)));
        f.sigma_gamma_late = std::sqrt(std::max(0.0, cov(1, 1)));
        f.sigma_t_c = std::sqrt(std::max(0.0, cov(2, 2)));
    }
    const double scale = std::max(std::abs(f.gamma_early), std::abs(f.gamma_late));
    const double err = std::hypot(f.sigma_gamma_early, f.sigma_gamma_late);
    const bool flat = ssr_max - ssr_min <= 1e-9 * std::max(ssr_max, 1e-300) || ssr_max < 1e-24;
    f.t_c_unconstrained =
        flat || std::abs(f.gamma_late - f.gamma_early) <= std::max(2.0 * err, 1e-6 * scale) || !lu.isInvertible();
    return f;
}

// beat fits

namespace {

struct BeatProblem {
    BeatForm form;
    bool fit_gamma;
    double gamma_fixed;
    int n_params() const {
        return form == BeatForm::decaying_amplitude ? 5 : (fit_gamma ? 4 : 3);
    }
    BeatFit unpack(const Eigen::VectorXd& x) const {
        BeatFit f;
        f.form = form;
        f.alpha0 = {x(0), x(1)};
        if (form == BeatForm::decaying_amplitude) {
            f.alpha_inf = {x(2), x(3)};
            f.omega = x(4);
            f.gamma = gamma_fixed;
            f.gamma_fixed = true;
        } else {
            f.omega = x(2);
            f.gamma = fit_gamma ? x(3) : gamma_fixed;
            f.gamma_fixed = !fit_gamma;
            f.alpha_inf = f.alpha0;
        }
        return f;
    }
};

void project(Eigen::VectorXd& x, const BeatProblem& pb) {
    auto clamp_pair = [&](int i) {
        const double m = std::hypot(x(i), x(i + 1));
        if (m > 1.05) {
            x(i) *= 1.05 / m;
            x(i + 1) *= 1.05 / m;
        }
    };
    clamp_pair(0);
    if (pb.form == BeatForm::decaying_amplitude) {
        clamp_pair(2);
        x(4) = std::abs(x(4));
    } else {
        x(2) = std::abs(x(2));
        if (pb.fit_gamma) x(3) = std::max(0.0, x(3));
    }
}

double ssr_of(const BeatProblem& pb, const Eigen::VectorXd& x, const Series& s, Eigen::VectorXd* r = nullptr) {
    const BeatFit f = pb.unpack(x);
    double acc = 0.0;
    if (r) r->resize(static_cast<Eigen::Index>(s.t.size()));
    for (size_t i = 0; i < s.t.size(); ++i) {
        const double d = s.y[i] - beat_model(f, s.t[i]);
        if (r) (*r)(static_cast<Eigen::Index>(i)) = d;
        acc += d * d;
    }
    return acc;
}

struct LmResult {
    Eigen::VectorXd x;
    double ssr;
    bool converged;
    int iterations;
};

LmResult levenberg_marquardt(const BeatProblem& pb, Eigen::VectorXd x, const Series& s, int max_it) {
    const int np = pb.n_params();
    const auto m = static_cast<Eigen::Index>(s.t.size());
    Eigen::VectorXd r;
    double cur = ssr_of(pb, x, s, &r);
    double lambda = 1e-3;
    bool converged = false;
    int it = 0;
    for (; it < max_it; ++it) {
        Eigen::MatrixXd J(m, np);
        for (int k = 0; k < np; ++k) {
            const double h = 1e-7 * std::max(1.0, std::abs(x(k)));
            Eigen::VectorXd xp = x, xm = x, rp, rm;
            xp(k) += h;
            xm(k) -= h;
            ssr_of(pb, xp, s, &rp);
            ssr_of(pb, xm, s, &rm);
            J.col(k) = -(rp - rm) / (2.0 * h);  // d model / d x
        }
        const Eigen::MatrixXd A = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * r;
        if (g.cwiseAbs().maxCoeff() < 1e-14 * std::max(1.0, cur)) {
            converged = true;
            break;
        }
        bool improved = false;
        for (int tries = 0; tries < 30; ++tries) {
            Eigen::MatrixXd Ad = A;
            for (int k = 0; k < np; ++k) Ad(k, k) += lambda * std::max(A(k, k), 1e-12);
            Eigen::VectorXd step = Ad.ldlt().solve(g);
            Eigen::VectorXd xn = x + step;
            project(xn, pb);
            Eigen::VectorXd rn;
            const double nxt = ssr_of(pb, xn, s, &rn);
            if (nxt < cur) {
                const double rel = (cur - nxt) / std::max(cur, 1e-300);
                const double dx = (xn - x).norm() / std::max(1.0, x.norm());
                x = xn;
                r = rn;
                cur = nxt;
                lambda = std::max(lambda / 3.0, 1e-12);
                improved = true;
                if (rel < 1e-12 || dx < 1e-12 || cur < 1e-28) converged = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!improved) {
            converged = true;  // no descent direction left at this damping
            break;
        }
        if (converged) break;
    }
    return {x, cur, converged, it};
}

}  // namespace

double beat_model(const BeatFit& f, double t) {
    const cplx osc = std::polar(1.0, -f.omega * t);
    if (f.form == BeatForm::decaying_amplitude) {
        const cplx at = f.alpha_inf + (f.alpha0 - f.alpha_inf) * std::exp(-1.5 * f.gamma * t);
        return std::norm(at * osc + (1.0 - f.alpha0));
    }
    return std::norm(f.alpha0 * osc * std::exp(-0.5 * f.gamma * t) + (1.0 - f.alpha0));
}

BeatFit fit_beat(const Series& s, BeatForm form, const BeatOptions& opt) {
    if (s.t.size() != s.y.size() || s.t.size() < 6) throw PhysicsError("beat fit needs >= 6 points");
    const double span = s.t.back() - s.t.front();
    if (!(span > 0.0)) throw PhysicsError("beat fit needs an increasing time axis");

    BeatProblem pb{form, form == BeatForm::dissipative_vs_bound && !opt.gamma.has_value(), 0.0};
    if (form == BeatForm::decaying_amplitude) pb.gamma_fixed = opt.gamma.value_or(opt.gamma1);
    else pb.gamma_fixed = opt.gamma.value_or(0.0);

    const auto [ymin, ymax] = std::minmax_element(s.y.begin(), s.y.end());
    if (*ymax - *ymin <= 1e-12 * std::max(1.0, std::abs(*ymax))) {
        BeatFit f;
        f.form = form;
        f.alpha0 = 1.0;
        f.alpha_inf = 1.0;
        f.gamma = pb.gamma_fixed;
        f.gamma_fixed = !pb.fit_gamma;
        f.omega_unidentifiable = true;
        f.converged = true;
        double acc = 0.0;
        for (size_t i = 0; i < s.t.size(); ++i) acc += std::pow(s.y[i] - beat_model(f, s.t[i]), 2);
        f.residual = acc;
        return f;
    }

    double dt_min = span;
    for (size_t i = 1; i < s.t.size(); ++i) dt_min = std::min(dt_min, s.t[i] - s.t[i - 1]);
    // at least 1.5 periods inside the data, at most a quarter of the sampling rate
    const double w_lo = opt.omega_min > 0.0 ? opt.omega_min : 3.0 * pi / span;
    const double w_hi = opt.omega_max > 0.0 ? opt.omega_max : 0.5 * pi / dt_min;
    if (!(w_hi > w_lo)) throw PhysicsError("empty beat-frequency search range");

    LmResult best{Eigen::VectorXd(), std::numeric_limits<double>::infinity(), false, 0};
    const int np = pb.n_params();
    const int grid = std::max(2, opt.grid);
    for (int gi = 0; gi < grid; ++gi) {
        const double w0 = w_lo * std::pow(w_hi / w_lo, double(gi) / (grid - 1));
        for (double a0 : {0.5, 0.9}) {
            Eigen::VectorXd x = Eigen::VectorXd::Zero(np);
            x(0) = a0;
            if (form == BeatForm::decaying_amplitude) {
                x(2) = a0;
                x(4) = w0;
            } else {
                x(2) = w0;
                if (pb.fit_gamma) x(3) = opt.gamma1 > 0.0 ? opt.gamma1 : 0.1 * w0;
            }
            LmResult r = levenberg_marquardt(pb, x, s, opt.max_iterations);
            if (r.ssr < best.ssr) best = r;
        }
    }
    BeatFit f = pb.unpack(best.x);
    f.residual = best.ssr;
    f.converged = best.converged;
    f.iterations = best.iterations;
    if (!f.converged) throw ConvergenceError("beat fit did not converge", best.ssr);
    // no visible oscillation: frequency cannot be pinned down
    const double osc_amp = form == BeatForm::decaying_amplitude
                               ? std::abs(f.alpha_inf) * std::abs(1.0 - f.alpha0)
                               : std::abs(f.alpha0) * std::abs(1.0 - f.alpha0);
    f.omega_unidentifiable = osc_amp < 1e-8;
    return f;
}

double chi_square(const DataPoints& data, const std::vector<double>& model) {
    if (model.size() != data.value.size()) throw PhysicsError("model and data differ in length");
    double c = 0.0;
    for (size_t i = 0; i < model.size(); ++i) c += std::pow((data.value[i] - model[i]) / data.sigma[i], 2);
    return c;
}

std::vector<double> ChiSquareReport::normalized() const {
    std::vector<double> out;
    for (double c : chi2) out.push_back(c / chi0);
    return out;
}

ChiSquareReport select_array_size(const DataPoints& data, const std::vector<int>& candidates,
                                  const ScenarioGenerator& generator) {
    if (data.value.size() != data.sigma.size() || data.value.empty())
        throw PhysicsError("data values and sigmas must be non-empty and matched");
    for (double sg : data.sigma)
        if (!(sg > 0.0)) throw PhysicsError("all sigma must be > 0");
    if (candidates.empty()) throw PhysicsError("no candidate array sizes");

    ChiSquareReport rep;
    rep.dof = static_cast<int>(data.value.size());
    rep.chi0 = boost::math::quantile(boost::math::chi_squared(rep.dof), 0.95);
    std::vector<int> order = candidates;
    std::sort(order.begin(), order.end());
    order.erase(std::unique(order.begin(), order.end()), order.end());
    double best = std::numeric_limits<double>::infinity();
    for (int M : order) {
        const double c = chi_square(data, generator(M));
        rep.candidates.push_back(M);
        rep.chi2.push_back(c);
        if (c < best) {  // strict: ties keep the smaller M
            best = c;
            rep.best_M = M;
        }
    }
    return rep;
}

std::string to_string(BeatForm f) {
    return f == BeatForm::decaying_amplitude ? "decaying_amplitude" : "dissipative_vs_bound";
}

BeatForm beat_form_from_string(const std::string& s) {
    if (s == "decaying_amplitude") return BeatForm::decaying_amplitude;
    if (s == "dissipative_vs_bound") return BeatForm::dissipative_vs_bound;
    throw PhysicsError("unknown beat form '" + s + "'");
}

}  // namespace mwqed::analysis
