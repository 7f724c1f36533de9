#include "mwqed/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

#include "mwqed/errors.hpp"
#include "mwqed/quadrature.hpp"

namespace mwqed::spectral {

namespace {

constexpr double inv_sqrtpi = std::numbers::inv_sqrtpi;

struct BathParams {
    double a;  // s_z^(-1/4)
    double K;  // Omega^2 sqrt(pi) a / 8
    double delta;
};

BathParams bath(const LatticeParams& p, const DriveParams& drive) {
    const double a = p.a_ho();
    const double om = drive.omega_rabi();
    return {a, om * om * std::sqrt(pi) * a / 8.0, drive.delta()};
}

// S_n(zeta) = exp(-c^2) [w(a zeta - ic) + w(a zeta + ic)], c = n pi / (2a); G_n = K S_n / zeta
void s_function(int n, cplx zeta, double a, cplx* S, cplx* dS) {
    n = std::abs(n);
    const double c = n * pi / (2.0 * a);
    const cplx x = a * zeta;
    const cplx z1 = x - cplx(0.0, c), z2 = x + cplx(0.0, c);
    const cplx w1 = faddeeva_w_scaled(z1, c);
    const cplx w2 = faddeeva_w_scaled(z2, c);
    *S = w1 + w2;
    if (dS) {
        const cplx tail = std::exp(-c * c) * cplx(0.0, 2.0 * inv_sqrtpi);
        *dS = a * ((-2.0 * z1 * w1 + tail) + (-2.0 * z2 * w2 + tail));
    }
}

// zeta * G(zeta^2) and its zeta-derivative
void scaled_matrix(cplx zeta, const BathParams& b, Eigen::Matrix2cd& A, Eigen::Matrix2cd* dA) {
    cplx S[3], dS[3];
    for (int n = 0; n < 3; ++n) s_function(n, zeta, b.a, &S[n], dA ? &dS[n] : nullptr);
    const cplx iK(0.0, b.K);
    const cplx diag = zeta * (zeta * zeta - b.delta);
    A(0, 0) = diag + iK * (S[0] + S[1] + S[2]);
    A(0, 1) = iK * S[1];
    A(1, 0) = iK * (S[1] - S[2]);
    A(1, 1) = diag + iK * (S[0] - S[1]);
    if (dA) {
        const cplx ddiag = 3.0 * zeta * zeta - b.delta;
        (*dA)(0, 0) = ddiag + iK * (dS[0] + dS[1] + dS[2]);
        (*dA)(0, 1) = iK * dS[1];
        (*dA)(1, 0) = iK * (dS[1] - dS[2]);
        (*dA)(1, 1) = ddiag + iK * (dS[0] - dS[1]);
    }
}

EntireDet entire(cplx zeta, const BathParams& b) {
    Eigen::Matrix2cd A, dA;
    scaled_matrix(zeta, b, A, &dA);
    EntireDet e;
    e.value = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    e.derivative = dA(0, 0) * A(1, 1) + A(0, 0) * dA(1, 1) - dA(0, 1) * A(1, 0) - A(0, 1) * dA(1, 0);
    return e;
}

cplx entire_value(cplx zeta, const BathParams& b) {
    Eigen::Matrix2cd A;
    scaled_matrix(zeta, b, A, nullptr);
    return A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
}

void require_nonzero(cplx zeta) {
    if (zeta == cplx(0.0, 0.0)) throw PhysicsError("zeta = 0 is the branch point of the bath transform");
}

// ---- argument principle ---------------------------------------------------

struct Rect {
    double x0, x1, y0, y1;
    double size() const { return std::max(x1 - x0, y1 - y0); }
    cplx center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
    bool contains(cplx z, double margin) const {
        return z.real() >= x0 - margin && z.real() <= x1 + margin && z.imag() >= y0 - margin &&
               z.imag() <= y1 + margin;
    }
};

struct BoundaryZero {};

class Winding {
public:
    explicit Winding(std::function<cplx(cplx)> f) : f_(std::move(f)) {}

    // number of zeros inside; throws BoundaryZero when the contour passes through one
    int count(const Rect& r) {
        const cplx c[4] = {{r.x0, r.y0}, {r.x1, r.y0}, {r.x1, r.y1}, {r.x0, r.y1}};
        double total = 0.0;
        for (int e = 0; e < 4; ++e) total += edge(c[e], c[(e + 1) % 4]);
        return static_cast<int>(std::lround(total / (2.0 * pi)));
    }

private:
    double edge(cplx z0, cplx z1) {
        constexpr int samples = 24;
        double total = 0.0;
        cplx zp = z0, fp = eval(z0);
        for (int i = 1; i <= samples; ++i) {
            const cplx z = z0 + (z1 - z0) * (double(i) / samples);
            const cplx fz = eval(z);
            total += segment(zp, z, fp, fz, 0);
            zp = z;
            fp = fz;
        }
        return total;
    }

    double segment(cplx z0, cplx z1, cplx f0, cplx f1, int depth) {
        const double d = std::arg(f1 / f0);
        const bool smooth = std::abs(d) < pi / 4 && std::abs(f1 - f0) < std::min(std::abs(f0), std::abs(f1));
        if (smooth || depth > 40) return d;
        const cplx zm = 0.5 * (z0 + z1);
        const cplx fm = eval(zm);
        return segment(z0, zm, f0, fm, depth + 1) + segment(zm, z1, fm, f1, depth + 1);
    }

    cplx eval(cplx z) {
        const cplx v = f_(z);
        if (std::abs(v) < 1e-300 || !std::isfinite(v.real()) || !std::isfinite(v.imag())) throw BoundaryZero{};
        return v;
    }

    std::function<cplx(cplx)> f_;
};

struct NewtonResult {
    cplx zeta;
    double step;
    double residual;
    bool ok;
};

NewtonResult newton(cplx z, const BathParams& b, double tol) {
    double step = 1.0;
    for (int it = 0; it < 100; ++it) {
        const EntireDet e = entire(z, b);
        if (e.derivative == cplx(0.0, 0.0)) return {z, step, std::abs(e.value), false};
        const cplx dz = e.value / e.derivative;
        z -= dz;
        step = std::abs(dz);
        if (step < 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    const double res = std::abs(entire_value(z, b));
    return {z, step, res, step <= 1e-10 && res <= std::max(tol, 1e-8)};
}

}  // namespace

SheetPoint SheetPoint::physical(cplx omega) {
    cplx z = std::sqrt(omega);
    if (z.imag() < 0.0) z = -z;
    // negative real omega: sqrt gives +i|.|; positive real: +|.|
    return {z};
}

SheetPoint SheetPoint::above_real(double omega) {
    return omega >= 0.0 ? SheetPoint{cplx(std::sqrt(omega), 0.0)} : SheetPoint{cplx(0.0, std::sqrt(-omega))};
}

cplx gtilde(int n, SheetPoint pt, const LatticeParams& p, const DriveParams& drive) {
    require_nonzero(pt.zeta);
    const BathParams b = bath(p, drive);
    cplx S;
    s_function(n, pt.zeta, b.a, &S, nullptr);
    return b.K * S / pt.zeta;
}

cplx gtilde_dzeta(int n, SheetPoint pt, const LatticeParams& p, const DriveParams& drive) {
    require_nonzero(pt.zeta);
    const BathParams b = bath(p, drive);
    cplx S, dS;
    s_function(n, pt.zeta, b.a, &S, &dS);
    return b.K * (dS / pt.zeta - S / (pt.zeta * pt.zeta));
}

Eigen::Matrix2cd gmatrix(SheetPoint pt, const LatticeParams& p, const DriveParams& drive) {
    require_nonzero(pt.zeta);
    Eigen::Matrix2cd A;
    scaled_matrix(pt.zeta, bath(p, drive), A, nullptr);
    return A / pt.zeta;
}

cplx gdet(SheetPoint pt, const LatticeParams& p, const DriveParams& drive) {
    require_nonzero(pt.zeta);
    return entire_value(pt.zeta, bath(p, drive)) / (pt.zeta * pt.zeta);
}

EntireDet entire_det(cplx zeta, const LatticeParams& p, const DriveParams& drive) {
    return entire(zeta, bath(p, drive));
}

std::string to_string(ModeClass c) {
    switch (c) {
        case ModeClass::BS: return "BS";
        case ModeClass::sR: return "sR";
        case ModeClass::SR: return "SR";
        default: return "other";
    }
}

SearchRegion default_search_region(const DriveParams& drive) {
    const double kmax = std::sqrt(std::max(drive.delta(), 0.0));
    return {-0.1, std::max(2.0, 1.25 * kmax + 1.0), -0.5, 1.0 + drive.omega_rabi()};
}

Vec3c residue_amplitudes(cplx zeta, const LatticeParams& p, const DriveParams& drive) {
    const BathParams b = bath(p, drive);
    const EntireDet e = entire(zeta, b);
    Eigen::Matrix2cd A;
    scaled_matrix(zeta, b, A, nullptr);
    const double scale = std::max({std::abs(zeta * zeta * zeta), b.delta * std::abs(zeta), b.K, 1e-300});
    if (std::abs(e.derivative) < 1e-9 * scale * scale / std::max(std::abs(zeta), 1e-300))
        throw PhysicsError("residue requested at a multiple zero of det G");
    // dD/domega = F'(zeta) / (2 zeta^3) at a zero of F = zeta^2 D
    const cplx dD = e.derivative / (2.0 * zeta * zeta * zeta);
    const cplx g22 = A(1, 1) / zeta, g21 = A(1, 0) / zeta;
    const cplx s = 1.0 / (std::sqrt(3.0) * dD);
    return {g22 * s, (g22 - g21) * s, g22 * s};
}

Vec3c mode_amplitudes_at(const SpectralMode& m, double t) {
    const cplx ph = std::exp(cplx(0.0, -1.0) * m.omega * t);
    return {m.amplitudes[0] * ph, m.amplitudes[1] * ph, m.amplitudes[2] * ph};
}

PoleSearch find_poles(const LatticeParams& p, const DriveParams& drive, const SearchRegion& region,
                      const PoleSearchOptions& opt) {
    if (!(region.re_max > region.re_min && region.im_max > region.im_min))
        throw PhysicsError("empty pole search region");
    const BathParams b = bath(p, drive);
    Winding wind([&](cplx z) { return entire_value(z, b); });
    PoleSearch out;
    std::vector<cplx> roots;

    // split slightly off center so subdivision lines avoid symmetric zero positions
    const double fracs[] = {0.5123, 0.4711, 0.5377, 0.4433};

    std::function<void(const Rect&, int)> visit = [&](const Rect& r, int depth) {
        int n = 0;
        try {
            n = wind.count(r);
        } catch (const BoundaryZero&) {
            // contour sits on a zero; shrink a hair and retry
            visit({r.x0 - 1e-7, r.x1 + 1.3e-7, r.y0 - 1.1e-7, r.y1 + 0.9e-7}, depth);
            return;
        }
        if (n <= 0) return;
        if (n == 1) {
            const NewtonResult nr = newton(r.center(), b, opt.tol);
            if (nr.ok && r.contains(nr.zeta, 1e-9 * std::max(1.0, std::abs(nr.zeta)))) {
                roots.push_back(nr.zeta);
                return;
            }
        }
        if (r.size() < opt.min_box || depth > 60) {
            const NewtonResult nr = newton(r.center(), b, opt.tol);
            if (nr.ok) {
                roots.push_back(nr.zeta);
                if (n > 1) out.failures.push_back("cluster of " + std::to_string(n) + " zeros near zeta = (" +
                                                  std::to_string(nr.zeta.real()) + ", " +
                                                  std::to_string(nr.zeta.imag()) + ")");
            } else {
                out.failures.push_back("Newton did not converge in box centered at (" +
                                       std::to_string(r.center().real()) + ", " +
                                       std::to_string(r.center().imag()) + "), residual " +
                                       std::to_string(nr.residual));
            }
            return;
        }
        const double f = fracs[depth % 4];
        const double xm = r.x0 + f * (r.x1 - r.x0);
        const double ym = r.y0 + f * (r.y1 - r.y0);
        visit({r.x0, xm, r.y0, ym}, depth + 1);
        visit({xm, r.x1, r.y0, ym}, depth + 1);
        visit({r.x0, xm, ym, r.y1}, depth + 1);
        visit({xm, r.x1, ym, r.y1}, depth + 1);
    };
    visit({region.re_min, region.re_max, region.im_min, region.im_max}, 0);

    // polish, snap axis roots, drop mirror images (Re zeta < 0) and duplicates
    std::vector<cplx> clean;
    for (cplx z : roots) {
        // F carries a structural simple zero at the branch point
        if (std::abs(z) < 1e-6) continue;
        if (std::abs(z.real()) < 1e-12 * std::abs(z)) z = cplx(0.0, z.imag());
        if (z.real() < 0.0) continue;
        bool dup = false;
        for (const cplx& c : clean)
            if (std::abs(c - z) < 1e-7 * std::max(1.0, std::abs(z))) dup = true;
        if (!dup) clean.push_back(z);
    }

    for (const cplx& z : clean) {
        SpectralMode m;
        m.zeta = z;
        m.omega = z * z;
        if (z.real() == 0.0) m.omega = cplx(-z.imag() * z.imag(), 0.0);
        m.residual = newton(z, b, opt.tol).step;
        if (z.imag() > 0.0 && z.real() == 0.0) {
            m.cls = ModeClass::BS;
            m.retained = true;
        } else if (z.imag() < 0.0 && m.omega.real() > 0.0) {
            const double arg = std::atan2(z.imag(), z.real());
            m.retained = arg > -opt.cut_angle;
            if (std::abs(m.omega.imag()) < 1e-4) m.cls = ModeClass::sR;
        }
        try {
            m.amplitudes = residue_amplitudes(z, p, drive);
        } catch (const PhysicsError& e) {
            out.failures.push_back(e.what());
        }
        out.modes.push_back(m);
    }

    // SR: the retained radiating pole with the largest decay rate
    int sr = -1;
    for (size_t i = 0; i < out.modes.size(); ++i) {
        const auto& m = out.modes[i];
        if (!m.retained || m.cls != ModeClass::other || m.zeta.imag() >= 0.0) continue;
        if (sr < 0 || std::abs(m.omega.imag()) > std::abs(out.modes[sr].omega.imag())) sr = static_cast<int>(i);
    }
    if (sr >= 0) out.modes[sr].cls = ModeClass::SR;

    std::sort(out.modes.begin(), out.modes.end(), [](const SpectralMode& x, const SpectralMode& y) {
        if (x.omega.real() != y.omega.real()) return x.omega.real() < y.omega.real();
        return x.omega.imag() < y.omega.imag();
    });
    int nbs = 0;
    for (const auto& m : out.modes) nbs += m.cls == ModeClass::BS;
    int ibs = 0;
    for (auto& m : out.modes) {
        m.label = to_string(m.cls);
        if (m.cls == ModeClass::BS && nbs > 1) m.label += std::to_string(++ibs);
    }
    return out;
}

BicProfile bic_profile(const SpectralMode& mode, const LatticeParams& p, const DriveParams& drive,
                       const sx::KGrid& grid, double t, std::vector<double> z) {
    BicProfile out;
    out.k = grid.modes();
    const double L = grid.length();
    const Vec3c A = mode_amplitudes_at(mode, t);
    const double half = 0.5 * drive.omega_rabi();
    out.B_k.resize(out.k.size());
    out.n_k.resize(out.k.size());
    for (size_t m = 0; m < out.k.size(); ++m) {
        const double k = out.k[m];
        const cplx den = mode.omega - k * k;
        if (std::abs(den) < 1e-12) throw PhysicsError("mode frequency coincides with a grid mode (division guard)");
        cplx num = 0.0;
        for (int j = -1; j <= 1; ++j)
            num += std::conj(lattice::franck_condon(j, k, p, lattice::BoxNorm{L})) * A[j + 1];
        out.B_k[m] = half * num / den;
        out.n_k[m] = std::norm(out.B_k[m]) / grid.dk();
        out.norm += std::norm(out.B_k[m]);
    }
    if (z.empty()) {
        const int N = static_cast<int>(out.k.size());
        z.resize(N);
        for (int i = 0; i < N; ++i) z[i] = -0.5 * L + L * i / N;
    }
    out.z = z;
    out.n_z.resize(z.size());
    const double inv = 1.0 / std::sqrt(L);
    for (size_t i = 0; i < z.size(); ++i) {
        cplx s = 0.0;
        for (size_t m = 0; m < out.k.size(); ++m) s += std::polar(inv, out.k[m] * z[i]) * out.B_k[m];
        out.n_z[i] = std::norm(s);
    }
    return out;
}

SpectralEvolution evolve_spectral(const LatticeParams& p, const DriveParams& drive, const std::vector<double>& t,
                                  const std::vector<SpectralMode>& modes, double cut_angle) {
    const BathParams b = bath(p, drive);
    const int T = static_cast<int>(t.size());
    // component 0 is t = 0 for the completeness check
    std::vector<double> times(1, 0.0);
    times.insert(times.end(), t.begin(), t.end());
    const int n = 2 * (T + 1);
    const cplx e1 = std::polar(1.0, -cut_angle);
    const cplx e2 = e1 * e1;

    auto f = [&](cplx zeta, cplx out[2]) {
        Eigen::Matrix2cd A;
        scaled_matrix(zeta, b, A, nullptr);
        const cplx F = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
        out[0] = cplx(0.0, 1.0) * A(1, 1) * zeta / F;
        out[1] = cplx(0.0, -1.0) * A(1, 0) * zeta / F;
    };
    auto integrand = [&](double s, cplx* out) {
        const double u = s / (1.0 - s);
        const double jac = 1.0 / ((1.0 - s) * (1.0 - s));
        const cplx zeta = u * e1;
        const cplx omega = u * u * e2;
        cplx fp[2], fm[2];
        f(zeta, fp);
        f(-zeta, fm);
        const cplx pref = (2.0 * u * e2 * jac) / (2.0 * pi);
        for (int i = 0; i <= T; ++i) {
            const cplx ph = pref * std::exp(cplx(0.0, -1.0) * omega * times[i]);
            out[2 * i] = ph * (fp[0] - fm[0]);
            out[2 * i + 1] = ph * (fp[1] - fm[1]);
        }
    };
    const quad::VecResult cut = quad::adaptive_gk15(integrand, n, 0.0, 1.0, 1e-11, 1e-11, 20000);
    if (!cut.converged) warn("branch-cut quadrature stopped at error " + std::to_string(cut.error));

    // pole contributions I = (G22, -G21) / (d det G / d omega)
    struct PoleTerm {
        cplx omega, r1, r2;
    };
    std::vector<PoleTerm> poles;
    for (const auto& m : modes) {
        if (!m.retained) continue;
        const EntireDet e = entire(m.zeta, b);
        Eigen::Matrix2cd A;
        scaled_matrix(m.zeta, b, A, nullptr);
        const cplx dD = e.derivative / (2.0 * m.zeta * m.zeta * m.zeta);
        poles.push_back({m.omega, A(1, 1) / m.zeta / dD, -A(1, 0) / m.zeta / dD});
    }

    SpectralEvolution out;
    out.t = t;
    out.cut_error = cut.error;
    for (int i = 0; i <= T; ++i) {
        cplx I1 = cut.value[2 * i], I2 = cut.value[2 * i + 1];
        for (const auto& pt : poles) {
            const cplx ph = std::exp(cplx(0.0, -1.0) * pt.omega * times[i]);
            I1 += pt.r1 * ph;
            I2 += pt.r2 * ph;
        }
        if (i == 0) {
            out.completeness_I1 = I1;
            out.completeness_I2 = I2;
            continue;
        }
        out.I1.push_back(I1);
        out.I2.push_back(I2);
        const double r3 = 1.0 / std::sqrt(3.0);
        const Vec3c A{I1 * r3, (I1 + I2) * r3, I1 * r3};
        out.sites.push_back(A);
        out.excited_fraction.push_back(std::norm(A[0]) + std::norm(A[1]) + std::norm(A[2]));
    }
    return out;
}

}  // namespace mwqed::spectral
