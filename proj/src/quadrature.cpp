#include "mwqed/quadrature.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <queue>

namespace mwqed::quad {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
using G7 = boost::math::quadrature::gauss<double, 7>;
using G20 = boost::math::quadrature::gauss<double, 20>;

struct Panel {
    double a, b;
    std::vector<cplx> value;
    double error;
    bool operator<(const Panel& o) const {
        // larger error first; ties resolved by position for determinism
        if (error != o.error) return error < o.error;
        return a > o.a;
    }
};

Panel integrate_panel(const VecIntegrand& f, int n, double a, double b, std::vector<cplx>& buf) {
    const auto& xk = GK::abscissa();  // xk[0] = 0, odd entries are Kronrod-only nodes
    const auto& wk = GK::weights();
    const auto& wg = G7::weights();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    Panel p{a, b, std::vector<cplx>(n, 0.0), 0.0};
    std::vector<cplx> gauss(n, 0.0);
    auto add = [&](double x, double wkron, double wgauss) {
        f(x, buf.data());
        for (int i = 0; i < n; ++i) {
            p.value[i] += wkron * buf[i];
            gauss[i] += wgauss * buf[i];
        }
    };
    add(c, wk[0], wg[0]);
    for (size_t j = 1; j < xk.size(); ++j) {
        const double wgj = (j % 2 == 0) ? wg[j / 2] : 0.0;
        add(c - h * xk[j], wk[j], wgj);
        add(c + h * xk[j], wk[j], wgj);
    }
    for (int i = 0; i < n; ++i) {
        p.value[i] *= h;
        gauss[i] *= h;
        p.error = std::max(p.error, std::abs(p.value[i] - gauss[i]));
    }
    return p;
}

}  // namespace

VecResult adaptive_gk15(const VecIntegrand& f, int n, double a, double b, double abs_tol, double rel_tol,
                        int max_intervals) {
    std::vector<cplx> buf(n);
    std::priority_queue<Panel> heap;
    VecResult r;
    heap.push(integrate_panel(f, n, a, b, buf));
    r.evaluations = 15;
    auto totals = [&](std::vector<cplx>& v, double& err) {
        v.assign(n, 0.0);
        err = 0.0;
        auto copy = heap;
        while (!copy.empty()) {
            const Panel& p = copy.top();
            for (int i = 0; i < n; ++i) v[i] += p.value[i];
            err += p.error;
            copy.pop();
        }
    };
    double err = heap.top().error;
    std::vector<cplx> v = heap.top().value;
    while (true) {
        double scale = 0.0;
        for (const auto& x : v) scale = std::max(scale, std::abs(x));
        if (err <= std::max(abs_tol, rel_tol * scale)) {
            r.converged = true;
            break;
        }
        if (static_cast<int>(heap.size()) >= max_intervals) break;
        Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        Panel left = integrate_panel(f, n, worst.a, mid, buf);
        Panel right = integrate_panel(f, n, mid, worst.b, buf);
        r.evaluations += 30;
        for (int i = 0; i < n; ++i) v[i] += left.value[i] + right.value[i] - worst.value[i];
        err += left.error + right.error - worst.error;
        heap.push(std::move(left));
        heap.push(std::move(right));
        // running sums drift; refresh them every so often
        if (heap.size() % 256 == 0) totals(v, err);
    }
    totals(v, err);
    r.value = v;
    r.error = err;
    return r;
}

double gauss_legendre(const std::function<double(double)>& f, double a, double b, int panels) {
    const double h = (b - a) / panels;
    double sum = 0.0;
    for (int k = 0; k < panels; ++k) {
        const double lo = a + k * h;
        sum += G20::integrate(f, lo, lo + h);
    }
    return sum;
}

}  // namespace mwqed::quad
