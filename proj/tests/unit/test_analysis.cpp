#include <doctest.h>

#include <cmath>
#include <random>

#include "mwqed/analysis.hpp"
#include "mwqed/errors.hpp"
#include "mwqed/single_excitation.hpp"

using namespace mwqed;
using namespace mwqed::analysis;

TEST_SUITE("analysis") {

TEST_CASE("piecewise fit recovers two rates") {
    const double g0 = 0.05, g1 = 0.15, tc = 12.0;
    Series s;
    for (int i = 0; i <= 80; ++i) {
        const double t = 0.5 * i;
        s.t.push_back(t);
        s.y.push_back(t < tc ? std::exp(-g0 * t) : std::exp(-g0 * tc - g1 * (t - tc)));
    }
    const auto f = fit_piecewise(s);
    CHECK(f.gamma_early == doctest::Approx(g0).epsilon(0.01));
    CHECK(f.gamma_late == doctest::Approx(g1).epsilon(0.01));
    CHECK(f.t_c == doctest::Approx(tc).epsilon(0.01));
    CHECK(f.ratio() == doctest::Approx(3.0).epsilon(0.02));
    CHECK_FALSE(f.t_c_unconstrained);
    CHECK(f.residual < 1e-3);
    CHECK(std::log(piecewise_model(f, 30.0, 0.0)) == doctest::Approx(-g0 * tc - g1 * (30 - tc)).epsilon(0.01));

    // windowing
    const auto fw = fit_piecewise(s, {0.0, 10.0});
    CHECK(fw.points == 21);
}

TEST_CASE("single exponential flags the break as unconstrained") {
    Series s;
    for (int i = 0; i <= 60; ++i) {
        s.t.push_back(i);
        s.y.push_back(std::exp(-0.04 * i));
    }
    const auto f = fit_piecewise(s);
    CHECK(f.t_c_unconstrained);
    CHECK(f.gamma_early == doctest::Approx(0.04).epsilon(0.01));
}

TEST_CASE("piecewise input checks") {
    Series s{{0, 1, 2}, {1, 0.9, 0.8}};
    CHECK_THROWS_AS(fit_piecewise(s), PhysicsError);
    Series neg{{0, 1, 2, 3, 4, 5, 6}, {1, 0.9, 0.8, -0.1, 0.5, 0.4, 0.3}};
    CHECK_THROWS(fit_piecewise(neg));
}

TEST_CASE("chi-square bookkeeping") {
    const DataPoints d{{1.0, 2.0, 3.0}, {0.1, 0.2, 0.5}};
    const std::vector<double> m = {1.1, 1.8, 3.5};
    CHECK(chi_square(d, m) == doctest::Approx(1.0 + 1.0 + 1.0).epsilon(1e-10));
    DataPoints ten;
    for (int i = 0; i < 10; ++i) {
        ten.value.push_back(0.0);
        ten.sigma.push_back(1.0);
    }
    const auto r = select_array_size(ten, {1, 2}, [](int M) { return std::vector<double>(10, 0.1 * M); });
    CHECK(r.dof == 10);
    CHECK(r.chi0 == doctest::Approx(18.307).epsilon(1e-4));
    CHECK(r.chi2[0] == doctest::Approx(0.1).epsilon(1e-10));
    CHECK(r.best_M == 1);
    CHECK(r.normalized()[1] == doctest::Approx(0.4 / 18.307).epsilon(1e-3));
}

TEST_CASE("ties go to the smaller array") {
    DataPoints d{{0.5, 0.4}, {0.1, 0.1}};
    const auto r = select_array_size(d, {4, 2, 3}, [](int M) {
        return M == 4 ? std::vector<double>{0.0, 0.0} : std::vector<double>{0.5, 0.4};
    });
    CHECK(r.best_M == 2);
}

TEST_CASE("array size recovered from noisy emitter dynamics") {
    const auto p = lattice::derive_params(8, 40);
    const rates::DriveParams d(1.0, 4.0);
    std::vector<double> t;
    for (int i = 1; i <= 40; ++i) t.push_back(i * 1.5);
    auto gen = [&](int M) {
        const auto model = sx::build_model(p, d, M, sx::KGrid{400, 6});
        const auto tr = sx::evolve(model, sx::InitialState::tds(0.0), t);
        std::vector<double> y;
        for (const auto& s : tr.states) y.push_back(sx::excited_fraction(s));
        return y;
    };
    std::mt19937 rng(20260101);
    std::normal_distribution<double> noise(0.0, 0.01);
    DataPoints data;
    for (double y : gen(3)) {
        data.value.push_back(y + noise(rng));
        data.sigma.push_back(0.01);
    }
    const auto r = select_array_size(data, {1, 2, 3, 4, 5}, gen);
    CHECK(r.best_M == 3);
    CHECK(r.chi2[2] < r.chi2[1]);
    CHECK(r.chi2[2] < r.chi2[3]);
}

TEST_CASE("beat fit recovers a synthetic trace") {
    BeatFit truth;
    truth.form = BeatForm::dissipative_vs_bound;
    truth.alpha0 = cplx(0.55, 0.1);
    truth.omega = 0.5;
    truth.gamma = 0.06;
    Series s;
    for (int i = 0; i <= 150; ++i) {
        s.t.push_back(0.25 * i);
        s.y.push_back(beat_model(truth, s.t.back()));
    }
    BeatOptions opt;
    opt.gamma = truth.gamma;
    const auto f = fit_beat(s, BeatForm::dissipative_vs_bound, opt);
    CHECK(f.converged);
    CHECK(f.gamma_fixed);
    CHECK(f.omega == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(std::norm(1.0 - f.alpha0) == doctest::Approx(std::norm(1.0 - truth.alpha0)).epsilon(1e-4));

    BeatFit dec;
    dec.form = BeatForm::decaying_amplitude;
    dec.alpha0 = 0.95;
    dec.alpha_inf = 0.9;
    dec.omega = 1.0;
    dec.gamma = 0.05;
    Series s2;
    for (int i = 0; i <= 200; ++i) {
        s2.t.push_back(0.2 * i);
        s2.y.push_back(beat_model(dec, s2.t.back()));
    }
    BeatOptions o2;
    o2.gamma1 = 0.05;
    const auto f2 = fit_beat(s2, BeatForm::decaying_amplitude, o2);
    CHECK(f2.omega == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(f2.residual < 1e-8);
}

TEST_CASE("constant input makes the frequency unidentifiable") {
    Series s;
    for (int i = 0; i < 30; ++i) {
        s.t.push_back(i);
        s.y.push_back(1.0);
    }
    const auto f = fit_beat(s, BeatForm::dissipative_vs_bound);
    CHECK(f.omega_unidentifiable);
    CHECK(std::abs(f.alpha0 - 1.0) < 1e-12);
}

TEST_CASE("beat form names round-trip") {
    for (auto f : {BeatForm::decaying_amplitude, BeatForm::dissipative_vs_bound})
        CHECK(beat_form_from_string(to_string(f)) == f);
    CHECK_THROWS(beat_form_from_string("nope"));
}

}
