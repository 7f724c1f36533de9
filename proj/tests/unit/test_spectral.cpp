#include <doctest.h>

#include <cmath>
#include <complex>

#include "../oracles/oracles.inc"
#include "mwqed/single_excitation.hpp"
#include "mwqed/spectral.hpp"

using namespace mwqed;
using namespace mwqed::spectral;

TEST_SUITE("faddeeva") {

TEST_CASE("complementary error function") {
    for (const auto& c : cerfc_cases) {
        const auto v = cerfc(c.z);
        CHECK(std::abs(v - c.v) <= 1e-10 * std::max(1.0, std::abs(c.v)));
    }
}

TEST_CASE("Faddeeva function") {
    for (const auto& c : faddeeva_cases) {
        const auto v = faddeeva_w(c.z);
        CHECK(std::abs(v - c.v) <= 1e-10 * std::max(1.0, std::abs(c.v)));
    }
}

TEST_CASE("derivative identity and scaling") {
    for (cplx z : {cplx(0.3, 0.2), cplx(-2, 1), cplx(4, -0.5)}) {
        const double h = 1e-6;
        const cplx fd = (faddeeva_w(z + h) - faddeeva_w(z - h)) / (2 * h);
        CHECK(std::abs(fd - faddeeva_w_derivative(z)) < 1e-7);
        const double c = 1.3;
        CHECK(std::abs(faddeeva_w_scaled(z, c) - std::exp(-c * c) * faddeeva_w(z)) < 1e-13);
    }
}

}

TEST_SUITE("spectral") {

TEST_CASE("bath transform against direct integration") {
    const auto p = lattice::derive_params(8, 40);
    for (const auto& c : gtilde_cases) {
        const DriveParams d(c.om, 0.0);
        const auto g = gtilde(c.n, SheetPoint::physical(c.omega), p, d);
        CHECK(std::abs(g - c.g) <= 1e-10 * std::max(1.0, std::abs(c.g)));
    }
}

TEST_CASE("sheet bookkeeping") {
    const auto a = SheetPoint::physical(cplx(-1, 0.0));
    CHECK(a.principal());
    CHECK(std::abs(a.omega() - cplx(-1, 0)) < 1e-15);
    const auto b = SheetPoint::above_real(4.0);
    CHECK(std::abs(b.zeta - cplx(2, 0)) < 1e-15);
    CHECK(SheetPoint{cplx(1, -0.1)}.sheet() == 1);
}

TEST_CASE("entire determinant derivative") {
    const auto p = lattice::derive_params(8, 40);
    const DriveParams d(1.0, 4.0);
    const cplx z(1.7, -0.2);
    const double h = 1e-6;
    const cplx fd = (entire_det(z + h, p, d).value - entire_det(z - h, p, d).value) / (2 * h);
    CHECK(std::abs(fd - entire_det(z, p, d).derivative) < 1e-6 * std::max(1.0, std::abs(fd)));
}

TEST_CASE("pole search against independent root polishing") {
    const auto p = lattice::derive_params(8, 40);
    for (double om : {1.0, 0.42, 0.6}) {
        const double delta = om == 1.0 ? 4.0 : (om == 0.42 ? 1.0 : 0.0);
        const DriveParams d(om, delta);
        const auto res = find_poles(p, d, default_search_region(d));
        for (const auto& c : pole_cases) {
            if (c.om != om) continue;
            double best = 1e300;
            for (const auto& m : res.modes) best = std::min(best, std::abs(m.zeta - c.zeta));
            CHECK_MESSAGE(best < 1e-8, "om=" << om << " zeta=" << c.zeta);
        }
        for (const auto& m : res.modes) {
            CHECK(std::abs(m.zeta) > 1e-6);
            CHECK(std::abs(entire_det(m.zeta, p, d).value) < 1e-9);
        }
    }
}

TEST_CASE("mode classes at the reference points") {
    const auto p = lattice::derive_params(8, 40);
    const DriveParams d(1.0, 4.0);
    const auto res = find_poles(p, d, default_search_region(d));
    int bs = 0, sr = 0, sub = 0;
    for (const auto& m : res.modes) {
        if (m.cls == ModeClass::BS) {
            ++bs;
            CHECK(m.omega.real() < 0);
            CHECK(std::abs(m.omega.imag()) < 1e-12);
        }
        if (m.cls == ModeClass::SR) ++sr;
        if (m.cls == ModeClass::sR) ++sub;
    }
    CHECK(bs == 1);
    CHECK(sr == 1);
    CHECK(sub == 1);
}

TEST_CASE("spectral and mode-space evolution agree") {
    const auto p = lattice::derive_params(8, 40);
    const DriveParams d(1.0, 4.0);
    const auto res = find_poles(p, d, default_search_region(d));
    std::vector<double> t;
    for (int i = 0; i <= 10; ++i) t.push_back(2.0 * i);
    const auto se = evolve_spectral(p, d, t, res.modes);
    CHECK(std::abs(se.completeness_I1 - 1.0) < 1e-8);
    CHECK(std::abs(se.completeness_I2) < 1e-8);

    const sx::KGrid grid{400, 6};
    const auto model = sx::build_model(p, d, 3, grid);
    const auto tr = sx::evolve(model, sx::InitialState::tds(0.0), t);
    for (size_t i = 0; i < t.size(); ++i)
        CHECK(std::abs(se.excited_fraction[i] - sx::excited_fraction(tr.states[i])) < 2e-3);
}

}
