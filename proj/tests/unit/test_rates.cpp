#include <doctest.h>

#include <cmath>

#include "mwqed/emission_rates.hpp"
#include "mwqed/errors.hpp"

using namespace mwqed;
using namespace mwqed::rates;

TEST_SUITE("emission_rates") {

TEST_CASE("golden-rule rate from the Franck-Condon factor") {
    const auto p = lattice::derive_params(8, 40);
    const double L = 400 * pi;
    for (double delta : {0.5, 1.0, 4.0, 9.0}) {
        const DriveParams d(0.8, delta);
        const double k0 = std::sqrt(delta);
        // 2 pi (Omega/2)^2 |gamma|^2 density of states, both directions
        const double g2 = std::norm(lattice::franck_condon(0, k0, p, lattice::BoxNorm{L}));
        const double expected = 2 * pi * 0.16 * g2 * 2 * (L / (2 * pi)) / (2 * k0);
        CHECK(gamma_single(p, d) == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK_THROWS_AS(gamma_single(p, DriveParams(1, 0)), PhysicsError);
    CHECK_THROWS_AS(gamma_single(p, DriveParams(1, -1)), PhysicsError);
    CHECK_THROWS_AS(DriveParams(-1, 1), PhysicsError);
}

TEST_CASE("phase folding") {
    CHECK(fold_phase(pi) == doctest::Approx(pi));
    CHECK(fold_phase(-pi) == doctest::Approx(pi));
    CHECK(fold_phase(3 * pi / 2) == doctest::Approx(-pi / 2));
    CHECK(DriveParams(1, 1, 2 * pi + 0.3).phase_lag() == doctest::Approx(0.3));
}

TEST_CASE("site labels") {
    CHECK(site_range(1) == std::vector<int>{0});
    CHECK(site_range(2) == std::vector<int>{0, 1});
    CHECK(site_range(3) == std::vector<int>{-1, 0, 1});
    CHECK(site_range(4) == std::vector<int>{-1, 0, 1, 2});
}

TEST_CASE("structure factor") {
    CHECK(structure_factor(5, 1.3, 1.3) == doctest::Approx(1.0));
    CHECK(structure_factor(1, 0.2, 1.7) == doctest::Approx(1.0));
    // full destructive interference for q - k = 2/M
    CHECK(structure_factor(4, 0.5, 0.0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(structure_factor(3, 0.0, 2.0) == doctest::Approx(1.0));
    // Fejer kernel
    const int M = 6;
    const double x = 0.23;
    const double fejer = std::pow(std::sin(M * pi * x / 2) / (M * std::sin(pi * x / 2)), 2);
    CHECK(structure_factor(M, x, 0.0) == doctest::Approx(fejer).epsilon(1e-12));
}

TEST_CASE("collective rate") {
    const auto p = lattice::derive_params(8, 40);
    const DriveParams d(1, 4);
    const double g1 = gamma_single(p, d);
    // q = 0, k = 2: both directions phase-matched
    const auto r = gamma_collective_resolved(p, d, {3, 1, 0.0});
    CHECK(r.forward == doctest::Approx(3 * g1));
    CHECK(r.backward == doctest::Approx(3 * g1));
    CHECK(gamma_collective(p, d, {3, 2, 0.0}) == doctest::Approx(6 * g1));
    // q = -0.5, k = 1.5: forward matched (q - k = -2), backward offset by 2/M
    const DriveParams d1(1, 2.25);
    const auto r1 = gamma_collective_resolved(p, d1, {4, 1, -0.5});
    CHECK(r1.forward == doctest::Approx(4 * gamma_single(p, d1)));
    CHECK(r1.backward == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(r1.mean == doctest::Approx(0.5 * (r1.forward + r1.backward)));
    CHECK_THROWS_AS(gamma_collective(p, d, {0, 1, 0.0}), PhysicsError);
}

TEST_CASE("phase-matched detuning lists") {
    const auto sr = superradiant_detunings(0.0, 2);
    CHECK(sr == std::vector<double>{0.0, 4.0, 16.0});
    const auto sub = subradiant_detunings(0.0, 1);
    CHECK(sub.size() == 2);
    CHECK(sub[0] == doctest::Approx(1.0));
    CHECK(sub[1] == doctest::Approx(9.0));
    const auto h = superradiant_detunings(pi / 2, 1);
    REQUIRE(h.size() == 3);
    CHECK(h[0] == doctest::Approx(0.25));
    CHECK(h[1] == doctest::Approx(2.25));
    CHECK(h[2] == doctest::Approx(6.25));
    CHECK_THROWS_AS(superradiant_detunings(0.0, -1), PhysicsError);
}

TEST_CASE("retardation parameter") {
    const auto p = lattice::derive_params(8, 40);
    const DriveParams d(1, 4);
    CHECK(retardation(p, d) == doctest::Approx(pi * gamma_single(p, d) / 4.0));
}

}
