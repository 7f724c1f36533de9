#include <doctest.h>

#include <cmath>

#include "../oracles/oracles.inc"
#include "mwqed/errors.hpp"
#include "mwqed/lattice.hpp"

using namespace mwqed;
using namespace mwqed::lattice;

TEST_SUITE("lattice") {

TEST_CASE("derived parameters in internal units") {
    const auto p = derive_params(8, 40);
    CHECK(p.d == doctest::Approx(pi));
    CHECK(p.omega_ho == doctest::Approx(2.0 * std::sqrt(8.0)));
    CHECK(p.a_ho() == doctest::Approx(std::pow(8.0, -0.25)));
    // omega_r = hbar k^2 / 2m for 790 nm and Rb-87
    CHECK(p.si.omega_r / (2 * pi) == doctest::Approx(3678.0).epsilon(2e-3));
    CHECK_THROWS_AS(derive_params(-1, 40), PhysicsError);
    CHECK_THROWS_AS(derive_params(0, 40).a_ho(), PhysicsError);
}

TEST_CASE("Franck-Condon factor") {
    const auto p = derive_params(8, 40);
    const double L = 400 * pi, a = p.a_ho();
    for (double k : {0.0, 0.7, 2.0, -3.1}) {
        const auto g = franck_condon(0, k, p, BoxNorm{L});
        CHECK(std::norm(g) == doctest::Approx(2.0 / L * std::sqrt(pi) * a * std::exp(-k * k * a * a)));
        // translation by one site multiplies by exp(i k d)
        const auto g1 = franck_condon(1, k, p, BoxNorm{L});
        CHECK(std::abs(g1 - g * std::polar(1.0, k * pi)) < 1e-14);
    }
}

TEST_CASE("ground band against Mathieu characteristic values") {
    for (const auto& c : band_cases) {
        const auto b = band_structure(c.s, 64);
        // q grid holds 0 and the zone edge
        double e0 = 0, e1 = 0;
        for (size_t i = 0; i < b.q.size(); ++i) {
            if (std::abs(b.q[i]) < 1e-12) e0 = b.epsilon[i];
            if (std::abs(b.q[i] - 1.0) < 1e-12) e1 = b.epsilon[i];
        }
        CHECK(e0 == doctest::Approx(c.eps_center).epsilon(1e-9));
        CHECK(e1 == doctest::Approx(c.eps_edge).epsilon(1e-9));
    }
}

TEST_CASE("band structure convergence is reported") {
    CHECK_THROWS_AS(band_structure(400.0, 64, 5), ConvergenceError);
}

TEST_CASE("Hubbard J decreases with depth and has no imaginary residue") {
    const auto b8 = band_structure(8), b15 = band_structure(15);
    CHECK(hubbard_J(b8) > hubbard_J(b15));
    CHECK(std::abs(tunneling_coefficient(b8).imag()) < 1e-12);
    // deep-lattice asymptote (4/sqrt(pi)) s^(3/4) exp(-2 sqrt(s))
    const double s = 15, asym = 4 / std::sqrt(pi) * std::pow(s, 0.75) * std::exp(-2 * std::sqrt(s));
    CHECK(hubbard_J(b15) == doctest::Approx(asym).epsilon(0.2));
}

TEST_CASE("dispersion and folding") {
    const auto d4 = dispersion(4.0);
    CHECK(d4.k_resonant == doctest::Approx(2.0));
    CHECK(d4.k_tilde == doctest::Approx(0.0));
    CHECK(d4.v_g == doctest::Approx(4.0));
    const auto d1 = dispersion(1.0);
    CHECK(d1.k_tilde == doctest::Approx(1.0));
    CHECK_THROWS_AS(dispersion(-0.1), PhysicsError);
    CHECK(fold_quasimomentum(1.0) == doctest::Approx(1.0));
    CHECK(fold_quasimomentum(-1.0) == doctest::Approx(1.0));
    CHECK(fold_quasimomentum(2.5) == doctest::Approx(0.5));
    CHECK(fold_quasimomentum(-2.2) == doctest::Approx(-0.2));
    for (double k : {0.3, 1.7, 2.2, 3.9}) {
        const auto d = dispersion(k * k);
        CHECK(reduced_zone_energy(d.k_tilde, d.band_index) == doctest::Approx(k * k));
    }
}

TEST_CASE("Bloch phase") {
    const auto p = derive_params(8, 40);
    const auto b = bloch_phase(0.0, p);
    CHECK(b.q == doctest::Approx(0.0));
    // half a Bloch period reaches the zone edge
    CHECK(std::abs(bloch_phase(0.5 * b.tau_B, p).q) == doctest::Approx(1.0));
    CHECK(bloch_phase(0.25 * b.tau_B, p).q == doctest::Approx(-0.5));
}

TEST_CASE("free-time window") {
    const auto p = derive_params(8, 40);
    CHECK_NOTHROW(check_free_time(p, 0.5 * p.max_free_time()));
    CHECK_THROWS_AS(check_free_time(p, 1.5 * p.max_free_time()), PhysicsError);
}

}
