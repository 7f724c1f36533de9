#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "mwqed/errors.hpp"
#include "mwqed/single_excitation.hpp"

using namespace mwqed;
using namespace mwqed::sx;

namespace {

// exp(-iHt) psi by full diagonalization
Eigen::VectorXcd dense_propagate(const CoupledModeModel& m, const Eigen::VectorXcd& psi, double t) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m.dense());
    Eigen::VectorXcd c = es.eigenvectors().adjoint() * psi;
    for (int i = 0; i < c.size(); ++i) c(i) *= std::polar(1.0, -es.eigenvalues()(i) * t);
    return es.eigenvectors() * c;
}

}  // namespace

TEST_SUITE("single_excitation") {

TEST_CASE("grid bookkeeping") {
    const KGrid g{20, 6};
    CHECK(g.dk() == doctest::Approx(0.1));
    CHECK(g.count() == 121);
    const auto k = g.modes();
    CHECK(k.front() == doctest::Approx(-6.0));
    CHECK(k[60] == doctest::Approx(0.0));
    const auto p = lattice::derive_params(8, 40);
    CHECK_THROWS_AS(KGrid({20, 1}).validate(p, DriveParams(1, 4)), PhysicsError);
}

TEST_CASE("Chebyshev propagation against dense diagonalization") {
    const auto p = lattice::derive_params(8, 40);
    const KGrid g{20, 6};
    for (int M : {1, 3}) {
        const DriveParams d(1.0, 4.0);
        const auto model = build_model(p, d, M, g);
        REQUIRE(model.dim() <= 200);
        const auto psi0 = initial_vector(model, InitialState::tds(0.0));
        const std::vector<double> t = {0.5, 3.0, 17.0};
        const auto tr = evolve(model, InitialState::tds(0.0), t);
        for (size_t i = 0; i < t.size(); ++i) {
            const auto ref = dense_propagate(model, psi0, t[i]);
            const double err = (ref.head(M) - tr.states[i].A).cwiseAbs().maxCoeff();
            const double errB = (ref.tail(model.n_modes()) - tr.states[i].B).cwiseAbs().maxCoeff();
            CHECK(err < 1e-6);
            CHECK(errB < 1e-6);
        }
    }
}

TEST_CASE("norm conservation") {
    const auto p = lattice::derive_params(8, 40);
    const auto model = build_model(p, DriveParams(1.0, 4.0), 5, KGrid{400, 6});
    std::vector<double> t;
    for (int i = 0; i <= 20; ++i) t.push_back(5.0 * i);
    const auto tr = evolve(model, InitialState::localized(0), t);
    CHECK(tr.max_norm_drift < 1e-8);
    for (const auto& s : tr.states) CHECK(s.A.squaredNorm() + s.B.squaredNorm() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("no coupling leaves the emitters untouched") {
    const auto p = lattice::derive_params(8, 40);
    const auto model = build_model(p, DriveParams(0.0, 4.0), 3, KGrid{100, 6});
    const auto tr = evolve(model, InitialState::tds(0.3), {0.0, 10.0, 50.0});
    for (const auto& s : tr.states) {
        CHECK(excited_fraction(s) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s.B.norm() < 1e-12);
    }
}

TEST_CASE("single emitter follows the golden-rule envelope at weak coupling") {
    const auto p = lattice::derive_params(8, 40);
    const DriveParams d(0.3, 4.0);
    const double g1 = rates::gamma_single(p, d);
    const auto model = build_model(p, d, 1, KGrid{2000, 6});
    std::vector<double> t;
    for (int i = 1; i <= 4; ++i) t.push_back(i * 0.5 / g1);
    const auto tr = evolve(model, InitialState::localized(0), t);
    for (size_t i = 0; i < t.size(); ++i)
        CHECK(excited_fraction(tr.states[i]) == doctest::Approx(std::exp(-g1 * t[i])).epsilon(0.03));
}

TEST_CASE("momentum density integrates to the emitted fraction") {
    const auto p = lattice::derive_params(8, 40);
    const KGrid g{400, 6};
    const auto model = build_model(p, DriveParams(1.0, 4.0), 3, g);
    const auto tr = evolve(model, InitialState::tds(0.0), {30.0});
    const auto& s = tr.states.back();
    for (double sigma : {0.0, 0.15}) {
        const auto n = momentum_distribution(s, g, sigma);
        double sum = 0.0;
        for (double v : n.density) sum += v * g.dk();
        CHECK(sum == doctest::Approx(1.0 - excited_fraction(s)).epsilon(1e-6));
    }
    const auto dir = directional_populations(s, g);
    CHECK(dir.P_plus + dir.P_minus <= 1.0 - excited_fraction(s) + 1e-12);
    // inversion symmetry of a q = 0 array about site 0
    CHECK(dir.P_plus == doctest::Approx(dir.P_minus).epsilon(1e-8));
    const auto z = position_distribution(s, g);
    double zsum = 0.0;
    for (double v : z.density) zsum += v * (z.x[1] - z.x[0]);
    CHECK(zsum == doctest::Approx(1.0 - excited_fraction(s)).epsilon(1e-8));
}

TEST_CASE("first-harmonic center") {
    std::vector<double> phi, y;
    for (int i = 0; i < 9; ++i) {
        phi.push_back(2 * pi * (i - 4.5) / 9);
        y.push_back(1.0 + std::cos(phi.back() - 0.4 * pi));
    }
    CHECK(first_harmonic_center(phi, y) == doctest::Approx(0.4).epsilon(1e-10));
}

TEST_CASE("thermal weights are validated") {
    const auto p = lattice::derive_params(8, 40);
    CHECK_THROWS_AS(thermal_average(p, DriveParams(1, 4), 3, {0.0, 0.5}, {0.5, 0.6}, {1.0}, KGrid{100, 6}),
                    PhysicsError);
}

}
