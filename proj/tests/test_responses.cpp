#include "stretchopt/fem/model.hpp"
#include "stretchopt/opt/responses.hpp"

#include <doctest.h>

#include <random>

using namespace stretchopt;
using namespace stretchopt::opt;

namespace {

const fem::Material kMat{34.0, 5.8, 2000.0};

fem::SolveResult solve_cell(const density::Grid& g, const Eigen::VectorXd& x, double ub) {
    fem::FeModel model(g, kMat, fem::InterpolationParams{});
    model.set_density(x);
    return fem::newton_solve(model, pbc::build_constraints(g, {pbc::LoadKind::uniaxial, ub}), fem::SolverSettings{});
}

}  // namespace

TEST_CASE("mean p-norm examples") {
    const double Eb = 1.1;
    CHECK(energy_pnorm_constraint(Eigen::VectorXd::Zero(5), Eb, 10, 1.0).g == 0.0);
    CHECK(energy_pnorm_constraint(Eigen::VectorXd::Constant(7, Eb), Eb, 10, 1.0).g == doctest::Approx(1.0).epsilon(1e-14));
    Eigen::VectorXd E(4);
    E << 0.5, 0.5, 0.5, 2.0;
    E *= Eb;
    const double brute = std::pow(0.25 * (3.0 * std::pow(0.5, 10) + std::pow(2.0, 10)), 0.1);
    CHECK(std::abs(brute - 1.7411) <= 1e-3);
    const EnergyConstraint ec = energy_pnorm_constraint(E, Eb, 10, 1.0);
    CHECK(ec.g == doctest::Approx(brute).epsilon(1e-13));
    CHECK(std::abs(ec.g - 1.7411) <= 1e-3);
    CHECK(ec.max_energy == 2.0 * Eb);
    CHECK_THROWS_AS(energy_pnorm_constraint(E, 0.0, 10, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(energy_pnorm_constraint(E, Eb, 10, -1.0), std::invalid_argument);
}

TEST_CASE("p-norm sandwich, gradient and huge values") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 30.0);
    for (int k = 0; k < 20; ++k) {
        Eigen::VectorXd E(50);
        for (auto& v : E) v = u(rng);
        const double pn = mean_pnorm(E, 1.1, 10), mx = E.maxCoeff() / 1.1;
        CHECK(pn <= mx * (1 + 1e-14));
        CHECK(pn >= std::pow(1.0 / 50.0, 0.1) * mx * (1 - 1e-14));
        const Eigen::VectorXd g = mean_pnorm_gradient(E, 1.1, 10);
        for (int i = 0; i < 50; i += 7) {
            Eigen::VectorXd ep = E, em = E;
            ep[i] += 1e-6;
            em[i] -= 1e-6;
            CHECK(g[i] == doctest::Approx((mean_pnorm(ep, 1.1, 10) - mean_pnorm(em, 1.1, 10)) / 2e-6).epsilon(1e-5));
        }
    }
    Eigen::VectorXd big = Eigen::VectorXd::Constant(3, 1e40);
    CHECK(mean_pnorm(big, 1.0, 10) == doctest::Approx(1e40));
}

TEST_CASE("adaptive scale tracks the maximum") {
    Eigen::VectorXd E(5);
    E << 0.1, 0.4, 0.9, 1.7, 0.2;
    double c = 1.0;
    EnergyConstraint ec;
    for (int k = 0; k < 60; ++k) {
        ec = energy_pnorm_constraint(E, 1.1, 10, c, 0.5);
        CHECK(ec.c_next == doctest::Approx(0.5 * ec.max_energy / (1.1 * ec.pn) + 0.5 * c));
        c = ec.c_next;
    }
    CHECK(ec.g == doctest::Approx(1.7 / 1.1).epsilon(1e-9));
}

TEST_CASE("volume constraint") {
    CHECK(volume_constraint(Eigen::VectorXd::Constant(16, 0.3), 0.3) == doctest::Approx(0.0));
    CHECK(volume_constraint(Eigen::VectorXd::Ones(16), 0.3) == doctest::Approx(0.7));
    Eigen::VectorXd cb(16);
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) cb[4 * j + i] = (i + j) % 2;
    CHECK(volume_constraint(cb, 0.5) == 0.0);
}

TEST_CASE("reaction objective") {
    const density::Grid g(4, 4, 1.0);
    const Eigen::VectorXd l = pbc::loading_vector(g, pbc::LoadKind::uniaxial);
    SUBCASE("stale state") {
        fem::SolveResult s;
        s.status = fem::SolveStatus::diverged;
        CHECK_THROWS_AS(reaction_objective(s, l), StaleState);
    }
    SUBCASE("no load") {
        const fem::SolveResult r = solve_cell(g, Eigen::VectorXd::Ones(16), 0.0);
        CHECK(reaction_objective(r, l) == 0.0);
    }
    SUBCASE("linear regime closed form") {
        // small-strain plane-strain modulus with a traction-free transverse side
        const fem::LinearModuli m = fem::linear_moduli(kMat);
        const double mu = m.shear, lam = m.lame();
        const double Ep = 4.0 * mu * (lam + mu) / (lam + 2.0 * mu);
        const double ub = 1e-3 * 4.0;
        const fem::SolveResult r = solve_cell(g, Eigen::VectorXd::Ones(16), ub);
        REQUIRE(r.converged());
        const double expected = Ep * (ub / 4.0) * 4.0;
        CHECK(std::abs(reaction_objective(r, l) - expected) <= 0.02 * expected);
    }
    SUBCASE("tension monotonicity") {
        Eigen::VectorXd x = Eigen::VectorXd::Constant(16, 0.8);
        x[5] = 0.2;
        const double f1 = reaction_objective(solve_cell(g, x, 0.15 * 4), l);
        const double f2 = reaction_objective(solve_cell(g, x, 0.30 * 4), l);
        CHECK(f2 > f1);
        CHECK(f1 > 0.0);
    }
    SUBCASE("denser designs are not softer") {
        std::mt19937_64 rng(31);
        std::uniform_real_distribution<double> u(0.1, 0.8);
        for (int k = 0; k < 3; ++k) {
            Eigen::VectorXd x(16);
            for (auto& v : x) v = u(rng);
            const double f0 = reaction_objective(solve_cell(g, x, 1.2), l);
            const double f1 = reaction_objective(solve_cell(g, (1.2 * x).cwiseMin(1.0), 1.2), l);
            CHECK(f1 >= f0);
        }
    }
}
