#include "fem_helpers.hpp"
#include "stretchopt/fem/model.hpp"
#include "stretchopt/pbc/constraints.hpp"

#include <doctest.h>

#include <Eigen/Dense>

using namespace stretchopt;
using namespace stretchopt::pbc;

namespace {

const fem::Material kMat{34.0, 5.8, 2000.0};

fem::SolveResult solve(const Grid& g, const Eigen::VectorXd& x, const LoadCase& lc, double alpha) {
    fem::FeModel model(g, kMat, fem::InterpolationParams{});
    model.set_density(x);
    return fem::newton_solve(model, build_constraints(g, lc, alpha), fem::SolverSettings{});
}

}  // namespace

TEST_CASE("load kinds") {
    CHECK(parse_load_kind("uniaxial") == LoadKind::uniaxial);
    CHECK(parse_load_kind("biaxial") == LoadKind::equibiaxial);
    CHECK(parse_load_kind("shear") == LoadKind::pure_shear);
    CHECK_THROWS_AS(parse_load_kind("torsion"), std::invalid_argument);
}

TEST_CASE("constraint structure") {
    const Grid g(6, 4, 1.0);
    for (LoadKind k : {LoadKind::uniaxial, LoadKind::equibiaxial, LoadKind::pure_shear}) {
        const ConstraintSet zero = build_constraints(g, {k, 0.0});
        CHECK(zero.Q.cwiseAbs().maxCoeff() == 0.0);
        CHECK(zero.violation(Eigen::VectorXd::Zero(num_dofs(g))).cwiseAbs().maxCoeff() == 0.0);
        const ConstraintSet cs = build_constraints(g, {k, 1.5});
        CHECK(row_rank(cs) == cs.rows());
        for (int r = 0; r < cs.rows(); ++r) {
            int n = 0;
            double sum = 0.0;
            for (SparseRows::InnerIterator it(cs.A, r); it; ++it) {
                CHECK(std::abs(it.value()) == 1.0);
                sum += it.value();
                ++n;
            }
            CHECK((n == 1 ? sum == 1.0 : sum == 0.0));
        }
        // a homogeneous deformation with the prescribed macroscopic gradient satisfies every row
        Eigen::Matrix2d H = Eigen::Matrix2d::Zero();
        if (k == LoadKind::uniaxial) H << 1.5 / 6.0, 0, 0, -0.1;
        if (k == LoadKind::equibiaxial) H << 1.5 / 6.0, 0, 0, 1.5 / 4.0;
        if (k == LoadKind::pure_shear) H << 0, 1.5 / 4.0, 0, 0;
        Eigen::VectorXd u(num_dofs(g));
        for (int j = 0; j <= g.ny; ++j)
            for (int i = 0; i <= g.nx; ++i) {
                const Eigen::Vector2d d = H * Eigen::Vector2d(i, j);
                u[dof_index(g, i, j, 0)] = d.x();
                u[dof_index(g, i, j, 1)] = d.y();
            }
        CHECK(cs.violation(u).cwiseAbs().maxCoeff() <= 1e-12);
    }
    CHECK_THROWS_AS(dirichlet_constraints(4, {{5, 0.0}}), InvalidMesh);
    CHECK_THROWS_AS(build_constraints(g, {LoadKind::uniaxial, -1.0}), std::invalid_argument);
}

TEST_CASE("penalty augmentation") {
    Eigen::VectorXd r(2);
    r << 0.3, -0.2;
    Eigen::SparseMatrix<double> K(2, 2);
    K.insert(0, 0) = 2.0;
    K.insert(1, 1) = 3.0;
    const Eigen::VectorXd u = Eigen::VectorXd::Zero(2);
    SUBCASE("empty constraint set") {
        ConstraintSet none;
        none.A.resize(0, 2);
        none.Q.resize(0);
        const Augmented a = penalty_augment(r, K, none, u);
        CHECK(a.residual == r);
        CHECK(Eigen::MatrixXd(a.tangent) == Eigen::MatrixXd(K));
    }
    SUBCASE("two-dof toy converges as 1/alpha") {
        // min k1 u1^2/2 + k2 u2^2/2 s.t. u1 - u2 = 1
        const double k1 = 2.0, k2 = 3.0;
        const double e1 = k2 / (k1 + k2), e2 = -k1 / (k1 + k2);
        double prev = 0.0;
        for (double alpha : {1e3, 1e4, 1e5, 1e6}) {
            ConstraintSet cs;
            cs.A.resize(1, 2);
            cs.A.insert(0, 0) = 1.0;
            cs.A.insert(0, 1) = -1.0;
            cs.Q = Eigen::VectorXd::Ones(1);
            cs.alpha = alpha;
            const Augmented a = penalty_augment(Eigen::VectorXd(K * u), K, cs, u);
            const Eigen::VectorXd sol = u - Eigen::MatrixXd(a.tangent).ldlt().solve(a.residual);
            const double err = std::hypot(sol[0] - e1, sol[1] - e2);
            if (prev > 0.0) CHECK(prev / err == doctest::Approx(10.0).epsilon(1e-2));
            prev = err;
            CHECK(Eigen::MatrixXd(a.tangent).isApprox(Eigen::MatrixXd(a.tangent).transpose()));
        }
    }
}

TEST_CASE("homogeneous patch test") {
    const Grid g(8, 8, 1.0);
    const double ub = 0.3 * 8.0;
    const fem::SolveResult r = solve(g, Eigen::VectorXd::Ones(64), {LoadKind::uniaxial, ub}, 1e8);
    REQUIRE(r.converged());
    const double l1 = 1.3, s = helpers::free_transverse_stretch(l1, kMat);
    const double psi = helpers::psi_diag(l1, s, kMat);
    for (int e = 0; e < 64; ++e) CHECK(std::abs(r.element_energy[e] - psi) <= 1e-5 * psi);
    for (int j = 0; j <= 8; ++j)
        for (int i = 0; i <= 8; ++i) {
            CHECK(std::abs(r.u[dof_index(g, i, j, 0)] - 0.3 * i) <= 1e-5);
            CHECK(std::abs(r.u[dof_index(g, i, j, 1)] - (s - 1.0) * j) <= 1e-5);
        }
    const ConstraintSet cs = build_constraints(g, {LoadKind::uniaxial, ub});
    CHECK(cs.violation(r.u).cwiseAbs().maxCoeff() <= 1e-4 * ub);
}

TEST_CASE("violation scales with the penalty weight") {
    const Grid g(8, 8, 1.0);
    Eigen::VectorXd x = Eigen::VectorXd::Ones(64);
    for (int j = 2; j < 6; ++j)
        for (int i = 2; i < 6; ++i) x[g.element(i, j)] = 0.05;  // soft core
    for (LoadKind k : {LoadKind::uniaxial, LoadKind::equibiaxial, LoadKind::pure_shear}) {
        const LoadCase lc{k, 0.3 * 8.0};
        double prev = 0.0;
        for (double alpha : {5e7, 1e8, 2e8}) {
            const fem::SolveResult r = solve(g, x, lc, alpha);
            REQUIRE(r.converged());
            const double v = build_constraints(g, lc, alpha).violation(r.u).cwiseAbs().maxCoeff();
            if (alpha == 1e8) CHECK(v <= 1e-4);
            if (prev > 0.0) CHECK(prev / v >= 1.8);
            prev = v;
        }
    }
}

TEST_CASE("reaction equals the constraint force conjugate to u_bar") {
    const Grid g(8, 8, 1.0);
    Eigen::VectorXd x = Eigen::VectorXd::Constant(64, 0.6);
    x[g.element(3, 3)] = 1.0;
    for (LoadKind k : {LoadKind::uniaxial, LoadKind::equibiaxial, LoadKind::pure_shear}) {
        const double ub = 1.6;
        const ConstraintSet cs = build_constraints(g, {k, ub});
        const fem::SolveResult r = solve(g, x, {k, ub}, 1e8);
        REQUIRE(r.converged());
        const double reaction = loading_vector(g, k).dot(r.f_int);
        const double conjugate = -cs.alpha * (cs.Q / ub).dot(cs.violation(r.u));
        CHECK(reaction > 0.0);
        CHECK(std::abs(reaction - conjugate) <= 1e-2 * std::abs(reaction));
    }
}
