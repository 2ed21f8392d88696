#include "oracles.hpp"
#include "stretchopt/fem/model.hpp"

#include <doctest.h>

#include <Eigen/Geometry>

#include <random>

using namespace stretchopt;
using namespace stretchopt::fem;

namespace {

const Material kMat{34.0, 5.8, 2000.0};

// Energy written out directly from the invariants, no shared code.
double psi_ref(const Eigen::Matrix3d& C, const Material& m) {
    const double I1 = C.trace(), I2 = (C * C).trace(), I3 = C.determinant();
    const double s = std::sqrt(I3) - 1.0;
    return m.A10 * (I1 * std::cbrt(1.0 / I3) - 3.0) + m.A01 * (I2 * std::pow(I3, -2.0 / 3.0) - 3.0) + 0.5 * m.K * s * s;
}

Eigen::Matrix3d sym_unit(int k, int l) {
    Eigen::Matrix3d E = Eigen::Matrix3d::Zero();
    E(k, l) += 0.5;
    E(l, k) += 0.5;
    return E;
}

Eigen::Matrix3d random_C(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    Eigen::Matrix3d F = Eigen::Matrix3d::Identity();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) F(i, j) += u(rng);
    return F.transpose() * F;
}

std::array<Eigen::Vector2d, 4> kNodes{Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 1),
                                      Eigen::Vector2d(0, 1)};

}  // namespace

TEST_CASE("deformation gradient") {
    const QuadGeometry g(1.0);
    CHECK(deformation_gradient(g, Vec8::Zero(), 0) == Eigen::Matrix2d::Identity());
    Vec8 u = Vec8::Zero();
    for (int a = 0; a < 4; ++a) u[2 * a] = 0.2 * kNodes[a].x();
    for (int gp = 0; gp < 4; ++gp) CHECK((deformation_gradient(g, u, gp) - Eigen::Vector2d(1.2, 1.0).asDiagonal().toDenseMatrix()).norm() <= 1e-14);

    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> r(-0.1, 0.1);
    for (int k = 0; k < 10; ++k) {
        for (auto& x : u) x = r(rng);
        for (int gp = 0; gp < 4; ++gp) {
            // x(xi) = sum N_a (X_a + u_a); dX/dxi = h/2 I
            auto map = [&](Eigen::Vector2d xi) {
                const Eigen::Vector4d N = g.shape(xi);
                Eigen::Vector2d x = Eigen::Vector2d::Zero();
                for (int a = 0; a < 4; ++a) x += N[a] * (kNodes[a] + u.segment<2>(2 * a));
                return x;
            };
            Eigen::Matrix2d F;
            const double h = 1e-6;
            for (int c = 0; c < 2; ++c) {
                Eigen::Vector2d dxi = Eigen::Vector2d::Zero();
                dxi[c] = h;
                F.col(c) = (map(g.gauss_xi[gp] + dxi) - map(g.gauss_xi[gp] - dxi)) / (2 * h) * 2.0;
            }
            CHECK((deformation_gradient(g, u, gp) - F).norm() / F.norm() <= 1e-8);
        }
    }
    for (int a = 0; a < 4; ++a) u[2 * a] = -2.0 * kNodes[a].x();
    CHECK_THROWS_AS(deformation_gradient(g, u, 0), ElementInversion);
}

TEST_CASE("invariants") {
    const Invariants id = invariants(Eigen::Matrix2d::Identity().eval());
    CHECK(id.I1 == 3.0);
    CHECK(id.I2 == 3.0);
    CHECK(id.I3 == 1.0);
    Eigen::Matrix2d F;
    F << 2, 0, 0, 1;
    const Invariants v = invariants(F);
    CHECK(v.I1 == 6.0);
    CHECK(v.I2 == 18.0);
    CHECK(v.I3 == 4.0);
    std::mt19937_64 rng(2);
    for (int k = 0; k < 20; ++k) {
        const Eigen::Matrix3d C = random_C(rng);
        const Invariants w = invariants(C);
        double cc = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) cc += C(i, j) * C(i, j);
        CHECK(std::abs(w.I1 - (C(0, 0) + C(1, 1) + C(2, 2))) <= 1e-12);
        CHECK(std::abs(w.I2 - cc) <= 1e-12 * cc);
        CHECK(std::abs(w.I3 - C.determinant()) <= 1e-12 * std::abs(C.determinant()));
    }
}

TEST_CASE("Mooney-Rivlin energy, stress and tangent") {
    CHECK(std::abs(mr_energy(Eigen::Matrix3d::Identity().eval(), kMat)) <= 1e-12);
    CHECK(mr_stress(Eigen::Matrix3d::Identity(), kMat).cwiseAbs().maxCoeff() <= 1e-10 * kMat.A10);
    std::mt19937_64 rng(5);
    for (int k = 0; k < 20; ++k) {
        const Eigen::Matrix3d C = random_C(rng);
        CHECK(mr_energy(C, kMat) == doctest::Approx(psi_ref(C, kMat)).epsilon(1e-12));
        const Eigen::Matrix3d S = mr_stress(C, kMat);
        const Tangent3 T = mr_tangent(C, kMat);
        const double h = 1e-7;
        Eigen::Matrix3d Sfd;
        double terr = 0.0, tnorm = 0.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                const Eigen::Matrix3d E = sym_unit(a, b);
                Sfd(a, b) = 2.0 * (psi_ref(C + h * E, kMat) - psi_ref(C - h * E, kMat)) / (2 * h);
                const Eigen::Matrix3d dS = 2.0 * (mr_stress(C + 1e-6 * E, kMat) - mr_stress(C - 1e-6 * E, kMat)) / 2e-6;
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) {
                        terr = std::max(terr, std::abs(T(3 * i + j, 3 * a + b) - dS(i, j)));
                        tnorm = std::max(tnorm, std::abs(T(3 * i + j, 3 * a + b)));
                        CHECK(T(3 * i + j, 3 * a + b) == doctest::Approx(T(3 * j + i, 3 * a + b)).epsilon(1e-12));
                        CHECK(T(3 * i + j, 3 * a + b) == doctest::Approx(T(3 * i + j, 3 * b + a)).epsilon(1e-12));
                    }
            }
        CHECK((S - Sfd).norm() / S.norm() <= 1e-5);
        CHECK(terr / tnorm <= 1e-4);
    }
}

TEST_CASE("frame indifference") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-0.2, 0.2), ang(0.0, 6.283185307179586);
    const QuadGeometry g(1.0);
    for (int k = 0; k < 20; ++k) {
        Eigen::Matrix2d F = Eigen::Matrix2d::Identity();
        for (int i = 0; i < 4; ++i) F(i / 2, i % 2) += u(rng);
        const Eigen::Matrix2d Q = Eigen::Rotation2Dd(ang(rng)).toRotationMatrix();
        const double a = mr_energy(invariants(F), kMat), b = mr_energy(invariants((Q * F).eval()), kMat);
        CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)));

        Vec8 ue, ur;
        for (auto& x : ue) x = u(rng) * 0.5;
        for (int n = 0; n < 4; ++n) ur.segment<2>(2 * n) = Q * (kNodes[n] + ue.segment<2>(2 * n)) - kNodes[n];
        const double e1 = nonlinear_element(g, kMat, ue, false).energy, e2 = nonlinear_element(g, kMat, ur, false).energy;
        CHECK(std::abs(e1 - e2) <= 1e-10 * std::max(1.0, std::abs(e1)));
    }
}

TEST_CASE("linearized moduli") {
    const LinearModuli m = linear_moduli(kMat);
    CHECK(m.shear == doctest::Approx(2 * 34.0 + 8 * 5.8));
    CHECK(m.bulk == 2000.0);
    // Second derivative of psi along a pure shear strain path recovers mu.
    const double e = 1e-4;
    Eigen::Matrix3d F = Eigen::Matrix3d::Identity();
    F(0, 1) = e;
    const double psi = psi_ref(F.transpose() * F, kMat);
    CHECK(psi == doctest::Approx(0.5 * m.shear * e * e).epsilon(1e-3));
}

TEST_CASE("energy interpolation") {
    const QuadGeometry g(1.0);
    const InterpolationParams ip;
    const Mat8 Kl = linear_stiffness(g, plane_strain_elasticity(linear_moduli(kMat)));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> r(-0.05, 0.05);
    Vec8 u;
    for (auto& x : u) x = r(rng);

    CHECK(std::abs(gamma_factor(1.0, ip) - 1.0) <= 1e-6);
    const InterpolatedResponse solid = interpolated_element(g, kMat, Kl, ip, u, 1.0);
    CHECK(solid.energy == doctest::Approx(nonlinear_element(g, kMat, u).energy).epsilon(1e-6));

    CHECK(gamma_factor(0.001, ip) <= 1e-3);
    const InterpolatedResponse thin = interpolated_element(g, kMat, Kl, ip, u, 0.001);
    const double lin = 0.5 * u.dot(Kl * u);
    CHECK(thin.energy == doctest::Approx(lin * energy_scale(0.001, ip)).epsilon(1e-3));
    CHECK(energy_scale(0.0, ip) == ip.eps);
    CHECK(energy_scale(1.0, ip) == 1.0);

    for (double x : {0.005, 0.0102, 0.3, 1.0}) {
        const InterpolatedResponse e = interpolated_element(g, kMat, Kl, ip, u, x, true, true);
        Vec8 fd;
        for (int i = 0; i < 8; ++i) {
            Vec8 up = u, um = u;
            up[i] += 1e-7;
            um[i] -= 1e-7;
            fd[i] = (interpolated_element(g, kMat, Kl, ip, up, x, false).energy -
                     interpolated_element(g, kMat, Kl, ip, um, x, false).energy) / 2e-7;
        }
        CHECK((e.force - fd).norm() / fd.norm() <= 1e-5);
        const double hx = 1e-7 * std::max(x, 1e-3);
        const Vec8 fdx = (interpolated_element(g, kMat, Kl, ip, u, x + hx, false).force -
                          interpolated_element(g, kMat, Kl, ip, u, x - hx, false).force) / (2 * hx);
        CHECK((e.force_density_derivative - fdx).norm() / std::max(fdx.norm(), 1e-12) <= 1e-4);
    }
}

TEST_CASE("assembled force and tangent on a 4x4 mesh") {
    const Grid grid(4, 4, 1.0);
    FeModel model(grid, kMat, InterpolationParams{});
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> d(0.0, 1.0), r(-0.08, 0.08);
    for (int trial = 0; trial < 3; ++trial) {
        Eigen::VectorXd x(16);
        for (auto& v : x) v = 0.005 + 0.995 * d(rng);
        x[3] = 0.0101;  // inside the gamma transition
        model.set_density(x);
        Eigen::VectorXd u(model.num_dofs());
        for (auto& v : u) v = r(rng);
        SparseMatrix K;
        const Assembly a = model.assemble(u, K);
        CHECK(!a.inverted);
        Eigen::VectorXd fd(u.size());
        Eigen::MatrixXd Kfd(u.size(), u.size());
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            Eigen::VectorXd up = u, um = u;
            up[i] += 1e-6;
            um[i] -= 1e-6;
            const Assembly ap = model.assemble(up), am = model.assemble(um);
            fd[i] = (ap.energy - am.energy) / 2e-6;
            Kfd.col(i) = (ap.f_int - am.f_int) / 2e-6;
        }
        CHECK((a.f_int - fd).norm() / fd.norm() <= 1e-5);
        const Eigen::MatrixXd Kd(K);
        CHECK((Kd - Kfd).norm() / Kd.norm() <= 1e-4);
        CHECK((Kd - Kd.transpose()).norm() <= 1e-10 * Kd.norm());
    }
}

TEST_CASE("newton: zero load") {
    const Grid grid(4, 4, 1.0);
    FeModel model(grid, kMat, InterpolationParams{});
    model.set_density(Eigen::VectorXd::Constant(16, 0.7));
    const auto cs = pbc::build_constraints(grid, {pbc::LoadKind::uniaxial, 0.0});
    const SolveResult r = newton_solve(model, cs, SolverSettings{});
    REQUIRE(r.converged());
    CHECK(r.u.cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.element_energy.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("newton: single element under homogeneous stretch") {
    const Grid grid(1, 1, 1.0);
    FeModel model(grid, kMat, InterpolationParams{});
    model.set_failure_exponent(0.0);
    model.set_density(Eigen::VectorXd::Ones(1));
    const double lam = 1.1;
    // nodes (0,0) (1,0) (0,1) (1,1); u_x = (lam - 1) X, y fixed on the bottom, free on top
    const auto cs = pbc::dirichlet_constraints(
        8, {{0, 0.0}, {1, 0.0}, {2, lam - 1.0}, {3, 0.0}, {4, 0.0}, {6, lam - 1.0}}, 1e10);
    SolverSettings st;
    st.n_load_steps = 4;
    const SolveResult r = newton_solve(model, cs, st);
    REQUIRE(r.converged());
    // transverse stretch minimizing psi(diag(lam, s, 1)) by golden section
    auto f = [&](double s) { return psi_ref(Eigen::Vector3d(lam * lam, s * s, 1.0).asDiagonal().toDenseMatrix(), kMat); };
    double a = 0.8, b = 1.2;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int k = 0; k < 200; ++k) {
        const double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        if (f(x1) <= f(x2)) b = x2; else a = x1;
    }
    const double s = 0.5 * (a + b);
    CHECK(r.u[5] == doctest::Approx(s - 1.0).epsilon(1e-6));
    CHECK(r.u[7] == doctest::Approx(s - 1.0).epsilon(1e-6));
    CHECK(r.element_energy[0] == doctest::Approx(f(s)).epsilon(1e-6));
}

TEST_CASE("newton: quadratic convergence near the solution") {
    const Grid grid(4, 4, 1.0);
    FeModel model(grid, kMat, InterpolationParams{});
    model.set_density(Eigen::VectorXd::Ones(16));
    // moderate penalty keeps the rounding floor (~ alpha * eps) below the
    // last quadratic steps
    const auto cs = pbc::build_constraints(grid, {pbc::LoadKind::uniaxial, 0.6}, 1e5);
    SolverSettings st;
    st.n_load_steps = 1;
    st.newton_tol = 1e-15;
    const SolveResult r = newton_solve(model, cs, st);
    REQUIRE(r.converged());
    const auto& h = r.residual_history;
    // order estimate from the last three residuals clear of the rounding floor
    std::vector<double> clean;
    for (double v : h)
        if (v > 1e-13) clean.push_back(v);
    REQUIRE(clean.size() >= 3);
    const std::size_t n = clean.size();
    const double r0 = clean[n - 3], r1 = clean[n - 2], r2 = clean[n - 1];
    CHECK(r2 <= 10.0 * (r1 / (r0 * r0)) * r1 * r1);
    CHECK(std::log(r2 / r1) / std::log(r1 / r0) >= 1.6);
}

TEST_CASE("solver settings validation") {
    SolverSettings s;
    s.newton_tol = 0.5;
    CHECK_THROWS(s.validate());
    s = {};
    s.n_load_steps = 0;
    CHECK_THROWS(s.validate());
    Material m;
    m.K = -1.0;
    CHECK_THROWS(m.validate());
}
