#include "stretchopt/opt/optimizer.hpp"

#include <doctest.h>

#include <random>

using namespace stretchopt;
using namespace stretchopt::opt;

namespace {

RunConfig small_config() {
    RunConfig cfg;
    cfg.nx = cfg.ny = 12;
    cfg.n_components = 2;
    cfg.warmstart = false;
    cfg.max_iterations = 4;
    return cfg;
}

double stddev(const Eigen::VectorXd& v) { return std::sqrt((v.array() - v.mean()).square().mean()); }

}  // namespace

TEST_CASE("design vector") {
    const auto comps = initial_layout(3, 4, 20, 10, 0.5, 2.5);
    DesignVector X = DesignVector::from_components(comps, 20, 10, 2, 3, 0.01);
    CHECK(X.size() == 3 * 12);
    CHECK(X.within_bounds());
    const auto back = X.components();
    REQUIRE(back.size() == 3);
    for (int k = 0; k < 3; ++k) {
        CHECK(back[k].control_points == comps[k].control_points);
        CHECK(back[k].rho_bar == 0.5);
        CHECK(back[k].w == 2.5);
    }
    CHECK(X.lower[X.layout.coord(0, 0, 0)] == 0.0);
    CHECK(X.upper[X.layout.coord(0, 0, 0)] == 20.0);
    CHECK(X.upper[X.layout.coord(0, 0, 1)] == 10.0);
    CHECK(X.lower[X.layout.rho_bar(1)] == 0.0);
    CHECK(X.upper[X.layout.rho_bar(1)] == 1.0);
    CHECK(X.lower[X.layout.width(2)] == 2.0);
    CHECK(X.upper[X.layout.width(2)] == 3.0);
    X.values[X.layout.width(2)] = 3.4;
    CHECK_FALSE(X.within_bounds());
    X.clamp();
    CHECK(X.values[X.layout.width(2)] == 3.0);
}

TEST_CASE("initial layout is reflection symmetric as a set") {
    const auto comps = initial_layout(16, 4, 40, 40);
    REQUIRE(comps.size() == 16);
    CHECK(initial_layout(15, 4, 40, 40).size() == 15);
    CHECK(initial_layout(20, 4, 40, 40)[16].control_points == comps[0].control_points);
    auto has = [&](Eigen::Vector2d a, Eigen::Vector2d b) {
        for (const auto& c : comps) {
            const auto& p = c.control_points;
            if (((p.front() - a).norm() < 1e-12 && (p.back() - b).norm() < 1e-12) ||
                ((p.front() - b).norm() < 1e-12 && (p.back() - a).norm() < 1e-12))
                return true;
        }
        return false;
    };
    for (const auto& c : comps) {
        const auto a = c.control_points.front(), b = c.control_points.back();
        CHECK(has({40 - a.x(), a.y()}, {40 - b.x(), b.y()}));
        CHECK(has({a.x(), 40 - a.y()}, {b.x(), 40 - b.y()}));
    }
}

TEST_CASE("MMA on the five-variable cantilever problem") {
    // min 0.0624 sum x  s.t.  61/x1^3 + 37/x2^3 + 19/x3^3 + 7/x4^3 + 1/x5^3 <= 1
    const Eigen::VectorXd c = (Eigen::VectorXd(5) << 61, 37, 19, 7, 1).finished();
    // Lagrange conditions give x_i proportional to c_i^(1/4).
    const double s = c.array().pow(0.25).sum();
    const Eigen::VectorXd x_ref = c.array().pow(0.25) * std::cbrt(s);
    const double f_ref = 0.0624 * x_ref.sum();
    CHECK(f_ref == doctest::Approx(1.33995646).epsilon(1e-6));

    Mma mma(5, 1, Eigen::VectorXd::Constant(5, 1.0), Eigen::VectorXd::Constant(5, 10.0));
    Eigen::VectorXd x = Eigen::VectorXd::Constant(5, 5.0);
    for (int k = 0; k < 100; ++k) {
        const Eigen::VectorXd df0 = Eigen::VectorXd::Constant(5, 0.0624);
        Eigen::VectorXd g(1);
        g[0] = (c.array() / x.array().cube()).sum() - 1.0;
        Eigen::MatrixXd dg(1, 5);
        dg.row(0) = (-3.0 * c.array() / x.array().pow(4)).matrix().transpose();
        x = mma.step(x, 0.0624 * x.sum(), df0, g, dg, 1.0);
    }
    CHECK(0.0624 * x.sum() == doctest::Approx(f_ref).epsilon(1e-3));
    CHECK((x - x_ref).lpNorm<Eigen::Infinity>() <= 1e-3 * x_ref.maxCoeff());
}

TEST_CASE("MMA step properties") {
    const int n = 8;
    const Eigen::VectorXd lo = Eigen::VectorXd::Zero(n), hi = Eigen::VectorXd::LinSpaced(n, 1.0, 8.0);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = u(rng) * hi[i];
    SUBCASE("zero gradients leave the design unchanged") {
        Mma mma(n, 1, lo, hi);
        Eigen::MatrixXd dg = Eigen::MatrixXd::Zero(1, n);
        const Eigen::VectorXd y =
            mma.step(x, 0.0, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Constant(1, -0.5), dg, 0.1);
        CHECK((y - x).lpNorm<Eigen::Infinity>() <= 1e-9);
    }
    SUBCASE("move limit and bounds hold exactly") {
        Mma mma(n, 2, lo, hi);
        for (int k = 0; k < 20; ++k) {
            Eigen::VectorXd df0(n);
            for (auto& v : df0) v = u(rng) - 0.5;
            Eigen::MatrixXd dg(2, n);
            for (int i = 0; i < dg.size(); ++i) dg.data()[i] = u(rng) - 0.3;
            const Eigen::VectorXd g = (Eigen::VectorXd(2) << u(rng) - 0.5, u(rng) - 0.5).finished();
            const Eigen::VectorXd y = mma.step(x, 0.0, df0, g, dg, 0.05);
            for (int i = 0; i < n; ++i) {
                CHECK(std::abs(y[i] - x[i]) <= 0.05 * hi[i]);
                CHECK(y[i] >= lo[i]);
                CHECK(y[i] <= hi[i]);
            }
            x = y;
        }
    }
}

TEST_CASE("mma_step reduces densities of an over-full design") {
    auto comps = initial_layout(2, 4, 12, 12, 1.0, 2.5);
    DesignVector X = DesignVector::from_components(comps, 12, 12, 2, 3, 0.01);
    OptState st(X, 1, 1.0);
    Eigen::VectorXd df0 = Eigen::VectorXd::Zero(X.size());
    Eigen::MatrixXd dg = Eigen::MatrixXd::Zero(1, X.size());
    for (int k = 0; k < 2; ++k) dg(0, X.layout.rho_bar(k)) = 0.4;
    const DesignVector next = mma_step(st, 0.0, df0, Eigen::VectorXd::Constant(1, 0.5), dg);
    for (int k = 0; k < 2; ++k) CHECK(next.values[X.layout.rho_bar(k)] < 1.0);
    CHECK(((next.values - X.values).cwiseQuotient(X.range())).lpNorm<Eigen::Infinity>() <= 0.01 + 1e-15);
}

TEST_CASE("density filter") {
    const density::Grid g(10, 8, 1.0);
    const DensityFilter f(g, 1.5);
    CHECK((f.apply(Eigen::VectorXd::Constant(80, 0.3)).array() - 0.3).abs().maxCoeff() <= 1e-15);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd a(80), b(80);
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    CHECK(std::abs(f.apply(a).dot(b) - a.dot(f.apply_transpose(b))) <= 1e-12);
}

TEST_CASE("connectivity check") {
    const density::Grid g(6, 6, 1.0);
    Eigen::VectorXd cross = Eigen::VectorXd::Zero(36);
    for (int i = 0; i < 6; ++i) cross[g.element(i, 2)] = cross[g.element(2, i)] = 1.0;
    CHECK(spans_cell(g, cross));
    Eigen::VectorXd band = Eigen::VectorXd::Zero(36);
    for (int i = 0; i < 6; ++i) band[g.element(i, 2)] = 1.0;
    CHECK_FALSE(spans_cell(g, band));
    CHECK_FALSE(spans_cell(g, Eigen::VectorXd::Zero(36)));
}

TEST_CASE("identification") {
    RunConfig cfg;
    cfg.nx = cfg.ny = 20;
    cfg.symmetric = false;
    cfg.identify_iterations = 150;
    SUBCASE("round trip from a known component set") {
        cfg.n_components = 2;
        std::vector<BezierComponent> truth = initial_layout(2, 4, 20, 20, 0.9, 2.4);
        truth[0].control_points[2].y() += 2.0;
        truth[1].control_points[1].x() -= 1.5;
        const DesignVector Xt = DesignVector::from_components(truth, 20, 20, 2, 3);
        const Eigen::VectorXd target = density::project_field(cfg.grid(), truth, cfg.projection()).rho_phys;
        auto start = truth;
        start[0].control_points[2].y() -= 2.5;
        start[0].control_points[3].x() += 1.0;
        start[1].control_points[1].x() += 1.5;
        start[0].rho_bar = start[1].rho_bar = 0.5;
        start[0].w = start[1].w = 2.5;
        const IdentifyResult r = identify_skeleton(cfg, target, DesignVector::from_components(start, 20, 20, 2, 3));
        CHECK_FALSE(r.fell_back);
        CHECK(r.residual_history.back() <= 0.01 * r.residual_history.front());
    }
    SUBCASE("all-zero target switches components off") {
        cfg.n_components = 3;
        const DesignVector X0 = DesignVector::from_components(initial_layout(3, 4, 20, 20), 20, 20, 2, 3);
        const IdentifyResult r = identify_skeleton(cfg, Eigen::VectorXd::Zero(400), X0);
        for (int k = 0; k < 3; ++k) CHECK(r.design.values[r.design.layout.rho_bar(k)] <= 0.05);
        CHECK(r.residual_history.back() < r.residual_history.front());
    }
    SUBCASE("fifteen components, residual decreases monotonically") {
        cfg.nx = cfg.ny = 40;
        cfg.n_components = 15;
        cfg.symmetric = true;
        cfg.identify_iterations = 30;
        Eigen::VectorXd target(1600);
        const density::Grid g = cfg.grid();
        for (int e = 0; e < 1600; ++e) {
            const auto c = g.centroid(e);
            target[e] = std::abs(c.y() - 20.0) < 5.0 || std::abs(c.x() - 20.0) < 3.0 ? 1.0 : 0.0;
        }
        const DesignVector X0 = DesignVector::from_components(initial_layout(15, 4, 40, 40), 40, 40, 2, 3);
        const IdentifyResult r = identify_skeleton(cfg, target, X0);
        REQUIRE(r.residual_history.size() > 2);
        for (std::size_t k = 1; k < r.residual_history.size(); ++k)
            CHECK(r.residual_history[k] < r.residual_history[k - 1]);
        CHECK(r.residual_history.back() < 0.5 * r.residual_history.front());
        CHECK(r.connected == r.warning.empty());
    }
    SUBCASE("target size mismatch") {
        cfg.n_components = 2;
        const DesignVector X0 = DesignVector::from_components(initial_layout(2, 4, 20, 20), 20, 20, 2, 3);
        CHECK_THROWS_AS(identify_skeleton(cfg, Eigen::VectorXd::Zero(10), X0), std::invalid_argument);
    }
}

TEST_CASE("warm start") {
    RunConfig cfg;
    cfg.nx = cfg.ny = 40;
    SUBCASE("one iteration stays near uniform") {
        const WarmStartResult w = simp_warmstart(cfg, 1);
        CHECK(std::abs(w.density.mean() - cfg.volume_fraction) <= 0.01);
        CHECK(stddev(w.density) <= 0.1);
    }
    SUBCASE("ten iterations develop a layout at the target volume") {
        const WarmStartResult w = simp_warmstart(cfg, 10);
        REQUIRE(w.history.size() == 10);
        for (const auto& r : w.history) CHECK(std::abs(r.volume_fraction - cfg.volume_fraction) <= 0.01);
        CHECK(std::abs(w.density.mean() - cfg.volume_fraction) <= 0.01);
        CHECK(stddev(w.density) >= 0.05);
        CHECK(w.u_bar == cfg.effective_u_bar());
        // symmetric under both reflections
        const density::Grid g = cfg.grid();
        for (int j = 0; j < 40; ++j)
            for (int i = 0; i < 40; ++i) {
                CHECK(w.density[g.element(i, j)] == w.density[g.element(39 - i, j)]);
                CHECK(w.density[g.element(i, j)] == w.density[g.element(i, 39 - j)]);
            }
    }
}

TEST_CASE("main loop bookkeeping") {
    SUBCASE("zero iterations") {
        RunConfig cfg = small_config();
        cfg.max_iterations = 0;
        const RunResult r = run(cfg);
        CHECK(r.history.empty());
        CHECK(r.design == r.initial);
        CHECK(r.design == initialize_design(cfg));
    }
    SUBCASE("short run") {
        RunConfig cfg = small_config();
        cfg.load = pbc::LoadKind::uniaxial;
        std::vector<IterationRecord> seen;
        const RunResult r = run(cfg, std::nullopt, [&](const IterationRecord& rec) { seen.push_back(rec); });
        REQUIRE(r.history.size() == 4);
        CHECK(seen.size() == 4);
        CHECK(r.status == RunStatus::max_iterations);
        for (std::size_t k = 0; k < r.history.size(); ++k) {
            CHECK(r.history[k].iteration == int(k));
            CHECK(r.history[k].max_change <= cfg.move_limit * (1 + 1e-12));
            CHECK_FALSE(r.history[k].rejected);
            CHECK(r.history[k].objective > 0.0);
        }
        CHECK(r.design.within_bounds());
        CHECK(r.has_final_eval);
    }
    SUBCASE("invalid config is rejected before any work") {
        RunConfig cfg = small_config();
        cfg.K = -1.0;
        CHECK_THROWS_AS(run(cfg), ConfigError);
    }
    SUBCASE("feasibility") {
        RunConfig cfg;
        CHECK(is_feasible(cfg, 0.304, 1.15));
        CHECK_FALSE(is_feasible(cfg, 0.306, 1.0));
        CHECK_FALSE(is_feasible(cfg, 0.3, 1.2));
        cfg.failure_constraint = false;
        CHECK(is_feasible(cfg, 0.3, 50.0));
    }
}
