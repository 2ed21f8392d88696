#include "stretchopt/opt/optimizer.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>

namespace stretchopt::opt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

DensityFilter::DensityFilter(const density::Grid& grid, double radius) {
    const int ne = grid.num_elements();
    std::vector<Eigen::Triplet<double>> trip;
    const int reach = static_cast<int>(std::ceil(radius)) - 1;
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const int e = grid.element(i, j);
            if (radius <= 1.0) {
                trip.emplace_back(e, e, 1.0);
                continue;
            }
            double sum = 0.0;
            std::vector<std::pair<int, double>> row;
            for (int jj = std::max(0, j - reach); jj <= std::min(grid.ny - 1, j + reach); ++jj) {
                for (int ii = std::max(0, i - reach); ii <= std::min(grid.nx - 1, i + reach); ++ii) {
                    const double w = radius - std::hypot(ii - i, jj - j);
                    if (w <= 0.0) continue;
                    row.emplace_back(grid.element(ii, jj), w);
                    sum += w;
                }
            }
            for (const auto& [c, w] : row) trip.emplace_back(e, c, w / sum);
        }
    }
    H_.resize(ne, ne);
    H_.setFromTriplets(trip.begin(), trip.end());
}

VectorXd DensityFilter::apply(const VectorXd& x) const { return H_ * x; }
VectorXd DensityFilter::apply_transpose(const VectorXd& g) const { return H_.transpose() * g; }

// ---------------------------------------------------------------------------
// warm start

WarmStartResult simp_warmstart(const RunConfig& cfg, int iterations) {
    WarmStartResult out;
    const density::Grid grid = cfg.grid();
    const int ne = grid.num_elements();
    const DensityFilter filter(grid, cfg.warmstart_filter);
    std::optional<density::Symmetrizer> sym;
    if (cfg.symmetric) sym.emplace(grid);

    auto physical = [&](const VectorXd& x) {
        VectorXd r = filter.apply(x);
        return sym ? sym->apply(r) : r;
    };

    out.u_bar = cfg.effective_u_bar();
    auto pipeline = std::make_unique<Pipeline>(cfg, pbc::LoadCase{pbc::LoadKind::uniaxial, out.u_bar});
    // A uniform start is stationary under periodic loading; a soft spot at the
    // cell centre (and, by periodicity, the corners) breaks the tie.
    VectorXd x(ne);
    const double two_pi = 2.0 * std::acos(-1.0);
    for (int e = 0; e < ne; ++e) {
        const density::Point c = grid.centroid(e);
        const double wave = std::cos(two_pi * c.x() / grid.width()) * std::cos(two_pi * c.y() / grid.height());
        x[e] = std::clamp(cfg.volume_fraction * (1.0 - 0.25 * wave), 0.0, 1.0);
    }
    Mma mma(ne, 1, VectorXd::Zero(ne), VectorXd::Ones(ne));
    std::optional<VectorXd> guess;
    double f_scale = 0.0;
    bool reduced = false;
    double change = 0.0;

    for (int k = 0; k < iterations; ++k) {
        const VectorXd rho = physical(x);
        VectorXd mask;
        const VectorXd rho_fem = density::apply_floor(rho, cfg.rho_min, &mask);
        Evaluation ev = pipeline->evaluate_density(rho_fem, 1.0, true, guess);
        if (!ev.ok && !reduced) {
            reduced = true;
            out.u_bar *= 0.5;
            pipeline = std::make_unique<Pipeline>(cfg, pbc::LoadCase{pbc::LoadKind::uniaxial, out.u_bar});
            guess.reset();
            f_scale = 0.0;
            mma.reset_history();
            ev = pipeline->evaluate_density(rho_fem, 1.0, true, guess);
        }
        if (!ev.ok) break;
        guess = ev.solve.u;
        if (f_scale == 0.0) f_scale = std::max(std::abs(ev.objective), 1e-12);
        out.history.push_back({k, ev.objective, rho.mean(), change});

        auto pull_back = [&](const VectorXd& g) {
            VectorXd v = g;
            if (sym) v = sym->accumulate(v);
            return filter.apply_transpose(v);
        };
        const VectorXd df0 = -pull_back(ev.d_objective_x.cwiseProduct(mask)) / f_scale;
        VectorXd g(1);
        g[0] = rho.mean() / cfg.volume_fraction - 1.0;
        MatrixXd dg(1, ne);
        dg.row(0) = pull_back(VectorXd::Constant(ne, 1.0 / (ne * cfg.volume_fraction))).transpose();
        VectorXd x_new = mma.step(x, -ev.objective / f_scale, df0, g, dg, cfg.warmstart_move);
        // MMA's convex model of the linear volume keeps it feasible but can
        // leave it well short of the target; shift back within the move box.
        const VectorXd lo = (x.array() - cfg.warmstart_move).max(0.0);
        const VectorXd hi = (x.array() + cfg.warmstart_move).min(1.0);
        auto vol_at = [&](double eta) {
            return physical((x_new.array() + eta).max(lo.array()).min(hi.array()).matrix()).mean();
        };
        double a = -1.0, b = 1.0;
        for (int it = 0; it < 60; ++it) {
            const double m = 0.5 * (a + b);
            (vol_at(m) < cfg.volume_fraction ? a : b) = m;
        }
        x_new = (x_new.array() + 0.5 * (a + b)).max(lo.array()).min(hi.array()).matrix();
        change = (x_new - x).lpNorm<Eigen::Infinity>();
        x = x_new;
    }
    out.design = x;
    out.density = physical(x);
    return out;
}

// ---------------------------------------------------------------------------
// identification

bool spans_cell(const density::Grid& grid, const VectorXd& rho, double threshold) {
    const int ne = grid.num_elements();
    std::vector<int> label(static_cast<std::size_t>(ne), -1);
    int next = 0;
    for (int s = 0; s < ne; ++s) {
        if (label[static_cast<std::size_t>(s)] >= 0 || !(rho[s] > threshold)) continue;
        bool left = false, right = false, bottom = false, top = false;
        std::queue<int> q;
        q.push(s);
        label[static_cast<std::size_t>(s)] = next;
        while (!q.empty()) {
            const int e = q.front();
            q.pop();
            const int i = e % grid.nx, j = e / grid.nx;
            left |= i == 0;
            right |= i == grid.nx - 1;
            bottom |= j == 0;
            top |= j == grid.ny - 1;
            const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
            for (const auto& n : nb) {
                if (n[0] < 0 || n[0] >= grid.nx || n[1] < 0 || n[1] >= grid.ny) continue;
                const int f = grid.element(n[0], n[1]);
                if (label[static_cast<std::size_t>(f)] >= 0 || !(rho[f] > threshold)) continue;
                label[static_cast<std::size_t>(f)] = next;
                q.push(f);
            }
        }
        if (left && right && bottom && top) return true;
        ++next;
    }
    return false;
}

IdentifyResult identify_skeleton(const RunConfig& cfg, const VectorXd& target, const DesignVector& initial) {
    const density::Grid grid = cfg.grid();
    if (target.size() != grid.num_elements()) throw std::invalid_argument("identify_skeleton: target size mismatch");
    std::optional<density::Symmetrizer> sym;
    if (cfg.symmetric) sym.emplace(grid);
    const density::ProjectionParams pp = cfg.projection();

    struct Fit {
        VectorXd r;
        MatrixXd J;
        double cost = 0.0;
    };
    auto residual = [&](const DesignVector& X, bool jac) {
        Fit f;
        const auto comps = X.components();
        const density::DensityField raw = density::project_field(grid, comps, pp);
        f.r = (sym ? sym->apply(raw.rho_phys) : raw.rho_phys) - target;
        f.cost = f.r.squaredNorm();
        if (jac) {
            const MatrixXd Jr = density::field_sensitivity(raw, comps, pp).d_rho_phys;
            f.J = (sym ? sym->apply_rows(Jr) : Jr) * X.range().asDiagonal();
        }
        return f;
    };

    IdentifyResult out;
    out.design = initial;
    DesignVector X = initial;
    X.clamp();
    Fit cur = residual(X, true);
    out.residual_history.push_back(cur.cost);
    const VectorXd range = X.range();
    const DesignLayout& L = X.layout;
    std::vector<bool> is_density(static_cast<std::size_t>(X.size()), false);
    for (int k = 0; k < L.n_components; ++k) is_density[static_cast<std::size_t>(L.rho_bar(k))] = true;

    // Geometry first with the segment densities frozen: a full step from a
    // poorly placed layout otherwise switches every component off, where the
    // geometric gradients vanish.
    const int budget = cfg.identify_iterations;
    const int phase_one = budget / 3;
    double g0 = -1.0;
    double mu = 1.0;
    for (int it = 0; it < budget; ++it) {
        const bool freeze_density = it < phase_one;
        const VectorXd grad = cur.J.transpose() * cur.r;  // normalized variables
        std::vector<int> free;
        double pg = 0.0, pg_all = 0.0;
        for (int i = 0; i < X.size(); ++i) {
            const bool at_lo = X.values[i] <= X.lower[i] && grad[i] > 0.0;
            const bool at_hi = X.values[i] >= X.upper[i] && grad[i] < 0.0;
            if (at_lo || at_hi) continue;
            pg_all = std::max(pg_all, std::abs(grad[i]));
            if (freeze_density && is_density[static_cast<std::size_t>(i)]) continue;
            free.push_back(i);
            pg = std::max(pg, std::abs(grad[i]));
        }
        if (g0 < 0.0) g0 = pg_all;
        if (pg_all <= 1e-6 * g0) break;
        if (free.empty() || pg <= 1e-6 * g0) {
            if (freeze_density) {
                it = phase_one - 1;
                continue;
            }
            break;
        }

        const int nf = static_cast<int>(free.size());
        MatrixXd A(nf, nf);
        VectorXd b(nf);
        const MatrixXd JtJ = cur.J.transpose() * cur.J;
        for (int a = 0; a < nf; ++a) {
            b[a] = -grad[free[static_cast<std::size_t>(a)]];
            for (int c = 0; c < nf; ++c) A(a, c) = JtJ(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(c)]);
        }
        const VectorXd diag = A.diagonal().cwiseMax(1e-10 * std::max(A.diagonal().maxCoeff(), 1e-30));

        bool accepted = false;
        for (int tries = 0; tries < 20 && !accepted; ++tries) {
            MatrixXd M = A;
            M.diagonal() += mu * diag;
            const VectorXd dz = M.ldlt().solve(b);
            DesignVector trial = X;
            for (int a = 0; a < nf; ++a) {
                const int i = free[static_cast<std::size_t>(a)];
                trial.values[i] += dz[a] * range[i];
            }
            trial.clamp();
            const Fit f = residual(trial, false);
            if (std::isfinite(f.cost) && f.cost < cur.cost) {
                X = trial;
                cur = residual(X, true);
                out.residual_history.push_back(cur.cost);
                mu = std::max(mu / 3.0, 1e-9);
                accepted = true;
            } else {
                mu *= 4.0;
            }
        }
        if (!accepted) {
            if (freeze_density) {
                it = phase_one - 1;
                mu = 1.0;
                continue;
            }
            break;
        }
    }

    if (!std::isfinite(cur.cost) || cur.cost > out.residual_history.front()) {
        out.fell_back = true;
        out.warning = "identification diverged; keeping the initial layout";
        out.design = initial;
    } else {
        out.design = X;
    }
    const density::DensityField fitted = density::project_field(grid, out.design.components(), pp);
    const VectorXd rho = sym ? sym->apply(fitted.rho_phys) : fitted.rho_phys;
    out.connected = spans_cell(grid, rho);
    if (!out.connected && out.warning.empty())
        out.warning = "fitted skeleton does not span the cell above density 0.5";
    return out;
}

// ---------------------------------------------------------------------------
// main loop

OptState::OptState(const DesignVector& X, int n_constraints, double c0)
    : design(X), mma(X.size(), n_constraints, X.lower, X.upper), c(c0),
      move(VectorXd::Constant(X.size(), X.move_limit)) {}

DesignVector mma_step(OptState& state, double f0, const VectorXd& df0, const VectorXd& g, const MatrixXd& dg) {
    const double cap = state.design.move_limit;
    if (state.move.size() != state.design.size()) state.move = VectorXd::Constant(state.design.size(), cap);
    DesignVector next = state.design;
    next.values = state.mma.step(state.design.values, f0, df0, g, dg, state.move);
    next.clamp();
    // Variables that keep reversing get a shorter leash; MMA's own asymptotes
    // cannot close in below the move limit.
    const VectorXd step = next.values - state.design.values;
    if (state.last_step.size() == step.size()) {
        for (int i = 0; i < step.size(); ++i) {
            const double s = step[i] * state.last_step[i];
            if (s < 0.0) state.move[i] = std::max(0.7 * state.move[i], 0.1 * cap);
            else if (s > 0.0) state.move[i] = std::min(1.2 * state.move[i], cap);
        }
    }
    state.last_step = step;
    return next;
}

const char* to_string(RunStatus s) {
    switch (s) {
        case RunStatus::converged: return "converged";
        case RunStatus::max_iterations: return "max_iterations";
        case RunStatus::aborted: return "aborted";
    }
    return "?";
}

bool is_feasible(const RunConfig& cfg, double volume_fraction, double max_energy) {
    if (volume_fraction > cfg.volume_fraction + 0.005) return false;
    return !cfg.failure_constraint || max_energy <= 1.05 * cfg.energy_limit;
}

DesignVector initialize_design(const RunConfig& cfg, std::optional<WarmStartResult>* ws,
                               std::optional<IdentifyResult>* id) {
    const double W = cfg.nx * cfg.h, H = cfg.ny * cfg.h;
    auto comps = initial_layout(cfg.n_components, cfg.degree, W, H, 0.5, 0.5 * (cfg.w_min + cfg.w_max));
    if (cfg.layout_jitter > 0.0) {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        for (auto& c : comps)
            for (auto& p : c.control_points) {
                p.x() = std::clamp(p.x() + cfg.layout_jitter * cfg.h * U(rng), 0.0, W);
                p.y() = std::clamp(p.y() + cfg.layout_jitter * cfg.h * U(rng), 0.0, H);
            }
    }
    DesignVector X = DesignVector::from_components(comps, W, H, cfg.w_min, cfg.w_max, cfg.move_limit);
    if (!cfg.warmstart || cfg.warmstart_iterations == 0) return X;
    WarmStartResult w = simp_warmstart(cfg, cfg.warmstart_iterations);
    if (cfg.identify) {
        IdentifyResult r = identify_skeleton(cfg, w.density, X);
        // A skeleton that only percolates along x starts biaxial and shear runs
        // next to a mechanism; the lattice is a safer start there.
        if (r.connected || cfg.load == pbc::LoadKind::uniaxial) {
            X = r.design;
        } else {
            r.warning += "; starting from the lattice layout instead";
        }
        if (id) *id = std::move(r);
    }
    if (ws) *ws = std::move(w);
    return X;
}

RunResult run(const RunConfig& cfg, const std::optional<DesignVector>& initial,
              const IterationCallback& on_iteration) {
    cfg.validate();
    RunResult res;
    res.initial = initial ? *initial : initialize_design(cfg, &res.warmstart, &res.identification);
    res.design = res.initial;
    if (cfg.max_iterations == 0) return res;

    Pipeline pipeline(cfg);
    const int m = cfg.failure_constraint ? 2 : 1;
    OptState st(res.initial, m, cfg.c_init);
    st.design.move_limit = cfg.move_limit;
    st.move = VectorXd::Constant(st.design.size(), cfg.move_limit);
    DesignVector last_good = st.design;
    std::optional<VectorXd> guess;
    double change = 0.0;
    bool have_scale = false;
    Evaluation ev;
    // best feasible iterate, returned when the budget runs out
    std::optional<std::pair<DesignVector, Evaluation>> best;
    int best_iteration = -1;

    for (int it = 0; it < cfg.max_iterations; ++it) {
        st.iteration = it;
        ev = pipeline.evaluate(st.design, st.c, true, guess);
        IterationRecord rec;
        rec.iteration = it;
        rec.max_change = change;
        rec.c = st.c;
        rec.newton_iterations = ev.solve.newton_iterations;
        if (!ev.ok) {
            rec.rejected = true;
            st.history.push_back(rec);
            if (on_iteration) on_iteration(rec);
            if (++st.rejections >= cfg.max_rejections) {
                res.status = RunStatus::aborted;
                res.diagnostic = "analysis failed for " + std::to_string(st.rejections) +
                                 " consecutive designs (last: " + ev.failure + ")";
                break;
            }
            // Pull the design halfway back towards the last analysed one.
            DesignVector back = st.design;
            back.values = last_good.values + 0.5 * (st.design.values - last_good.values);
            change = ((back.values - st.design.values).cwiseQuotient(back.range())).lpNorm<Eigen::Infinity>();
            st.design = back;
            st.mma.reset_history();
            st.last_step.resize(0);
            continue;
        }
        st.rejections = 0;
        guess = ev.solve.u;
        if (!have_scale) {
            st.f_scale = std::max(std::abs(ev.objective), 1e-12);
            have_scale = true;
        }
        rec.objective = ev.objective;
        rec.volume_fraction = ev.volume_fraction;
        rec.max_element_energy = ev.energy.max_energy;
        rec.pnorm = ev.energy.g;
        rec.feasible = is_feasible(cfg, ev.volume_fraction, ev.energy.max_energy);
        st.history.push_back(rec);
        if (on_iteration) on_iteration(rec);
        if (rec.feasible && (!best || ev.objective > best->second.objective)) {
            best.emplace(st.design, ev);
            best_iteration = it;
        }

        st.quiet_iterations = (rec.feasible && it > 0 && change <= cfg.change_tol) ? st.quiet_iterations + 1 : 0;
        if (st.quiet_iterations >= cfg.converge_window) {
            st.converged = true;
            res.status = RunStatus::converged;
            break;
        }
        if (it + 1 == cfg.max_iterations) break;

        VectorXd g(m);
        MatrixXd dg(m, st.design.size());
        g[0] = ev.volume_fraction / cfg.volume_fraction - 1.0;
        dg.row(0) = ev.d_volume.transpose() / cfg.volume_fraction;
        if (m == 2) {
            g[1] = ev.energy.g - 1.0;
            dg.row(1) = ev.d_energy.transpose();
        }
        last_good = st.design;
        DesignVector next = mma_step(st, -ev.objective / st.f_scale, -ev.d_objective / st.f_scale, g, dg);
        change = ((next.values - st.design.values).cwiseQuotient(next.range())).lpNorm<Eigen::Infinity>();
        st.design = next;
        st.c = ev.energy.c_next;
    }

    res.design = st.design;
    res.history = st.history;
    if (ev.ok) {
        res.final_eval = std::move(ev);
        res.has_final_eval = true;
    }
    if (res.status == RunStatus::max_iterations && best &&
        (!res.has_final_eval || !res.history.back().feasible || best_iteration != res.history.back().iteration)) {
        res.design = best->first;
        res.final_eval = std::move(best->second);
        res.has_final_eval = true;
        res.incumbent_iteration = best_iteration;
    }
    return res;
}

}  // namespace stretchopt::opt
