#include "stretchopt/fem/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace stretchopt::fem {

void SolverSettings::validate() const {
    if (n_load_steps < 1) throw std::invalid_argument("SolverSettings: n_load_steps must be >= 1");
    if (!(newton_tol > 0.0 && newton_tol <= 1e-2))
        throw std::invalid_argument("SolverSettings: newton_tol must lie in (0, 1e-2]");
    if (max_newton_iters < 1) throw std::invalid_argument("SolverSettings: max_newton_iters must be >= 1");
    if (!(cutback_factor > 0.0 && cutback_factor < 1.0))
        throw std::invalid_argument("SolverSettings: cutback_factor must lie in (0, 1)");
}

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::inverted: return "element inversion";
        case SolveStatus::diverged: return "no convergence";
        case SolveStatus::singular: return "singular tangent";
    }
    return "unknown";
}

FeModel::FeModel(const Grid& grid, const Material& mat, const InterpolationParams& interp)
    : grid_(grid), mat_(mat), interp_(interp), geom_(grid.h) {
    mat_.validate();
    K_lin_ = linear_stiffness(geom_, plane_strain_elasticity(linear_moduli(mat_)));
    density_ = Eigen::VectorXd::Ones(grid_.num_elements());
}

void FeModel::set_density(const Eigen::VectorXd& x) {
    if (x.size() != grid_.num_elements()) throw std::invalid_argument("FeModel: density size mismatch");
    for (Eigen::Index e = 0; e < x.size(); ++e)
        if (!(x[e] > 0.0 && x[e] <= 1.0))
            throw std::invalid_argument("FeModel: element density outside (0, 1]");
    density_ = x;
}

void FeModel::set_failure_exponent(double q) {
    if (!(q >= 0.0)) throw std::invalid_argument("FeModel: failure exponent must be non-negative");
    failure_q_ = q;
}

std::array<int, 8> FeModel::element_dofs(int e) const {
    const int i = e % grid_.nx;
    const int j = e / grid_.nx;
    const int nodes[4] = {pbc::node_index(grid_, i, j), pbc::node_index(grid_, i + 1, j),
                          pbc::node_index(grid_, i + 1, j + 1), pbc::node_index(grid_, i, j + 1)};
    std::array<int, 8> d{};
    for (int a = 0; a < 4; ++a) {
        d[2 * a] = 2 * nodes[a];
        d[2 * a + 1] = 2 * nodes[a] + 1;
    }
    return d;
}

Vec8 FeModel::gather(const Eigen::VectorXd& u, int e) const {
    const auto d = element_dofs(e);
    Vec8 ue;
    for (int k = 0; k < 8; ++k) ue[k] = u[d[k]];
    return ue;
}

Assembly FeModel::assemble(const Eigen::VectorXd& u) const {
    Assembly a;
    a.f_int = Eigen::VectorXd::Zero(num_dofs());
    for (int e = 0; e < grid_.num_elements(); ++e) {
        const auto r = interpolated_element(geom_, mat_, K_lin_, interp_, gather(u, e), density_[e], false);
        if (r.inverted) {
            a.inverted = true;
            return a;
        }
        a.energy += r.energy;
        const auto d = element_dofs(e);
        for (int k = 0; k < 8; ++k) a.f_int[d[k]] += r.force[k];
    }
    return a;
}

Assembly FeModel::assemble(const Eigen::VectorXd& u, SparseMatrix& K_t) const {
    Assembly a;
    a.f_int = Eigen::VectorXd::Zero(num_dofs());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(grid_.num_elements()) * 64);
    for (int e = 0; e < grid_.num_elements(); ++e) {
        const auto r = interpolated_element(geom_, mat_, K_lin_, interp_, gather(u, e), density_[e], true);
        if (r.inverted) {
            a.inverted = true;
            return a;
        }
        a.energy += r.energy;
        const auto d = element_dofs(e);
        for (int k = 0; k < 8; ++k) {
            a.f_int[d[k]] += r.force[k];
            for (int m = 0; m < 8; ++m) trip.emplace_back(d[k], d[m], r.stiffness(k, m));
        }
    }
    K_t.resize(num_dofs(), num_dofs());
    K_t.setFromTriplets(trip.begin(), trip.end());
    return a;
}

Eigen::VectorXd FeModel::failure_energy(const Eigen::VectorXd& u) const {
    Eigen::VectorXd E = Eigen::VectorXd::Zero(grid_.num_elements());
    for (int e = 0; e < grid_.num_elements(); ++e) {
        const double g = gamma_factor(density_[e], interp_);
        if (g < 1e-8) continue;
        const EnergyDensity ed = mean_energy_density(geom_, mat_, g * gather(u, e));
        const double w = failure_q_ == 0.0 ? 1.0 : std::pow(density_[e], failure_q_);
        E[e] = ed.inverted ? std::numeric_limits<double>::quiet_NaN() : w * g * ed.mean;
    }
    return E;
}

namespace {

int find_slot(const SparseMatrix& M, int row, int col) {
    const int* inner = M.innerIndexPtr();
    const int begin = M.outerIndexPtr()[col];
    const int end = M.outerIndexPtr()[col + 1];
    const int* it = std::lower_bound(inner + begin, inner + end, row);
    if (it == inner + end || *it != row) throw std::logic_error("AugmentedSystem: missing pattern entry");
    return static_cast<int>(it - inner);
}

}  // namespace

AugmentedSystem::AugmentedSystem(const FeModel& model, const pbc::ConstraintSet& constraints)
    : model_(model), constraints_(constraints) {
    const int n = model.num_dofs();
    if (constraints.rows() > 0 && constraints.A.cols() != n)
        throw std::invalid_argument("AugmentedSystem: constraint width does not match the model");
    P_ = constraints.rows() > 0 ? constraints.penalty_matrix() : SparseMatrix(n, n);
    std::vector<Eigen::Triplet<double>> trip;
    const int ne = model.grid().num_elements();
    for (int e = 0; e < ne; ++e) {
        const auto d = model.element_dofs(e);
        for (int k = 0; k < 8; ++k)
            for (int m = 0; m < 8; ++m) trip.emplace_back(d[k], d[m], 1.0);
    }
    for (int c = 0; c < P_.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(P_, c); it; ++it) trip.emplace_back(it.row(), it.col(), 1.0);
    K_.resize(n, n);
    K_.setFromTriplets(trip.begin(), trip.end());
    K_.makeCompressed();

    element_slots_.resize(ne);
    for (int e = 0; e < ne; ++e) {
        const auto d = model.element_dofs(e);
        for (int k = 0; k < 8; ++k)
            for (int m = 0; m < 8; ++m) element_slots_[e][8 * m + k] = find_slot(K_, d[k], d[m]);
    }
    for (int c = 0; c < P_.outerSize(); ++c)
        for (SparseMatrix::InnerIterator it(P_, c); it; ++it)
            penalty_slots_.emplace_back(find_slot(K_, static_cast<int>(it.row()), static_cast<int>(it.col())),
                                        it.value());
}

bool AugmentedSystem::factorize(const Eigen::VectorXd& u, Assembly* assembly) {
    double* values = K_.valuePtr();
    std::fill(values, values + K_.nonZeros(), 0.0);
    Assembly a;
    a.f_int = Eigen::VectorXd::Zero(model_.num_dofs());
    const int ne = model_.grid().num_elements();
    for (int e = 0; e < ne; ++e) {
        const auto r = interpolated_element(model_.geometry(), model_.material(),
                                            model_.linear_element_stiffness(), model_.interpolation(),
                                            model_.gather(u, e), model_.density()[e], true);
        if (r.inverted) {
            a.inverted = true;
            if (assembly) *assembly = std::move(a);
            return false;
        }
        a.energy += r.energy;
        const auto d = model_.element_dofs(e);
        for (int k = 0; k < 8; ++k) a.f_int[d[k]] += r.force[k];
        const auto& slots = element_slots_[e];
        for (int m = 0; m < 8; ++m)
            for (int k = 0; k < 8; ++k) values[slots[8 * m + k]] += r.stiffness(k, m);
    }
    for (const auto& [slot, v] : penalty_slots_) values[slot] += v;
    if (assembly) *assembly = std::move(a);

    if (!analyzed_) {
        ldlt_.analyzePattern(K_);
        analyzed_ = true;
    }
    ldlt_.factorize(K_);
    if (ldlt_.info() != Eigen::Success) return false;
    const auto& D = ldlt_.vectorD();
    for (Eigen::Index i = 0; i < D.size(); ++i)
        if (!std::isfinite(D[i]) || D[i] == 0.0) return false;
    return true;
}

Eigen::VectorXd AugmentedSystem::solve(const Eigen::VectorXd& b, int refinement_steps) const {
    Eigen::VectorXd x = ldlt_.solve(b);
    for (int k = 0; k < refinement_steps; ++k) {
        const Eigen::VectorXd r = b - K_ * x;
        x += ldlt_.solve(r);
    }
    return x;
}

SparseMatrix AugmentedSystem::stiffness_only() const {
    SparseMatrix K = K_ - P_;
    return K;
}

Eigen::VectorXd augmented_residual(const Eigen::VectorXd& f_int, const pbc::ConstraintSet& set,
                                   const Eigen::VectorXd& u, double scale) {
    if (set.rows() == 0) return f_int;
    return f_int + set.alpha * (set.A.transpose() * set.violation(u, scale));
}

namespace {

struct IncrementOutcome {
    SolveStatus status = SolveStatus::converged;
    Eigen::VectorXd u;
    Eigen::VectorXd f_int;
    std::vector<double> history;
    int iterations = 0;
    double rel = 0.0;
};

IncrementOutcome run_increment(AugmentedSystem& sys, const pbc::ConstraintSet& set,
                               Eigen::VectorXd u, double scale, double force_ref,
                               const SolverSettings& st) {
    IncrementOutcome out;
    double first = 0.0;
    for (int it = 0; it <= st.max_newton_iters; ++it) {
        Assembly a;
        const bool ok = sys.factorize(u, &a);
        ++out.iterations;
        if (a.inverted) {
            out.status = SolveStatus::inverted;
            return out;
        }
        const Eigen::VectorXd pen = set.rows() > 0
                                        ? Eigen::VectorXd(set.alpha * (set.A.transpose() * set.violation(u, scale)))
                                        : Eigen::VectorXd::Zero(u.size());
        const Eigen::VectorXd r = a.f_int + pen;
        const double ref = std::max(a.f_int.norm() + pen.norm(), 1e-16 * force_ref);
        const double rel = r.norm() / ref;
        // Rounding of u alone leaves alpha * ulp(u) in every penalized row.
        const double noise = set.rows() > 0 ? 8.0 * set.alpha * std::numeric_limits<double>::epsilon() *
                                                  std::max(u.lpNorm<Eigen::Infinity>(), 1.0) *
                                                  std::sqrt(static_cast<double>(set.rows()))
                                            : 0.0;
        out.history.push_back(rel);
        out.rel = rel;
        if (!std::isfinite(rel)) {
            out.status = SolveStatus::diverged;
            return out;
        }
        if (it == 0) first = rel;
        if (rel <= st.newton_tol || r.norm() <= noise) {
            out.status = SolveStatus::converged;
            out.u = std::move(u);
            out.f_int = std::move(a.f_int);
            return out;
        }
        if (it == st.max_newton_iters || rel > 1e6 * std::max(first, st.newton_tol)) break;
        if (!ok) {
            out.status = SolveStatus::singular;
            return out;
        }
        u -= sys.solve(r, 0);
    }
    out.status = SolveStatus::diverged;
    return out;
}

}  // namespace

SolveResult newton_solve(const FeModel& model, const pbc::ConstraintSet& constraints,
                         const SolverSettings& settings,
                         const std::optional<Eigen::VectorXd>& initial_guess) {
    settings.validate();
    const int n = model.num_dofs();
    AugmentedSystem sys(model, constraints);
    double force_ref = constraints.rows() > 0
                           ? constraints.alpha * (constraints.A.transpose() * constraints.Q).norm()
                           : 0.0;
    if (!(force_ref > 0.0)) force_ref = 1.0;

    SolveResult res;
    auto finish = [&](IncrementOutcome&& inc) {
        res.status = SolveStatus::converged;
        res.u = std::move(inc.u);
        res.f_int = std::move(inc.f_int);
        res.residual_history = std::move(inc.history);
        res.final_relative_residual = inc.rel;
        res.element_energy = model.failure_energy(res.u);
        return res;
    };

    if (initial_guess) {
        if (initial_guess->size() != n) throw std::invalid_argument("newton_solve: initial guess size mismatch");
        IncrementOutcome inc = run_increment(sys, constraints, *initial_guess, 1.0, force_ref, settings);
        res.newton_iterations += inc.iterations;
        ++res.load_increments;
        if (inc.status == SolveStatus::converged) return finish(std::move(inc));
    }

    const double nominal = 1.0 / settings.n_load_steps;
    const double min_step = nominal * std::pow(settings.cutback_factor, settings.max_cutbacks);
    double s = 0.0;
    double ds = nominal;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd u_prev = u;
    double last_ds = 0.0;
    IncrementOutcome last;
    last.u = u;
    last.f_int = Eigen::VectorXd::Zero(n);
    SolveStatus last_failure = SolveStatus::diverged;
    bool any = false;
    while (s < 1.0) {
        const double target = s + ds > 1.0 - 1e-9 ? 1.0 : s + ds;
        const double step = target - s;
        Eigen::VectorXd guess = u;
        if (last_ds > 0.0) guess += (u - u_prev) * (step / last_ds);
        IncrementOutcome inc = run_increment(sys, constraints, guess, target, force_ref, settings);
        res.newton_iterations += inc.iterations;
        ++res.load_increments;
        if (inc.status == SolveStatus::converged) {
            u_prev = u;
            u = inc.u;
            last_ds = step;
            s = target;
            last = std::move(inc);
            any = true;
            ds = std::min(nominal, ds / settings.cutback_factor);
            continue;
        }
        last_failure = inc.status;
        ds *= settings.cutback_factor;
        ++res.cutbacks;
        if (ds < min_step * (1.0 - 1e-12)) {
            res.status = last_failure;
            res.u = u;
            res.f_int = any ? last.f_int : Eigen::VectorXd::Zero(n);
            res.residual_history = std::move(inc.history);
            res.final_relative_residual = inc.rel;
            return res;
        }
    }
    if (!any) {
        // Zero load: u = 0 is the solution.
        last = run_increment(sys, constraints, u, 1.0, force_ref, settings);
        if (last.status != SolveStatus::converged) {
            res.status = last.status;
            res.u = u;
            return res;
        }
    }
    return finish(std::move(last));
}

}  // namespace stretchopt::fem
