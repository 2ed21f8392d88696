#include "stretchopt/opt/pipeline.hpp"

#include "stretchopt/opt/adjoint.hpp"

namespace stretchopt::opt {

ConstraintReport Evaluation::report() const {
    ConstraintReport r;
    r.objective = objective;
    r.volume_fraction = volume_fraction;
    r.pnorm_energy = energy.g;
    r.max_element_energy = energy.max_energy;
    r.c = energy.c;
    return r;
}

Pipeline::Pipeline(const RunConfig& cfg) : Pipeline(cfg, cfg.load_case()) {}

Pipeline::Pipeline(const RunConfig& cfg, const pbc::LoadCase& load)
    : cfg_(cfg),
      grid_(cfg.grid()),
      load_(load),
      model_(grid_, cfg.material(), cfg.interpolation()),
      constraints_(pbc::build_constraints(grid_, load, cfg.alpha)),
      l_(pbc::loading_vector(grid_, load.kind)) {
    cfg_.validate();
    model_.set_failure_exponent(cfg.failure_exponent);
    if (cfg.symmetric) sym_.emplace(grid_);
}

density::DensityField Pipeline::project(const DesignVector& X) const {
    const auto comps = X.components();
    density::DensityField f = density::project_field(grid_, comps, cfg_.projection());
    return sym_ ? density::symmetrize(f, *sym_) : f;
}

Evaluation Pipeline::evaluate(const DesignVector& X, double c, bool gradients,
                              const std::optional<Eigen::VectorXd>& guess) {
    Evaluation ev;
    const auto comps = X.components();
    const density::DensityField raw = density::project_field(grid_, comps, cfg_.projection());
    ev.field = sym_ ? density::symmetrize(raw, *sym_) : raw;
    ev.rho_fem = density::apply_floor(ev.field.rho_phys, cfg_.rho_min, &ev.mask);
    ev.volume_fraction = ev.field.rho_phys.mean();
    analyze(ev, c, gradients, guess);
    if (!ev.ok || !gradients) return ev;

    const density::FieldJacobian J = density::field_sensitivity(raw, comps, cfg_.projection());
    ev.singular_pairs = J.singular_pairs;
    const density::Symmetrizer* S = symmetrizer();
    ev.d_objective = chain_to_geometry(ev.d_objective_x, ev.mask, S, J.d_rho_phys);
    ev.d_energy = chain_to_geometry(ev.d_energy_x, ev.mask, S, J.d_rho_phys);
    const Eigen::VectorXd dv = Eigen::VectorXd::Constant(grid_.num_elements(), 1.0 / grid_.num_elements());
    ev.d_volume = chain_to_geometry(dv, Eigen::VectorXd(), S, J.d_rho_phys);
    return ev;
}

Evaluation Pipeline::evaluate_density(const Eigen::VectorXd& rho, double c, bool gradients,
                                      const std::optional<Eigen::VectorXd>& guess) {
    if (rho.size() != grid_.num_elements()) throw std::invalid_argument("evaluate_density: size mismatch");
    Evaluation ev;
    ev.rho_fem = rho;
    ev.mask = Eigen::VectorXd::Ones(rho.size());
    ev.volume_fraction = rho.mean();
    analyze(ev, c, gradients, guess);
    return ev;
}

void Pipeline::analyze(Evaluation& ev, double c, bool gradients, const std::optional<Eigen::VectorXd>& guess) {
    model_.set_density(ev.rho_fem);
    ev.solve = fem::newton_solve(model_, constraints_, cfg_.solver, guess);
    if (!ev.solve.converged()) {
        ev.failure = fem::to_string(ev.solve.status);
        return;
    }
    ev.objective = reaction_objective(ev.solve, l_);
    ev.energy = energy_pnorm_constraint(ev.solve.element_energy, cfg_.energy_limit, cfg_.energy_p, c, cfg_.c_eta);
    ev.ok = true;
    if (!gradients) return;
    try {
        AdjointSystem sys(model_, constraints_, ev.solve.u);
        double r1 = 0.0, r2 = 0.0;
        ev.d_objective_x = density_gradient(sys, objective_derivatives(sys, model_, l_), &r1);
        const Eigen::VectorXd dgdE =
            c * mean_pnorm_gradient(ev.solve.element_energy, cfg_.energy_limit, cfg_.energy_p);
        ev.d_energy_x = density_gradient(sys, energy_derivatives(model_, ev.solve.u, dgdE), &r2);
        ev.adjoint_residual = std::max(r1, r2);
        ev.has_gradients = true;
    } catch (const AdjointFailure& e) {
        ev.ok = false;
        ev.failure = e.what();
    }
}

}  // namespace stretchopt::opt
