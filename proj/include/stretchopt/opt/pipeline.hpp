#pragma once

#include "stretchopt/config.hpp"
#include "stretchopt/opt/design.hpp"
#include "stretchopt/opt/responses.hpp"

#include <optional>
#include <string>

namespace stretchopt::opt {

struct Evaluation {
    bool ok = false;
    std::string failure;
    density::DensityField field;  // projected and, if configured, symmetrized
    Eigen::VectorXd rho_fem;      // floored densities handed to the FE model
    Eigen::VectorXd mask;         // 1 where rho_fem is above the floor
    fem::SolveResult solve;
    double objective = 0.0;
    double volume_fraction = 0.0;
    EnergyConstraint energy;

    bool has_gradients = false;
    Eigen::VectorXd d_objective;  // w.r.t. the design vector
    Eigen::VectorXd d_volume;
    Eigen::VectorXd d_energy;     // of c * PN at fixed c
    Eigen::VectorXd d_objective_x;  // w.r.t. rho_fem
    Eigen::VectorXd d_energy_x;
    double adjoint_residual = 0.0;
    int singular_pairs = 0;

    ConstraintReport report() const;
};

/// Projection, symmetrization, nonlinear analysis, responses and adjoint
/// gradients for one load case.
class Pipeline {
public:
    explicit Pipeline(const RunConfig& cfg);
    Pipeline(const RunConfig& cfg, const pbc::LoadCase& load);

    const RunConfig& config() const { return cfg_; }
    const density::Grid& grid() const { return grid_; }
    const fem::FeModel& model() const { return model_; }
    const pbc::ConstraintSet& constraints() const { return constraints_; }
    const pbc::LoadCase& load() const { return load_; }
    const Eigen::VectorXd& loading() const { return l_; }
    const density::Symmetrizer* symmetrizer() const { return sym_ ? &*sym_ : nullptr; }

    /// Projected (and symmetrized) field of a design.
    density::DensityField project(const DesignVector& X) const;

    Evaluation evaluate(const DesignVector& X, double c, bool gradients,
                        const std::optional<Eigen::VectorXd>& guess = std::nullopt);

    /// Analysis of given element densities (already floored); gradients are
    /// w.r.t. those densities only.
    Evaluation evaluate_density(const Eigen::VectorXd& rho, double c, bool gradients,
                                const std::optional<Eigen::VectorXd>& guess = std::nullopt);

private:
    void analyze(Evaluation& ev, double c, bool gradients, const std::optional<Eigen::VectorXd>& guess);

    RunConfig cfg_;
    density::Grid grid_;
    pbc::LoadCase load_;
    std::optional<density::Symmetrizer> sym_;
    fem::FeModel model_;
    pbc::ConstraintSet constraints_;
    Eigen::VectorXd l_;
};

}  // namespace stretchopt::opt
