#pragma once

#include "stretchopt/density/projection.hpp"
#include "stretchopt/fem/element.hpp"
#include "stretchopt/pbc/constraints.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <array>
#include <memory>
#include <optional>
#include <vector>

namespace stretchopt::fem {

using density::Grid;
using SparseMatrix = Eigen::SparseMatrix<double>;

struct SolverSettings {
    int n_load_steps = 15;
    /// Residual norm relative to the penalty force of the full load at u = 0.
    double newton_tol = 1e-8;
    int max_newton_iters = 25;
    double cutback_factor = 0.5;
    int max_cutbacks = 6;

    void validate() const;
};

enum class SolveStatus { converged, inverted, diverged, singular };

const char* to_string(SolveStatus s);

struct SolveResult {
    SolveStatus status = SolveStatus::converged;
    Eigen::VectorXd u;
    /// Internal force at u (without penalty contributions).
    Eigen::VectorXd f_int;
    /// Failure energy measure per element.
    Eigen::VectorXd element_energy;
    /// Residual norms of the final load increment.
    std::vector<double> residual_history;
    int newton_iterations = 0;
    int load_increments = 0;
    int cutbacks = 0;
    double final_relative_residual = 0.0;

    bool converged() const { return status == SolveStatus::converged; }
};

struct Assembly {
    double energy = 0.0;
    Eigen::VectorXd f_int;
    bool inverted = false;
};

/// Plane-strain bilinear-quad model of a unit cell with per-element
/// physical densities. Element tangents go straight into a fixed sparsity
/// pattern shared with the penalty matrix.
class FeModel {
public:
    FeModel(const Grid& grid, const Material& mat, const InterpolationParams& interp);

    const Grid& grid() const { return grid_; }
    const Material& material() const { return mat_; }
    const InterpolationParams& interpolation() const { return interp_; }
    const QuadGeometry& geometry() const { return geom_; }
    const Mat8& linear_element_stiffness() const { return K_lin_; }
    int num_dofs() const { return pbc::num_dofs(grid_); }

    void set_density(const Eigen::VectorXd& x);
    const Eigen::VectorXd& density() const { return density_; }

    std::array<int, 8> element_dofs(int e) const;
    Vec8 gather(const Eigen::VectorXd& u, int e) const;

    /// Interpolated energy and internal force.
    Assembly assemble(const Eigen::VectorXd& u) const;

    /// Interpolated energy, internal force and tangent K_t (no penalty).
    Assembly assemble(const Eigen::VectorXd& u, SparseMatrix& K_t) const;

    /// Failure measure per element: x^q * gamma * mean psi(gamma u_e), with
    /// psi the base-material energy density at the Gauss points. q = 0 counts
    /// every element above the interpolation threshold as base material.
    Eigen::VectorXd failure_energy(const Eigen::VectorXd& u) const;

    void set_failure_exponent(double q);
    double failure_exponent() const { return failure_q_; }

private:
    Grid grid_;
    Material mat_;
    InterpolationParams interp_;
    QuadGeometry geom_;
    Mat8 K_lin_;
    Eigen::VectorXd density_;
    double failure_q_ = 0.0;
};

/// Penalty-augmented tangent K_t + alpha A^T A on a pattern analyzed once.
class AugmentedSystem {
public:
    AugmentedSystem(const FeModel& model, const pbc::ConstraintSet& constraints);

    /// Assemble K* at u, factorize. Returns false if the factorization fails.
    bool factorize(const Eigen::VectorXd& u, Assembly* assembly = nullptr);
    /// Solve K* x = b with iterative refinement.
    Eigen::VectorXd solve(const Eigen::VectorXd& b, int refinement_steps = 2) const;

    const SparseMatrix& matrix() const { return K_; }
    const pbc::ConstraintSet& constraints() const { return constraints_; }
    /// Tangent without the penalty part from the last factorize().
    SparseMatrix stiffness_only() const;

private:
    const FeModel& model_;
    const pbc::ConstraintSet& constraints_;
    SparseMatrix K_;
    SparseMatrix P_;
    std::vector<std::array<int, 64>> element_slots_;
    std::vector<std::pair<int, double>> penalty_slots_;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt_;
    bool analyzed_ = false;
};

/// Penalty-augmented residual f_int + alpha A^T (A u - scale Q).
Eigen::VectorXd augmented_residual(const Eigen::VectorXd& f_int, const pbc::ConstraintSet& set,
                                   const Eigen::VectorXd& u, double scale);

/// Newton-Raphson with a ramped constraint target and halving cutbacks.
/// When initial_guess is given, a single full-load increment is tried first
/// from it before falling back to the ramp from zero.
SolveResult newton_solve(const FeModel& model, const pbc::ConstraintSet& constraints,
                         const SolverSettings& settings,
                         const std::optional<Eigen::VectorXd>& initial_guess = std::nullopt);

}  // namespace stretchopt::fem
