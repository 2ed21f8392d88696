#pragma once

#include "stretchopt/config.hpp"
#include "stretchopt/opt/design.hpp"
#include "stretchopt/opt/mma.hpp"
#include "stretchopt/opt/pipeline.hpp"

#include <functional>
#include <string>
#include <vector>

namespace stretchopt::opt {

class OptimizationAborted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Linear cone filter with radius r (in elements) on a structured grid.
class DensityFilter {
public:
    DensityFilter(const density::Grid& grid, double radius);
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    Eigen::VectorXd apply_transpose(const Eigen::VectorXd& g) const;

private:
    Eigen::SparseMatrix<double, Eigen::RowMajor> H_;
};

struct WarmStartRecord {
    int iteration = 0;
    double objective = 0.0;
    double volume_fraction = 0.0;
    double max_change = 0.0;
};

struct WarmStartResult {
    Eigen::VectorXd density;  // physical, filtered and symmetrized
    Eigen::VectorXd design;   // raw MMA variables
    std::vector<WarmStartRecord> history;
    double u_bar = 0.0;       // load actually used
};

/// Density-based stiffness maximization under the volume constraint for a
/// fixed iteration budget, always with the uniaxial load.
WarmStartResult simp_warmstart(const RunConfig& cfg, int iterations);

struct IdentifyResult {
    DesignVector design;
    std::vector<double> residual_history;  // accepted steps, starting with the initial fit
    bool connected = true;
    bool fell_back = false;
    std::string warning;
};

/// Bound-constrained least squares fit of the projected field to a target
/// density with projected Levenberg-Marquardt steps.
IdentifyResult identify_skeleton(const RunConfig& cfg, const Eigen::VectorXd& target,
                                 const DesignVector& initial);

/// True when the cells above 0.5 contain a 4-connected cluster touching all
/// four sides of the cell.
bool spans_cell(const density::Grid& grid, const Eigen::VectorXd& rho, double threshold = 0.5);

struct IterationRecord {
    int iteration = 0;
    double objective = 0.0;
    double volume_fraction = 0.0;
    double max_element_energy = 0.0;
    double pnorm = 0.0;  // c * PN
    double c = 1.0;
    double max_change = 0.0;
    int newton_iterations = 0;
    bool feasible = false;
    bool rejected = false;
};

struct OptState {
    int iteration = 0;
    DesignVector design;
    std::vector<IterationRecord> history;
    Mma mma;
    double c = 1.0;
    double f_scale = 1.0;
    int quiet_iterations = 0;  // consecutive small feasible steps
    int rejections = 0;        // consecutive failed analyses
    bool converged = false;
    /// Per-variable move limits (fractions of range), never above design.move_limit.
    Eigen::VectorXd move;
    Eigen::VectorXd last_step;

    OptState(const DesignVector& X, int n_constraints, double c0);
};

/// MMA update of the design with constraints ordered (volume, energy).
DesignVector mma_step(OptState& state, double f0, const Eigen::VectorXd& df0, const Eigen::VectorXd& g,
                      const Eigen::MatrixXd& dg);

enum class RunStatus { converged, max_iterations, aborted };
const char* to_string(RunStatus s);

struct RunResult {
    RunStatus status = RunStatus::max_iterations;
    DesignVector initial;
    DesignVector design;
    std::vector<IterationRecord> history;
    Evaluation final_eval;
    bool has_final_eval = false;
    std::optional<WarmStartResult> warmstart;
    std::optional<IdentifyResult> identification;
    std::string diagnostic;
    /// Iteration of the best feasible design returned in place of the last
    /// iterate when the budget ran out; -1 when the last iterate is returned.
    int incumbent_iteration = -1;
};

/// Lattice layout, fitted to the warm-start field when both stages are enabled.
/// Biaxial and shear runs keep the lattice if the fit does not span the cell.
DesignVector initialize_design(const RunConfig& cfg, std::optional<WarmStartResult>* ws = nullptr,
                               std::optional<IdentifyResult>* id = nullptr);

using IterationCallback = std::function<void(const IterationRecord&)>;

/// Main loop. Starts from `initial` when given, else from initialize_design.
RunResult run(const RunConfig& cfg, const std::optional<DesignVector>& initial = std::nullopt,
              const IterationCallback& on_iteration = {});

/// Feasibility used for termination and reporting.
bool is_feasible(const RunConfig& cfg, double volume_fraction, double max_energy);

}  // namespace stretchopt::opt
