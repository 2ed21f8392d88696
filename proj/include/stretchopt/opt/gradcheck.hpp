#pragma once

#include "stretchopt/opt/pipeline.hpp"

#include <string>
#include <vector>

namespace stretchopt::opt {

struct GradientRow {
    int index = 0;
    std::string kind;  // "x", "y", "rho_bar" or "w"
    int component = 0;
    double step = 0.0;
    double adjoint_objective = 0.0, fd_objective = 0.0;
    double adjoint_energy = 0.0, fd_energy = 0.0;
    double adjoint_volume = 0.0, fd_volume = 0.0;
    /// True when the central stencil crosses a change of closest-point branch
    /// or a floor switch, where the response is not differentiable.
    bool screened = false;
};

struct GradientCheck {
    std::vector<GradientRow> rows;
    Evaluation base;
    /// max over unscreened rows of |adj - fd| / max(|fd|, floor * max|fd|)
    double worst_objective = 0.0;
    double worst_energy = 0.0;
    double worst_volume = 0.0;
};

/// Adjoint-vs-central-FD comparison through the whole pipeline at fixed c.
/// Empty `variables` checks every design variable.
GradientCheck check_gradients(Pipeline& pipeline, const DesignVector& X, double c, double step_fraction,
                              const std::vector<int>& variables = {}, double floor = 1e-3);

std::string gradient_csv(const GradientCheck& check);

std::string variable_kind(const DesignLayout& layout, int index, int* component = nullptr);

}  // namespace stretchopt::opt
