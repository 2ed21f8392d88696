#pragma once

#include "stretchopt/density/projection.hpp"

#include <Eigen/Core>

#include <vector>

namespace stretchopt::opt {

using density::BezierComponent;
using density::DesignLayout;

/// Flattened geometric design X = [control coordinates, rho_bar, w] with box
/// bounds. Control points live in the cell rectangle.
struct DesignVector {
    DesignLayout layout;
    Eigen::VectorXd values;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    double move_limit = 0.01;

    DesignVector() = default;
    DesignVector(const DesignLayout& layout, double width, double height, double w_min, double w_max,
                 double move_limit = 0.01);

    static DesignVector from_components(const std::vector<BezierComponent>& comps, double width,
                                        double height, double w_min, double w_max, double move_limit = 0.01);

    std::vector<BezierComponent> components() const;
    int size() const { return static_cast<int>(values.size()); }
    Eigen::VectorXd range() const { return upper - lower; }
    bool within_bounds(double tol = 0.0) const;
    void clamp();

    bool operator==(const DesignVector& o) const;
};

/// Straight segments on a symmetric lattice: horizontal and vertical midlines,
/// both diagonals, the diamond through the edge midpoints, quarter lines and
/// corner cuts, taken in that order and cycled if more are requested.
std::vector<BezierComponent> initial_layout(int n_components, int degree, double width, double height,
                                            double rho_bar = 0.5, double w = 2.5);

}  // namespace stretchopt::opt
