#pragma once

#include "stretchopt/geometry/bezier.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace stretchopt::density {

using geometry::BezierComponent;
using geometry::Point;
using geometry::ProjectionResult;

/// Fixed structured grid of nx by ny square elements of edge h. Element
/// (i, j) has index j * nx + i, so rows of the grid are contiguous.
struct Grid {
    int nx = 1;
    int ny = 1;
    double h = 1.0;

    Grid() = default;
    Grid(int nx_, int ny_, double h_);

    int num_elements() const { return nx * ny; }
    int element(int i, int j) const { return j * nx + i; }
    Point centroid(int e) const;
    double width() const { return nx * h; }
    double height() const { return ny * h; }
};

struct ProjectionParams {
    double beta = 5.0;
    double p = 10.0;
    /// Additive floor inside each component's Heaviside (kept at zero in the
    /// optimization pipeline, which floors the physical density instead).
    double rho_min = 0.0;
};

/// Column layout of design jacobians: every control coordinate of every
/// component (component-major, [a_0, b_0, a_1, ...]), then all segment
/// densities, then all half-widths.
struct DesignLayout {
    int n_components = 0;
    int degree = 4;

    int coords_per_component() const { return 2 * (degree + 1); }
    int size() const { return n_components * (coords_per_component() + 2); }
    int coord(int k, int i, int axis) const { return k * coords_per_component() + 2 * i + axis; }
    int rho_bar(int k) const { return n_components * coords_per_component() + k; }
    int width(int k) const { return n_components * coords_per_component() + n_components + k; }
};

/// Smoothed Heaviside of the signed gap w - d, scaled by the segment
/// density: 0.5 (1 + tanh(beta (w - d))) rho_bar + rho_min.
double heaviside(double w, double d, double rho_bar, double beta, double rho_min = 0.0);

/// 0.5 (1 + tanh(beta (w - d))), computed without cancellation for large gaps.
double heaviside_shape(double w, double d, double beta);

/// d/dz of heaviside_shape with z = w - d, i.e. 0.5 beta (1 - tanh^2).
double heaviside_shape_slope(double w, double d, double beta);

struct ComponentDensity {
    double rho = 0.0;
    ProjectionResult proj;
};

ComponentDensity component_density(const BezierComponent& curve, const Point& centroid,
                                   double beta, double rho_min = 0.0);

/// p-norm aggregate (sum rho_i^p)^(1/p), evaluated with max-scaling.
double composite(std::span<const double> rho, double p);

/// Partials d composite / d rho_i = (rho_i / composite)^(p-1).
Eigen::VectorXd composite_partials(std::span<const double> rho, double p);

/// Special density projection tanh(3 x).
double sdp(double x);
double sdp_derivative(double x);

struct DensityField {
    Grid grid;
    Eigen::VectorXd rho_phys;
    Eigen::VectorXd rho_comp;
    /// Element-major: per_component(e, k).
    Eigen::MatrixXd per_component;
    std::vector<ProjectionResult> projections;  // e * n_components + k

    int n_components() const { return static_cast<int>(per_component.cols()); }
    const ProjectionResult& projection(int e, int k) const {
        return projections[static_cast<std::size_t>(e) * n_components() + k];
    }
};

DensityField project_field(const Grid& grid, std::span<const BezierComponent> components,
                           const ProjectionParams& params);

struct FieldJacobian {
    /// rows = elements, cols = DesignLayout::size().
    Eigen::MatrixXd d_rho_phys;
    /// Element/component pairs skipped because the distance derivative is
    /// singular there.
    int singular_pairs = 0;
};

FieldJacobian field_sensitivity(const DensityField& field,
                                std::span<const BezierComponent> components,
                                const ProjectionParams& params);

/// Orbit averaging over reflections across both grid midlines. The operator
/// is an orthogonal projection, so it is its own adjoint.
class Symmetrizer {
public:
    explicit Symmetrizer(const Grid& grid);

    Eigen::VectorXd apply(const Eigen::VectorXd& field) const;
    Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& jacobian) const;
    Eigen::VectorXd accumulate(const Eigen::VectorXd& sensitivity) const { return apply(sensitivity); }

    const std::vector<std::vector<int>>& orbits() const { return orbits_; }

private:
    Grid grid_;
    std::vector<std::vector<int>> orbits_;
};

DensityField symmetrize(const DensityField& field, const Symmetrizer& sym);

/// max(rho, floor) together with the 0/1 mask of elements above the floor.
Eigen::VectorXd apply_floor(const Eigen::VectorXd& rho, double floor, Eigen::VectorXd* mask = nullptr);

}  // namespace stretchopt::density
