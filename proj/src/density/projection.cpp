#include "stretchopt/density/projection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stretchopt::density {

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

Grid::Grid(int nx_, int ny_, double h_) : nx(nx_), ny(ny_), h(h_) {
    if (nx < 1 || ny < 1) throw std::invalid_argument("Grid: element counts must be positive");
    if (!(h > 0.0)) throw std::invalid_argument("Grid: element size must be positive");
}

Point Grid::centroid(int e) const {
    const int i = e % nx;
    const int j = e / nx;
    return {(i + 0.5) * h, (j + 0.5) * h};
}

double heaviside_shape(double w, double d, double beta) { return logistic(2.0 * beta * (w - d)); }

double heaviside_shape_slope(double w, double d, double beta) {
    const double z = 2.0 * beta * (w - d);
    return 2.0 * beta * logistic(z) * logistic(-z);
}

double heaviside(double w, double d, double rho_bar, double beta, double rho_min) {
    return heaviside_shape(w, d, beta) * rho_bar + rho_min;
}

ComponentDensity component_density(const BezierComponent& curve, const Point& centroid,
                                   double beta, double rho_min) {
    if (!(beta > 0.0)) throw std::invalid_argument("component_density: beta must be positive");
    ComponentDensity out;
    out.proj = geometry::project_point(curve, centroid);
    out.rho = heaviside(curve.w, out.proj.distance, curve.rho_bar, beta, rho_min);
    return out;
}

double composite(std::span<const double> rho, double p) {
    if (rho.empty()) return 0.0;
    const double m = *std::max_element(rho.begin(), rho.end());
    if (m <= 0.0) return 0.0;
    double s = 0.0;
    for (double r : rho) s += std::pow(r / m, p);
    return m * std::pow(s, 1.0 / p);
}

Eigen::VectorXd composite_partials(std::span<const double> rho, double p) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rho.size()));
    const double c = composite(rho, p);
    if (c <= 0.0) return out;
    for (std::size_t i = 0; i < rho.size(); ++i) out[static_cast<Eigen::Index>(i)] = std::pow(rho[i] / c, p - 1.0);
    return out;
}

double sdp(double x) { return std::tanh(3.0 * x); }

double sdp_derivative(double x) {
    const double t = std::tanh(3.0 * x);
    return 3.0 - 3.0 * t * t;
}

DensityField project_field(const Grid& grid, std::span<const BezierComponent> components,
                           const ProjectionParams& params) {
    const int ne = grid.num_elements();
    const int nc = static_cast<int>(components.size());
    DensityField f;
    f.grid = grid;
    f.rho_phys.resize(ne);
    f.rho_comp.resize(ne);
    f.per_component.resize(ne, nc);
    f.projections.resize(static_cast<std::size_t>(ne) * nc);

    std::vector<double> column(nc);
    for (int e = 0; e < ne; ++e) {
        const Point c = grid.centroid(e);
        for (int k = 0; k < nc; ++k) {
            const ComponentDensity cd = component_density(components[k], c, params.beta, params.rho_min);
            f.per_component(e, k) = cd.rho;
            f.projections[static_cast<std::size_t>(e) * nc + k] = cd.proj;
            column[k] = cd.rho;
        }
        f.rho_comp[e] = composite(column, params.p);
        f.rho_phys[e] = sdp(f.rho_comp[e]);
    }
    return f;
}

FieldJacobian field_sensitivity(const DensityField& field,
                                std::span<const BezierComponent> components,
                                const ProjectionParams& params) {
    const int ne = field.grid.num_elements();
    const int nc = static_cast<int>(components.size());
    if (nc != field.n_components())
        throw std::invalid_argument("field_sensitivity: component count does not match field");
    const int degree = nc > 0 ? components.front().degree() : 4;
    const DesignLayout layout{nc, degree};

    FieldJacobian jac;
    jac.d_rho_phys = Eigen::MatrixXd::Zero(ne, layout.size());
    std::vector<double> column(nc);
    for (int e = 0; e < ne; ++e) {
        for (int k = 0; k < nc; ++k) column[k] = field.per_component(e, k);
        const Eigen::VectorXd dcomp = composite_partials(column, params.p);
        const double dsdp = sdp_derivative(field.rho_comp[e]);
        const Point centroid = field.grid.centroid(e);
        for (int k = 0; k < nc; ++k) {
            const double chain = dsdp * dcomp[k];
            if (chain == 0.0) continue;
            const BezierComponent& comp = components[k];
            const ProjectionResult& proj = field.projection(e, k);
            const double shape = heaviside_shape(comp.w, proj.distance, params.beta);
            const double slope = heaviside_shape_slope(comp.w, proj.distance, params.beta);
            jac.d_rho_phys(e, layout.rho_bar(k)) += chain * shape;
            jac.d_rho_phys(e, layout.width(k)) += chain * comp.rho_bar * slope;
            const double d_rho_d_dist = -chain * comp.rho_bar * slope;
            if (d_rho_d_dist == 0.0) continue;
            try {
                const auto dg = geometry::distance_gradient(comp, centroid, proj);
                for (int i = 0; i <= degree; ++i)
                    for (int axis = 0; axis < 2; ++axis)
                        jac.d_rho_phys(e, layout.coord(k, i, axis)) += d_rho_d_dist * dg.d_distance[2 * i + axis];
            } catch (const geometry::SingularGradient&) {
                ++jac.singular_pairs;
            }
        }
    }
    return jac;
}

Symmetrizer::Symmetrizer(const Grid& grid) : grid_(grid) {
    if (grid.nx % 2 != 0 || grid.ny % 2 != 0)
        throw std::invalid_argument("Symmetrizer: grid dimensions must be even");
    for (int j = 0; j < grid.ny / 2; ++j) {
        for (int i = 0; i < grid.nx / 2; ++i) {
            const int im = grid.nx - 1 - i;
            const int jm = grid.ny - 1 - j;
            orbits_.push_back({grid.element(i, j), grid.element(im, j), grid.element(i, jm),
                               grid.element(im, jm)});
        }
    }
}

Eigen::VectorXd Symmetrizer::apply(const Eigen::VectorXd& field) const {
    if (field.size() != grid_.num_elements())
        throw std::invalid_argument("Symmetrizer: field size mismatch");
    Eigen::VectorXd out(field.size());
    for (const auto& orbit : orbits_) {
        const double avg = 0.25 * (field[orbit[0]] + field[orbit[1]] + field[orbit[2]] + field[orbit[3]]);
        for (int e : orbit) out[e] = avg;
    }
    return out;
}

Eigen::MatrixXd Symmetrizer::apply_rows(const Eigen::MatrixXd& jacobian) const {
    if (jacobian.rows() != grid_.num_elements())
        throw std::invalid_argument("Symmetrizer: jacobian row count mismatch");
    Eigen::MatrixXd out(jacobian.rows(), jacobian.cols());
    for (const auto& orbit : orbits_) {
        const Eigen::RowVectorXd avg =
            0.25 * (jacobian.row(orbit[0]) + jacobian.row(orbit[1]) + jacobian.row(orbit[2]) +
                    jacobian.row(orbit[3]));
        for (int e : orbit) out.row(e) = avg;
    }
    return out;
}

DensityField symmetrize(const DensityField& field, const Symmetrizer& sym) {
    DensityField out = field;
    out.rho_phys = sym.apply(field.rho_phys);
    out.rho_comp = sym.apply(field.rho_comp);
    return out;
}

Eigen::VectorXd apply_floor(const Eigen::VectorXd& rho, double floor, Eigen::VectorXd* mask) {
    Eigen::VectorXd out(rho.size());
    if (mask) mask->resize(rho.size());
    for (Eigen::Index e = 0; e < rho.size(); ++e) {
        const bool above = rho[e] > floor;
        out[e] = above ? rho[e] : floor;
        if (mask) (*mask)[e] = above ? 1.0 : 0.0;
    }
    return out;
}

}  // namespace stretchopt::density
