#include "stretchopt/opt/design.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

namespace stretchopt::opt {

DesignVector::DesignVector(const DesignLayout& l, double width, double height, double w_min, double w_max,
                           double move)
    : layout(l), move_limit(move) {
    if (l.n_components < 1 || l.degree < 1) throw std::invalid_argument("DesignVector: empty layout");
    const int n = l.size();
    values = Eigen::VectorXd::Zero(n);
    lower = Eigen::VectorXd::Zero(n);
    upper = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < l.n_components; ++k) {
        for (int i = 0; i <= l.degree; ++i) {
            upper[l.coord(k, i, 0)] = width;
            upper[l.coord(k, i, 1)] = height;
        }
        upper[l.rho_bar(k)] = 1.0;
        lower[l.width(k)] = w_min;
        upper[l.width(k)] = w_max;
    }
}

DesignVector DesignVector::from_components(const std::vector<BezierComponent>& comps, double width,
                                           double height, double w_min, double w_max, double move) {
    if (comps.empty()) throw std::invalid_argument("DesignVector: no components");
    DesignLayout l{static_cast<int>(comps.size()), comps.front().degree()};
    DesignVector d(l, width, height, w_min, w_max, move);
    for (int k = 0; k < l.n_components; ++k) {
        const auto& c = comps[static_cast<std::size_t>(k)];
        if (c.degree() != l.degree) throw std::invalid_argument("DesignVector: mixed degrees");
        for (int i = 0; i <= l.degree; ++i) {
            d.values[l.coord(k, i, 0)] = c.control_points[static_cast<std::size_t>(i)].x();
            d.values[l.coord(k, i, 1)] = c.control_points[static_cast<std::size_t>(i)].y();
        }
        d.values[l.rho_bar(k)] = c.rho_bar;
        d.values[l.width(k)] = c.w;
    }
    return d;
}

std::vector<BezierComponent> DesignVector::components() const {
    std::vector<BezierComponent> out(static_cast<std::size_t>(layout.n_components));
    for (int k = 0; k < layout.n_components; ++k) {
        auto& c = out[static_cast<std::size_t>(k)];
        c.control_points.resize(static_cast<std::size_t>(layout.degree + 1));
        for (int i = 0; i <= layout.degree; ++i)
            c.control_points[static_cast<std::size_t>(i)] = {values[layout.coord(k, i, 0)], values[layout.coord(k, i, 1)]};
        c.rho_bar = values[layout.rho_bar(k)];
        c.w = values[layout.width(k)];
    }
    return out;
}

bool DesignVector::within_bounds(double tol) const {
    for (int i = 0; i < size(); ++i)
        if (values[i] < lower[i] - tol || values[i] > upper[i] + tol) return false;
    return true;
}

void DesignVector::clamp() { values = values.cwiseMax(lower).cwiseMin(upper); }

bool DesignVector::operator==(const DesignVector& o) const {
    return layout.n_components == o.layout.n_components && layout.degree == o.layout.degree &&
           values == o.values && lower == o.lower && upper == o.upper && move_limit == o.move_limit;
}

std::vector<BezierComponent> initial_layout(int n_components, int degree, double W, double H, double rho_bar,
                                            double w) {
    if (n_components < 1 || degree < 1) throw std::invalid_argument("initial_layout: bad size");
    using Seg = std::array<double, 4>;
    const std::vector<Seg> lattice = {
        {0, H / 2, W, H / 2},         {W / 2, 0, W / 2, H},
        {0, 0, W, H},                 {0, H, W, 0},
        {W / 2, 0, W, H / 2},         {W, H / 2, W / 2, H},
        {W / 2, H, 0, H / 2},         {0, H / 2, W / 2, 0},
        {0, H / 4, W, H / 4},         {0, 3 * H / 4, W, 3 * H / 4},
        {W / 4, 0, W / 4, H},         {3 * W / 4, 0, 3 * W / 4, H},
        {0, H / 4, W / 4, 0},         {3 * W / 4, 0, W, H / 4},
        {W, 3 * H / 4, 3 * W / 4, H}, {W / 4, H, 0, 3 * H / 4},
    };
    std::vector<BezierComponent> out;
    for (int k = 0; k < n_components; ++k) {
        const Seg& s = lattice[static_cast<std::size_t>(k) % lattice.size()];
        BezierComponent c;
        c.rho_bar = rho_bar;
        c.w = w;
        for (int i = 0; i <= degree; ++i) {
            const double t = static_cast<double>(i) / degree;
            c.control_points.emplace_back((1 - t) * s[0] + t * s[2], (1 - t) * s[1] + t * s[3]);
        }
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace stretchopt::opt
