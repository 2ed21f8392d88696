#include "stretchopt/opt/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace stretchopt::opt {

std::string variable_kind(const DesignLayout& L, int index, int* component) {
    const int coords = L.n_components * L.coords_per_component();
    int k = 0;
    std::string kind;
    if (index < coords) {
        k = index / L.coords_per_component();
        kind = (index % 2) ? "y" : "x";
    } else if (index < coords + L.n_components) {
        k = index - coords;
        kind = "rho_bar";
    } else {
        k = index - coords - L.n_components;
        kind = "w";
    }
    if (component) *component = k;
    return kind;
}

namespace {

// Branch switch of the perturbed component's projection, the variable's
// component sitting on a grid centroid, or an element crossing the density
// floor, between the two stencil points. Density and width variables do not
// move the skeleton, so only the floor applies to them.
bool stencil_crosses_kink(const Evaluation& a, const Evaluation& b, int component, bool geometric) {
    if (geometric) {
        const int ne = std::min(a.field.grid.num_elements(), b.field.grid.num_elements());
        for (int e = 0; e < ne; ++e) {
            const auto& pa = a.field.projection(e, component);
            const auto& pb = b.field.projection(e, component);
            if (std::abs(pa.t0 - pb.t0) > 1e-3 || pa.interior != pb.interior) return true;
            if (pa.distance < 1e-6 || pb.distance < 1e-6) return true;
        }
    }
    for (Eigen::Index e = 0; e < a.mask.size(); ++e)
        if (a.mask[e] != b.mask[e]) return true;
    return false;
}

double rel(double adj, double fd, double scale) { return std::abs(adj - fd) / std::max(std::abs(fd), scale); }

}  // namespace

GradientCheck check_gradients(Pipeline& pipeline, const DesignVector& X, double c, double step_fraction,
                              const std::vector<int>& variables, double floor) {
    GradientCheck out;
    out.base = pipeline.evaluate(X, c, true);
    if (!out.base.ok) throw std::runtime_error("check_gradients: baseline analysis failed: " + out.base.failure);
    std::vector<int> vars = variables;
    if (vars.empty())
        for (int i = 0; i < X.size(); ++i) vars.push_back(i);
    const Eigen::VectorXd range = X.range();
    const Eigen::VectorXd& u0 = out.base.solve.u;

    for (int i : vars) {
        if (i < 0 || i >= X.size()) throw std::invalid_argument("check_gradients: variable index out of range");
        GradientRow row;
        row.index = i;
        row.kind = variable_kind(X.layout, i, &row.component);
        row.step = step_fraction * range[i];
        DesignVector xp = X, xm = X;
        xp.values[i] += row.step;
        xm.values[i] -= row.step;
        const Evaluation ep = pipeline.evaluate(xp, c, false, u0);
        const Evaluation em = pipeline.evaluate(xm, c, false, u0);
        if (!ep.ok || !em.ok) throw std::runtime_error("check_gradients: perturbed analysis failed");
        row.adjoint_objective = out.base.d_objective[i];
        row.adjoint_energy = out.base.d_energy[i];
        row.adjoint_volume = out.base.d_volume[i];
        row.fd_objective = (ep.objective - em.objective) / (2.0 * row.step);
        row.fd_energy = (ep.energy.g - em.energy.g) / (2.0 * row.step);
        row.fd_volume = (ep.volume_fraction - em.volume_fraction) / (2.0 * row.step);
        row.screened = stencil_crosses_kink(ep, em, row.component, row.kind == "x" || row.kind == "y");
        out.rows.push_back(row);
    }

    double mo = 0.0, me = 0.0, mv = 0.0;
    for (const auto& r : out.rows) {
        if (r.screened) continue;
        mo = std::max(mo, std::abs(r.fd_objective));
        me = std::max(me, std::abs(r.fd_energy));
        mv = std::max(mv, std::abs(r.fd_volume));
    }
    for (const auto& r : out.rows) {
        if (r.screened) continue;
        out.worst_objective = std::max(out.worst_objective, rel(r.adjoint_objective, r.fd_objective, floor * mo));
        out.worst_energy = std::max(out.worst_energy, rel(r.adjoint_energy, r.fd_energy, floor * me));
        out.worst_volume = std::max(out.worst_volume, rel(r.adjoint_volume, r.fd_volume, floor * mv));
    }
    return out;
}

std::string gradient_csv(const GradientCheck& check) {
    std::string s = "index,kind,component,step,adjoint_objective,fd_objective,adjoint_energy,fd_energy,"
                    "adjoint_volume,fd_volume,screened\n";
    char buf[512];
    for (const auto& r : check.rows) {
        std::snprintf(buf, sizeof buf, "%d,%s,%d,%.6g,%.12e,%.12e,%.12e,%.12e,%.12e,%.12e,%d\n", r.index,
                      r.kind.c_str(), r.component, r.step, r.adjoint_objective, r.fd_objective, r.adjoint_energy,
                      r.fd_energy, r.adjoint_volume, r.fd_volume, r.screened ? 1 : 0);
        s += buf;
    }
    return s;
}

}  // namespace stretchopt::opt
