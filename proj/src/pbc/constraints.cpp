#include "stretchopt/pbc/constraints.hpp"

#include <Eigen/QR>

#include <vector>

namespace stretchopt::pbc {

LoadKind parse_load_kind(const std::string& s) {
    if (s == "uniaxial") return LoadKind::uniaxial;
    if (s == "biaxial" || s == "equibiaxial") return LoadKind::equibiaxial;
    if (s == "shear" || s == "pure_shear") return LoadKind::pure_shear;
    throw std::invalid_argument("unknown load case '" + s + "'");
}

std::string to_string(LoadKind k) {
    switch (k) {
        case LoadKind::uniaxial: return "uniaxial";
        case LoadKind::equibiaxial: return "biaxial";
        case LoadKind::pure_shear: return "shear";
    }
    return "uniaxial";
}

SparseMatrix ConstraintSet::penalty_matrix() const {
    SparseMatrix At = SparseMatrix(A.transpose());
    SparseMatrix P = alpha * (At * SparseMatrix(A));
    P.makeCompressed();
    return P;
}

Eigen::VectorXd ConstraintSet::violation(const Eigen::VectorXd& u, double scale) const {
    return A * u - scale * Q;
}

namespace {

struct RowBuilder {
    std::vector<Eigen::Triplet<double>> trip;
    std::vector<double> q;

    void add(std::initializer_list<std::pair<int, double>> terms, double target) {
        const int r = static_cast<int>(q.size());
        for (const auto& [dof, c] : terms) trip.emplace_back(r, dof, c);
        q.push_back(target);
    }

    ConstraintSet finish(int n_dofs, double alpha) {
        ConstraintSet s;
        s.A.resize(static_cast<Eigen::Index>(q.size()), n_dofs);
        s.A.setFromTriplets(trip.begin(), trip.end());
        s.A.makeCompressed();
        s.Q = Eigen::Map<Eigen::VectorXd>(q.data(), static_cast<Eigen::Index>(q.size()));
        s.alpha = alpha;
        return s;
    }
};

}  // namespace

ConstraintSet build_constraints(const Grid& g, const LoadCase& load, double alpha) {
    if (g.nx < 1 || g.ny < 1) throw InvalidMesh("build_constraints: empty grid");
    if (!(load.u_bar >= 0.0)) throw std::invalid_argument("build_constraints: u_bar must be non-negative");
    if (!(alpha > 0.0)) throw std::invalid_argument("build_constraints: alpha must be positive");

    const double ub = load.u_bar;
    // Prescribed differences across (right - left) and (top - bottom).
    double lr_x = 0.0, lr_y = 0.0, tb_x = 0.0, tb_y = 0.0;
    switch (load.kind) {
        case LoadKind::uniaxial: lr_x = ub; break;
        case LoadKind::equibiaxial: lr_x = ub; tb_y = ub; break;
        case LoadKind::pure_shear: tb_x = ub; break;
    }
    const bool free_transverse = load.kind == LoadKind::uniaxial;

    RowBuilder rb;
    const int X = 0, Y = 1;
    rb.add({{dof_index(g, 0, 0, X), 1.0}}, 0.0);
    rb.add({{dof_index(g, 0, 0, Y), 1.0}}, 0.0);

    for (int j = 0; j <= g.ny; ++j) {
        rb.add({{dof_index(g, g.nx, j, X), 1.0}, {dof_index(g, 0, j, X), -1.0}}, lr_x);
        rb.add({{dof_index(g, g.nx, j, Y), 1.0}, {dof_index(g, 0, j, Y), -1.0}}, lr_y);
    }
    // Top/bottom pairs; the right-edge corners already follow from the
    // left/right rows.
    for (int i = 0; i < g.nx; ++i) {
        rb.add({{dof_index(g, i, g.ny, X), 1.0}, {dof_index(g, i, 0, X), -1.0}}, tb_x);
        if (free_transverse) {
            if (i == 0) continue;
            rb.add({{dof_index(g, i, g.ny, Y), 1.0},
                    {dof_index(g, i, 0, Y), -1.0},
                    {dof_index(g, 0, g.ny, Y), -1.0},
                    {dof_index(g, 0, 0, Y), 1.0}},
                   0.0);
        } else {
            rb.add({{dof_index(g, i, g.ny, Y), 1.0}, {dof_index(g, i, 0, Y), -1.0}}, tb_y);
        }
    }
    return rb.finish(num_dofs(g), alpha);
}

ConstraintSet dirichlet_constraints(int n_dofs, const std::vector<std::pair<int, double>>& fixed,
                                    double alpha) {
    RowBuilder rb;
    for (const auto& [dof, value] : fixed) {
        if (dof < 0 || dof >= n_dofs) throw InvalidMesh("dirichlet_constraints: dof out of range");
        rb.add({{dof, 1.0}}, value);
    }
    return rb.finish(n_dofs, alpha);
}

Eigen::VectorXd loading_vector(const Grid& g, LoadKind kind) {
    Eigen::VectorXd l = Eigen::VectorXd::Zero(num_dofs(g));
    switch (kind) {
        case LoadKind::uniaxial:
            for (int j = 0; j <= g.ny; ++j) l[dof_index(g, g.nx, j, 0)] = 1.0;
            break;
        case LoadKind::equibiaxial:
            for (int j = 0; j <= g.ny; ++j) l[dof_index(g, g.nx, j, 0)] = 1.0;
            for (int i = 0; i <= g.nx; ++i) l[dof_index(g, i, g.ny, 1)] = 1.0;
            break;
        case LoadKind::pure_shear:
            for (int i = 0; i <= g.nx; ++i) l[dof_index(g, i, g.ny, 0)] = 1.0;
            break;
    }
    return l;
}

Augmented penalty_augment(const Eigen::VectorXd& r, const SparseMatrix& K_t, const ConstraintSet& set,
                          const Eigen::VectorXd& u, double scale) {
    Augmented out;
    if (set.rows() == 0) {
        out.residual = r;
        out.tangent = K_t;
        return out;
    }
    out.residual = r + set.alpha * (set.A.transpose() * set.violation(u, scale));
    out.tangent = K_t + set.penalty_matrix();
    return out;
}

int row_rank(const ConstraintSet& set) {
    const Eigen::MatrixXd A = Eigen::MatrixXd(set.A);
    const Eigen::MatrixXd G = A * A.transpose();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(G);
    qr.setThreshold(1e-10);
    return static_cast<int>(qr.rank());
}

}  // namespace stretchopt::pbc
