#pragma once

#include "stretchopt/density/projection.hpp"

#include <Eigen/Sparse>

#include <stdexcept>
#include <string>

namespace stretchopt::pbc {

using density::Grid;
using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using SparseMatrix = Eigen::SparseMatrix<double>;

class InvalidMesh : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class LoadKind { uniaxial, equibiaxial, pure_shear };

LoadKind parse_load_kind(const std::string& s);
std::string to_string(LoadKind k);

struct LoadCase {
    LoadKind kind = LoadKind::uniaxial;
    double u_bar = 0.0;
};

/// Linear multi-point constraints A u = Q imposed with a penalty weight.
struct ConstraintSet {
    SparseRows A;
    Eigen::VectorXd Q;
    double alpha = 1e8;

    int rows() const { return static_cast<int>(A.rows()); }
    /// alpha A^T A, in column-major storage for assembly.
    SparseMatrix penalty_matrix() const;
    /// A u - scale * Q
    Eigen::VectorXd violation(const Eigen::VectorXd& u, double scale = 1.0) const;
};

inline int node_index(const Grid& g, int i, int j) { return j * (g.nx + 1) + i; }
inline int dof_index(const Grid& g, int i, int j, int axis) { return 2 * node_index(g, i, j) + axis; }
inline int num_dofs(const Grid& g) { return 2 * (g.nx + 1) * (g.ny + 1); }

/// Periodic constraints for the three elastomer tests. The lower-left corner
/// is pinned; the uniaxial case leaves the transverse stretch free by tying
/// every top/bottom pair to the left-edge corner pair.
ConstraintSet build_constraints(const Grid& grid, const LoadCase& load, double alpha = 1e8);

/// Direct single-dof constraints u_dof = value (one +1 per row).
ConstraintSet dirichlet_constraints(int n_dofs, const std::vector<std::pair<int, double>>& fixed,
                                    double alpha = 1e8);

/// Unit entries on the loaded-boundary dofs aligned with the prescribed
/// displacement difference. l^T f_int is the reaction in the loading sense.
Eigen::VectorXd loading_vector(const Grid& grid, LoadKind kind);

struct Augmented {
    Eigen::VectorXd residual;
    SparseMatrix tangent;
};

/// r + alpha A^T (A u - scale Q) and K_t + alpha A^T A.
Augmented penalty_augment(const Eigen::VectorXd& r, const SparseMatrix& K_t, const ConstraintSet& set,
                          const Eigen::VectorXd& u, double scale = 1.0);

/// Numerical row rank of A via column-pivoted QR of the dense A A^T.
int row_rank(const ConstraintSet& set);

}  // namespace stretchopt::pbc
