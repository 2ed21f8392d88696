#pragma once

#include "stretchopt/density/projection.hpp"
#include "stretchopt/fem/model.hpp"

#include <Eigen/Core>

#include <stdexcept>
#include <vector>

namespace stretchopt::opt {

class AdjointFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Partial derivatives of a response theta(u, x) at fixed x and fixed u.
struct ResponseDerivatives {
    Eigen::VectorXd d_u;
    Eigen::VectorXd d_x;
};

/// Penalty-augmented tangent factorized at a converged displacement, plus the
/// element force derivatives in the physical density at that state.
class AdjointSystem {
public:
    AdjointSystem(const fem::FeModel& model, const pbc::ConstraintSet& constraints,
                  const Eigen::VectorXd& u);

    /// lambda with K* lambda = -d_u. Refines until the relative residual is at
    /// most tol; throws AdjointFailure otherwise.
    Eigen::VectorXd adjoint_solve(const Eigen::VectorXd& d_u, double tol = 1e-10,
                                  double* residual = nullptr) const;

    /// d_x + lambda_e . d f_e / d x_e per element.
    Eigen::VectorXd total_density_sensitivity(const ResponseDerivatives& r,
                                              const Eigen::VectorXd& lambda) const;

    const fem::SparseMatrix& tangent() const { return K_t_; }
    const std::vector<fem::Vec8>& force_density_derivatives() const { return df_dx_; }
    const Eigen::VectorXd& displacement() const { return u_; }

private:
    const fem::FeModel& model_;
    fem::AugmentedSystem sys_;
    Eigen::VectorXd u_;
    fem::SparseMatrix K_t_;
    std::vector<fem::Vec8> df_dx_;
};

/// Reaction objective l^T f_int: d_u = K_t l, d_x_e = l_e . d f_e / d x_e.
ResponseDerivatives objective_derivatives(const AdjointSystem& sys, const fem::FeModel& model,
                                          const Eigen::VectorXd& l);

/// Response depending on u only through the element failure energies E_i.
ResponseDerivatives energy_derivatives(const fem::FeModel& model, const Eigen::VectorXd& u,
                                       const Eigen::VectorXd& d_theta_dE);

/// Full adjoint sensitivity of a response w.r.t. the element densities.
Eigen::VectorXd density_gradient(const AdjointSystem& sys, const ResponseDerivatives& r,
                                 double* adjoint_residual = nullptr);

/// dtheta/dX = J^T S (mask .* dtheta/dx) for the floored, symmetrized field
/// S rho(X) with field jacobian J.
Eigen::VectorXd chain_to_geometry(const Eigen::VectorXd& d_x, const Eigen::VectorXd& mask,
                                  const density::Symmetrizer* sym, const Eigen::MatrixXd& J);

}  // namespace stretchopt::opt
