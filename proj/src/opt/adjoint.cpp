#include "stretchopt/opt/adjoint.hpp"

#include <cmath>

namespace stretchopt::opt {

using fem::Vec8;

AdjointSystem::AdjointSystem(const fem::FeModel& model, const pbc::ConstraintSet& constraints,
                             const Eigen::VectorXd& u)
    : model_(model), sys_(model, constraints), u_(u) {
    if (u.size() != model.num_dofs()) throw std::invalid_argument("AdjointSystem: displacement size mismatch");
    if (!sys_.factorize(u)) throw AdjointFailure("AdjointSystem: factorization of K* failed");
    K_t_ = sys_.stiffness_only();
    const int ne = model.grid().num_elements();
    df_dx_.resize(static_cast<std::size_t>(ne));
    for (int e = 0; e < ne; ++e) {
        const auto r = fem::interpolated_element(model.geometry(), model.material(),
                                                 model.linear_element_stiffness(), model.interpolation(),
                                                 model.gather(u, e), model.density()[e], false, true);
        df_dx_[static_cast<std::size_t>(e)] = r.force_density_derivative;
    }
}

namespace {

using LVec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// b - K x accumulated in extended precision. The penalty block makes K x
// cancel heavily, so a double residual stalls near alpha * ulp(x).
LVec residual_ld(const fem::SparseMatrix& K, const LVec& x, const Eigen::VectorXd& b) {
    LVec r = b.cast<long double>();
    for (int j = 0; j < K.outerSize(); ++j)
        for (fem::SparseMatrix::InnerIterator it(K, j); it; ++it)
            r[it.row()] -= static_cast<long double>(it.value()) * x[j];
    return r;
}

}  // namespace

Eigen::VectorXd AdjointSystem::adjoint_solve(const Eigen::VectorXd& d_u, double tol,
                                             double* residual) const {
    if (d_u.size() != u_.size()) throw std::invalid_argument("adjoint_solve: size mismatch");
    const long double ref = d_u.cast<long double>().norm();
    if (ref == 0.0L) {
        if (residual) *residual = 0.0;
        return Eigen::VectorXd::Zero(d_u.size());
    }
    const Eigen::VectorXd rhs = -d_u;
    LVec lambda = sys_.solve(rhs, 0).cast<long double>();
    LVec r = residual_ld(sys_.matrix(), lambda, rhs);
    double rel = static_cast<double>(r.norm() / ref);
    for (int it = 0; it < 10 && rel > 0.01 * tol; ++it) {
        lambda += sys_.solve(r.cast<double>(), 0).cast<long double>();
        r = residual_ld(sys_.matrix(), lambda, rhs);
        const double next = static_cast<double>(r.norm() / ref);
        if (next >= rel && rel <= tol) break;
        rel = next;
    }
    if (residual) *residual = rel;
    if (!(rel <= tol))
        throw AdjointFailure("adjoint_solve: relative residual " + std::to_string(rel) + " above tolerance");
    return lambda.cast<double>();
}

Eigen::VectorXd AdjointSystem::total_density_sensitivity(const ResponseDerivatives& r,
                                                         const Eigen::VectorXd& lambda) const {
    const int ne = model_.grid().num_elements();
    Eigen::VectorXd out = r.d_x.size() ? r.d_x : Eigen::VectorXd::Zero(ne);
    for (int e = 0; e < ne; ++e)
        out[e] += model_.gather(lambda, e).dot(df_dx_[static_cast<std::size_t>(e)]);
    return out;
}

ResponseDerivatives objective_derivatives(const AdjointSystem& sys, const fem::FeModel& model,
                                          const Eigen::VectorXd& l) {
    ResponseDerivatives r;
    r.d_u = sys.tangent() * l;
    const int ne = model.grid().num_elements();
    r.d_x.resize(ne);
    for (int e = 0; e < ne; ++e)
        r.d_x[e] = model.gather(l, e).dot(sys.force_density_derivatives()[static_cast<std::size_t>(e)]);
    return r;
}

ResponseDerivatives energy_derivatives(const fem::FeModel& model, const Eigen::VectorXd& u,
                                       const Eigen::VectorXd& d_theta_dE) {
    const int ne = model.grid().num_elements();
    if (d_theta_dE.size() != ne) throw std::invalid_argument("energy_derivatives: size mismatch");
    ResponseDerivatives r;
    r.d_u = Eigen::VectorXd::Zero(model.num_dofs());
    r.d_x = Eigen::VectorXd::Zero(ne);
    for (int e = 0; e < ne; ++e) {
        if (d_theta_dE[e] == 0.0) continue;
        const double x = model.density()[e];
        const double g = fem::gamma_factor(x, model.interpolation());
        if (g < 1e-8) continue;
        const Vec8 ue = model.gather(u, e);
        const fem::EnergyDensity ed = fem::mean_energy_density(model.geometry(), model.material(), g * ue);
        if (ed.inverted) throw AdjointFailure("energy_derivatives: inverted element");
        const double q = model.failure_exponent();
        const double w = q == 0.0 ? 1.0 : std::pow(x, q);
        const double dw = q == 0.0 ? 0.0 : q * std::pow(x, q - 1.0);
        const Vec8 dEdu = w * g * g * ed.gradient;
        const auto dofs = model.element_dofs(e);
        for (int a = 0; a < 8; ++a) r.d_u[dofs[a]] += d_theta_dE[e] * dEdu[a];
        const double dg = fem::gamma_derivative(x, model.interpolation());
        r.d_x[e] = d_theta_dE[e] * (dw * g * ed.mean + w * dg * (ed.mean + g * ed.gradient.dot(ue)));
    }
    return r;
}

Eigen::VectorXd density_gradient(const AdjointSystem& sys, const ResponseDerivatives& r,
                                 double* adjoint_residual) {
    const Eigen::VectorXd lambda = sys.adjoint_solve(r.d_u, 1e-10, adjoint_residual);
    return sys.total_density_sensitivity(r, lambda);
}

Eigen::VectorXd chain_to_geometry(const Eigen::VectorXd& d_x, const Eigen::VectorXd& mask,
                                  const density::Symmetrizer* sym, const Eigen::MatrixXd& J) {
    if (d_x.size() != J.rows() || (mask.size() && mask.size() != d_x.size()))
        throw std::invalid_argument("chain_to_geometry: dimension mismatch");
    Eigen::VectorXd v = mask.size() ? Eigen::VectorXd(d_x.cwiseProduct(mask)) : d_x;
    if (sym) v = sym->accumulate(v);
    return J.transpose() * v;
}

}  // namespace stretchopt::opt
