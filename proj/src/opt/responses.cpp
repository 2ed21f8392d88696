#include "stretchopt/opt/responses.hpp"

#include <cmath>

namespace stretchopt::opt {

double reaction_objective(const fem::SolveResult& state, const Eigen::VectorXd& l) {
    if (!state.converged()) throw StaleState("reaction_objective: state is not converged");
    if (state.f_int.size() != l.size()) throw std::invalid_argument("reaction_objective: size mismatch");
    return l.dot(state.f_int);
}

double mean_pnorm(const Eigen::VectorXd& E, double E_bar, double p) {
    if (E.size() == 0) return 0.0;
    const double m = E.maxCoeff() / E_bar;
    if (m <= 0.0) return 0.0;
    double s = 0.0;
    for (Eigen::Index i = 0; i < E.size(); ++i) s += std::pow(std::max(E[i], 0.0) / E_bar / m, p);
    return m * std::pow(s / static_cast<double>(E.size()), 1.0 / p);
}

Eigen::VectorXd mean_pnorm_gradient(const Eigen::VectorXd& E, double E_bar, double p) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(E.size());
    const double pn = mean_pnorm(E, E_bar, p);
    if (pn <= 0.0) return g;
    const double n = static_cast<double>(E.size());
    for (Eigen::Index i = 0; i < E.size(); ++i)
        g[i] = std::pow(std::max(E[i], 0.0) / E_bar / pn, p - 1.0) / (n * E_bar);
    return g;
}

EnergyConstraint energy_pnorm_constraint(const Eigen::VectorXd& E, double E_bar, double p, double c,
                                         double eta) {
    if (!(E_bar > 0.0)) throw std::invalid_argument("energy_pnorm_constraint: E_bar must be positive");
    if (!(c > 0.0)) throw std::invalid_argument("energy_pnorm_constraint: c must be positive");
    EnergyConstraint out;
    out.pn = mean_pnorm(E, E_bar, p);
    out.max_energy = E.size() ? E.maxCoeff() : 0.0;
    out.c = c;
    out.g = c * out.pn;
    out.c_next = out.pn > 0.0 ? eta * out.max_energy / (E_bar * out.pn) + (1.0 - eta) * c : c;
    return out;
}

double volume_constraint(const Eigen::VectorXd& rho, double v_target) {
    if (rho.size() == 0) return -v_target;
    return rho.mean() - v_target;
}

}  // namespace stretchopt::opt
