#pragma once

#include "stretchopt/fem/model.hpp"

#include <Eigen/Core>

#include <stdexcept>

namespace stretchopt::opt {

class StaleState : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ConstraintReport {
    double objective = 0.0;
    double volume_fraction = 0.0;
    double pnorm_energy = 0.0;   // c * mean-p-norm of E_i / E_bar
    double max_element_energy = 0.0;
    double c = 1.0;
};

/// l^T f_int at a converged state. Throws StaleState otherwise.
double reaction_objective(const fem::SolveResult& state, const Eigen::VectorXd& l);

/// Unscaled mean p-norm [(1/N) sum (E_i / E_bar)^p]^(1/p).
double mean_pnorm(const Eigen::VectorXd& E, double E_bar, double p);

/// d mean_pnorm / d E_i.
Eigen::VectorXd mean_pnorm_gradient(const Eigen::VectorXd& E, double E_bar, double p);

struct EnergyConstraint {
    double g = 0.0;       // c * PN
    double pn = 0.0;      // unscaled mean p-norm
    double max_energy = 0.0;
    double c = 1.0;       // scale used for g
    double c_next = 1.0;  // adaptive update for the next evaluation
};

/// g = c [(1/N) sum (E_i/E_bar)^p]^(1/p) and the next scale
/// c' = eta max_i E_i / (E_bar PN) + (1 - eta) c.
EnergyConstraint energy_pnorm_constraint(const Eigen::VectorXd& E, double E_bar, double p, double c,
                                         double eta = 0.5);

/// V / |Omega| - v_target for per-element physical densities on equal-area elements.
double volume_constraint(const Eigen::VectorXd& rho, double v_target);

}  // namespace stretchopt::opt
