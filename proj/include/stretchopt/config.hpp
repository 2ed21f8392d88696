#pragma once

#include "stretchopt/density/projection.hpp"
#include "stretchopt/fem/model.hpp"
#include "stretchopt/pbc/constraints.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>

namespace stretchopt {

/// Raised by RunConfig::validate; key() names the offending entry.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

struct RunConfig {
    // grid
    int nx = 100;
    int ny = 100;
    double h = 1.0;

    // material
    double A10 = 34.0;
    double A01 = 5.8;
    double K = 2000.0;

    // loading; u_bar < 0 means 30% of the cell width
    pbc::LoadKind load = pbc::LoadKind::uniaxial;
    double u_bar = -1.0;
    double alpha = 1e8;

    // responses
    double energy_limit = 1.1;
    double volume_fraction = 0.3;
    double energy_p = 10.0;
    double c_eta = 0.5;
    double c_init = 1.0;
    bool failure_constraint = true;
    double failure_exponent = 3.0;  // density weight x^q on the failure measure

    // geometry projection and interpolation
    double beta = 5.0;
    double composite_p = 10.0;
    double rho_min = 1e-5;
    double beta1 = 500.0;
    double x0 = 0.01;
    double pl = 3.0;
    double eps = 1e-5;
    bool symmetric = true;

    // design
    int n_components = 15;
    int degree = 4;
    double w_min = 2.0;
    double w_max = 3.0;
    double layout_jitter = 0.0;  // fraction of h applied to initial control points

    // main loop
    double move_limit = 0.01;
    int max_iterations = 200;
    double change_tol = 1e-4;
    int converge_window = 5;
    int max_rejections = 5;

    // warm start and identification
    bool warmstart = true;
    int warmstart_iterations = 10;
    double warmstart_move = 0.2;
    double warmstart_filter = 1.5;  // radius in elements, 0 disables
    bool identify = true;
    int identify_iterations = 150;

    // nonlinear solver
    fem::SolverSettings solver;

    // gradient check
    double fd_step = 1e-6;  // fraction of each variable's range

    std::uint64_t seed = 0;
    std::string output_dir = "out";
    std::string initial_design;  // optional skeleton file

    density::Grid grid() const { return {nx, ny, h}; }
    fem::Material material() const { return {A10, A01, K}; }
    fem::InterpolationParams interpolation() const { return {x0, beta1, pl, eps}; }
    density::ProjectionParams projection() const { return {beta, composite_p, 0.0}; }
    pbc::LoadCase load_case() const { return {load, effective_u_bar()}; }
    double effective_u_bar() const { return u_bar < 0.0 ? 0.3 * nx * h : u_bar; }

    /// Throws ConfigError naming the first invalid key.
    void validate() const;
};

}  // namespace stretchopt
