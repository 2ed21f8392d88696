#include "stretchopt/config.hpp"

#include <cmath>

namespace stretchopt {

namespace {

void positive(const char* key, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(key, "must be positive");
}

void in_range(const char* key, double v, double lo, double hi) {
    if (!(v >= lo && v <= hi)) throw ConfigError(key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

}  // namespace

void RunConfig::validate() const {
    if (nx < 2) throw ConfigError("nx", "must be at least 2");
    if (ny < 2) throw ConfigError("ny", "must be at least 2");
    if (symmetric && (nx % 2 || ny % 2)) throw ConfigError(nx % 2 ? "nx" : "ny", "must be even when symmetric");
    positive("h", h);
    positive("A10", A10);
    if (!(A01 >= 0.0)) throw ConfigError("A01", "must be non-negative");
    positive("K", K);
    if (u_bar >= 0.0 && !std::isfinite(u_bar)) throw ConfigError("u_bar", "must be finite");
    if (u_bar >= 0.0 && u_bar >= 0.9 * nx * h) throw ConfigError("u_bar", "must be below 90% of the cell width");
    positive("alpha", alpha);
    positive("energy_limit", energy_limit);
    in_range("volume_fraction", volume_fraction, 1e-3, 1.0);
    if (!(energy_p >= 1.0)) throw ConfigError("energy_p", "must be >= 1");
    in_range("c_eta", c_eta, 0.0, 1.0);
    positive("c_init", c_init);
    if (!(failure_exponent >= 0.0 && failure_exponent <= 6.0)) throw ConfigError("failure_exponent", "must lie in [0, 6]");
    positive("beta", beta);
    if (!(composite_p >= 1.0)) throw ConfigError("composite_p", "must be >= 1");
    in_range("rho_min", rho_min, 1e-12, 0.1);
    positive("beta1", beta1);
    in_range("x0", x0, 1e-9, 0.5);
    positive("pl", pl);
    in_range("eps", eps, 1e-12, 0.1);
    if (n_components < 1) throw ConfigError("n_components", "must be at least 1");
    if (degree < 1 || degree > 10) throw ConfigError("degree", "must lie in [1, 10]");
    positive("w_min", w_min);
    if (!(w_max > w_min)) throw ConfigError("w_max", "must exceed w_min");
    if (!(layout_jitter >= 0.0)) throw ConfigError("layout_jitter", "must be non-negative");
    in_range("move_limit", move_limit, 1e-6, 1.0);
    if (max_iterations < 0) throw ConfigError("max_iterations", "must be non-negative");
    positive("change_tol", change_tol);
    if (converge_window < 1) throw ConfigError("converge_window", "must be at least 1");
    if (max_rejections < 1) throw ConfigError("max_rejections", "must be at least 1");
    if (warmstart_iterations < 0) throw ConfigError("warmstart_iterations", "must be non-negative");
    in_range("warmstart_move", warmstart_move, 1e-6, 1.0);
    if (!(warmstart_filter >= 0.0)) throw ConfigError("warmstart_filter", "must be non-negative");
    if (identify_iterations < 0) throw ConfigError("identify_iterations", "must be non-negative");
    if (solver.n_load_steps < 1) throw ConfigError("n_load_steps", "must be at least 1");
    if (!(solver.newton_tol > 0.0 && solver.newton_tol <= 1e-2)) throw ConfigError("newton_tol", "must lie in (0, 1e-2]");
    if (solver.max_newton_iters < 1) throw ConfigError("max_newton_iters", "must be at least 1");
    if (solver.max_cutbacks < 0) throw ConfigError("max_cutbacks", "must be non-negative");
    in_range("fd_step", fd_step, 1e-12, 1e-2);
    if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
}

}  // namespace stretchopt
