#pragma once

#include <Eigen/Core>

#include <stdexcept>

namespace stretchopt::opt {

class MmaFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MmaSettings {
    double asyinit = 0.5;
    double asyincr = 1.2;
    double asydecr = 0.7;
    double albefa = 0.1;
    double raa0 = 1e-5;
    double a0 = 1.0;
    double c = 1000.0;  // penalty on the elastic constraint slacks
    double d = 1.0;
    double epsimin = 1e-7;
    int max_retries = 3;
};

/// Method of moving asymptotes for
///   min f0(x)  s.t.  f_i(x) <= 0,  lower <= x <= upper,
/// with an additional move limit |x_new - x| <= move * (upper - lower).
class Mma {
public:
    Mma(int n, int m, Eigen::VectorXd lower, Eigen::VectorXd upper, MmaSettings settings = {});

    /// One outer iteration. df has m rows and n columns.
    Eigen::VectorXd step(const Eigen::VectorXd& x, double f0, const Eigen::VectorXd& df0,
                         const Eigen::VectorXd& f, const Eigen::MatrixXd& df, double move);
    /// Per-variable move limits, as fractions of each range.
    Eigen::VectorXd step(const Eigen::VectorXd& x, double f0, const Eigen::VectorXd& df0,
                         const Eigen::VectorXd& f, const Eigen::MatrixXd& df, const Eigen::VectorXd& move);

    int n() const { return n_; }
    int m() const { return m_; }
    int iteration() const { return iter_; }
    const Eigen::VectorXd& lower_asymptote() const { return low_; }
    const Eigen::VectorXd& upper_asymptote() const { return upp_; }
    /// Largest move limit actually used by the last step (after any retries).
    double last_move() const { return last_move_; }

    /// Forget the history, e.g. after a rejected design.
    void reset_history();

private:
    bool subproblem(const Eigen::VectorXd& x, const Eigen::VectorXd& df0, const Eigen::VectorXd& f,
                    const Eigen::MatrixXd& df, const Eigen::VectorXd& move, const Eigen::VectorXd& low,
                    const Eigen::VectorXd& upp, Eigen::VectorXd& x_out) const;

    int n_, m_;
    Eigen::VectorXd lower_, upper_;
    MmaSettings s_;
    int iter_ = 0;
    Eigen::VectorXd xold1_, xold2_, low_, upp_;
    double last_move_ = 0.0;
};

}  // namespace stretchopt::opt
