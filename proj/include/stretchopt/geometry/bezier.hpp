#pragma once

#include <Eigen/Core>

#include <limits>
#include <stdexcept>
#include <vector>

namespace stretchopt::geometry {

using Point = Eigen::Vector2d;

/// Raised when the distance derivative is requested at (numerically) zero
/// distance, where d is not differentiable.
class SingularGradient : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Binomial coefficient C(n, i) as a double.
double binomial(int n, int i);

/// Bernstein basis polynomial B_i^n(t). Throws std::invalid_argument for
/// i outside [0, n] or t outside [0, 1].
double bernstein(int n, int i, double t);

/// All n+1 Bernstein values at t.
Eigen::VectorXd bernstein_all(int n, double t);

/// First derivative dB_i^n/dt for all i.
Eigen::VectorXd bernstein_all_d1(int n, double t);

/// A thick Bezier skeleton: a degree-n curve with a segment density and a
/// half-width used by the Heaviside mapping.
struct BezierComponent {
    std::vector<Point> control_points;
    double rho_bar = 0.5;
    double w = 2.5;

    int degree() const { return static_cast<int>(control_points.size()) - 1; }

    /// Throws std::invalid_argument when the component is malformed.
    void validate(double w_min = 0.0, double w_max = std::numeric_limits<double>::infinity()) const;
};

Point eval(const BezierComponent& curve, double t);
Point eval_d1(const BezierComponent& curve, double t);
Point eval_d2(const BezierComponent& curve, double t);

struct ProjectionResult {
    double t0 = 0.0;
    double distance = 0.0;
    Point foot = Point::Zero();
    bool interior = false;
};

/// Orthogonality residual (x(t)-p).x'(t) whose roots are the interior
/// stationary points of the squared distance.
double orthogonality_residual(const BezierComponent& curve, const Point& p, double t);

/// Closest point on the curve to p. Samples the orthogonality residual,
/// refines every bracket and sampled local minimum with safeguarded Newton,
/// and compares against both endpoints. Ties go to the smaller parameter.
ProjectionResult project_point(const BezierComponent& curve, const Point& p);

/// Derivatives of the minimum distance w.r.t. control coordinates, laid out
/// as [d/da_0, d/db_0, d/da_1, d/db_1, ...].
struct DistanceGradient {
    Eigen::VectorXd d_distance;
    /// dt0/d(a_i, b_i) in the same layout; zero when t0 is an endpoint.
    Eigen::VectorXd d_t0;
};

DistanceGradient distance_gradient(const BezierComponent& curve, const Point& p,
                                   const ProjectionResult& proj);

}  // namespace stretchopt::geometry
