#include "stretchopt/geometry/bezier.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace stretchopt::geometry {

namespace {

constexpr int kSamples = 64;
constexpr int kMaxNewton = 30;

double ipow(double x, int k) {
    double r = 1.0;
    for (int j = 0; j < k; ++j) r *= x;
    return r;
}

// Position, first and second parametric derivative in one pass using the
// forward differences of the control polygon.
struct CurveJet {
    Point x, dx, ddx;
};

CurveJet jet(const BezierComponent& c, double t) {
    const int n = c.degree();
    CurveJet j{Point::Zero(), Point::Zero(), Point::Zero()};
    const Eigen::VectorXd b = bernstein_all(n, t);
    for (int i = 0; i <= n; ++i) j.x += b[i] * c.control_points[i];
    if (n >= 1) {
        const Eigen::VectorXd b1 = bernstein_all(n - 1, t);
        for (int i = 0; i < n; ++i)
            j.dx += n * b1[i] * (c.control_points[i + 1] - c.control_points[i]);
    }
    if (n >= 2) {
        const Eigen::VectorXd b2 = bernstein_all(n - 2, t);
        for (int i = 0; i + 1 < n; ++i) {
            const Point second = c.control_points[i + 2] - 2.0 * c.control_points[i + 1] +
                                 c.control_points[i];
            j.ddx += n * (n - 1) * b2[i] * second;
        }
    }
    return j;
}

double extent(const BezierComponent& c) {
    Point lo = c.control_points.front();
    Point hi = lo;
    for (const auto& q : c.control_points) {
        lo = lo.cwiseMin(q);
        hi = hi.cwiseMax(q);
    }
    return (hi - lo).norm();
}

struct Candidate {
    double t;
    double dist2;
};

// Safeguarded Newton on the orthogonality residual. With a bracket the
// iterate never leaves [lo, hi]; without one it is clamped to [0, 1].
double refine(const BezierComponent& c, const Point& p, double t, double lo, double hi,
              bool bracketed, double tol) {
    double glo = bracketed ? orthogonality_residual(c, p, lo) : 0.0;
    for (int it = 0; it < kMaxNewton; ++it) {
        const CurveJet j = jet(c, t);
        const Point diff = j.x - p;
        const double g = diff.dot(j.dx);
        if (std::abs(g) <= tol) break;
        const double dg = j.dx.squaredNorm() + diff.dot(j.ddx);
        if (bracketed) {
            if ((g < 0.0) == (glo < 0.0)) {
                lo = t;
                glo = g;
            } else {
                hi = t;
            }
        }
        double next = (dg != 0.0) ? t - g / dg : t;
        if (bracketed) {
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        } else {
            if (dg <= 0.0) break;
            next = std::clamp(next, 0.0, 1.0);
        }
        if (std::abs(next - t) <= 1e-16) {
            t = next;
            break;
        }
        t = next;
    }
    return t;
}

}  // namespace

double binomial(int n, int i) {
    if (i < 0 || i > n) return 0.0;
    double r = 1.0;
    for (int k = 1; k <= i; ++k) r = r * (n - i + k) / k;
    return r;
}

double bernstein(int n, int i, double t) {
    if (n < 0 || i < 0 || i > n)
        throw std::invalid_argument("bernstein: index " + std::to_string(i) +
                                    " outside [0, " + std::to_string(n) + "]");
    if (!(t >= 0.0 && t <= 1.0))
        throw std::invalid_argument("bernstein: parameter outside [0, 1]");
    return binomial(n, i) * ipow(t, i) * ipow(1.0 - t, n - i);
}

Eigen::VectorXd bernstein_all(int n, double t) {
    Eigen::VectorXd b(n + 1);
    for (int i = 0; i <= n; ++i) b[i] = binomial(n, i) * ipow(t, i) * ipow(1.0 - t, n - i);
    return b;
}

Eigen::VectorXd bernstein_all_d1(int n, double t) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n + 1);
    if (n == 0) return d;
    const Eigen::VectorXd b = bernstein_all(n - 1, t);
    for (int i = 0; i <= n; ++i) {
        const double left = (i >= 1) ? b[i - 1] : 0.0;
        const double right = (i <= n - 1) ? b[i] : 0.0;
        d[i] = n * (left - right);
    }
    return d;
}

void BezierComponent::validate(double w_min, double w_max) const {
    if (control_points.size() < 2)
        throw std::invalid_argument("BezierComponent: degree must be at least 1");
    for (const auto& q : control_points)
        if (!q.allFinite()) throw std::invalid_argument("BezierComponent: non-finite control point");
    if (!(rho_bar >= 0.0 && rho_bar <= 1.0))
        throw std::invalid_argument("BezierComponent: rho_bar outside [0, 1]");
    if (!(w > 0.0) || w < w_min || w > w_max)
        throw std::invalid_argument("BezierComponent: half-width outside bounds");
}

Point eval(const BezierComponent& curve, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("eval: parameter outside [0, 1]");
    return jet(curve, t).x;
}

Point eval_d1(const BezierComponent& curve, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("eval_d1: parameter outside [0, 1]");
    return jet(curve, t).dx;
}

Point eval_d2(const BezierComponent& curve, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("eval_d2: parameter outside [0, 1]");
    return jet(curve, t).ddx;
}

double orthogonality_residual(const BezierComponent& curve, const Point& p, double t) {
    const CurveJet j = jet(curve, t);
    return (j.x - p).dot(j.dx);
}

ProjectionResult project_point(const BezierComponent& curve, const Point& p) {
    const double s = extent(curve);
    if (s <= 1e-14 * (1.0 + curve.control_points.front().norm())) {
        const Point q = curve.control_points.front();
        return {0.0, (q - p).norm(), q, false};
    }

    std::array<double, kSamples> ts{};
    std::array<double, kSamples> gs{};
    std::array<double, kSamples> ds{};
    for (int k = 0; k < kSamples; ++k) {
        ts[k] = static_cast<double>(k) / (kSamples - 1);
        const CurveJet j = jet(curve, ts[k]);
        const Point diff = j.x - p;
        gs[k] = diff.dot(j.dx);
        ds[k] = diff.squaredNorm();
    }

    const double tol = 1e-13 * s * (s + std::sqrt(ds[0]));
    std::vector<Candidate> cands;
    cands.push_back({0.0, ds[0]});
    cands.push_back({1.0, ds[kSamples - 1]});
    auto add = [&](double t) {
        const Point q = jet(curve, t).x;
        cands.push_back({t, (q - p).squaredNorm()});
    };
    for (int k = 0; k + 1 < kSamples; ++k) {
        if ((gs[k] < 0.0) != (gs[k + 1] < 0.0))
            add(refine(curve, p, 0.5 * (ts[k] + ts[k + 1]), ts[k], ts[k + 1], true, tol));
    }
    for (int k = 1; k + 1 < kSamples; ++k) {
        if (ds[k] <= ds[k - 1] && ds[k] <= ds[k + 1])
            add(refine(curve, p, ts[k], ts[k - 1], ts[k + 1], false, tol));
    }

    std::sort(cands.begin(), cands.end(),
              [](const Candidate& a, const Candidate& b) { return a.t < b.t; });
    Candidate best = cands.front();
    for (const auto& c : cands)
        if (c.dist2 < best.dist2) best = c;

    ProjectionResult r;
    r.t0 = best.t;
    r.foot = jet(curve, best.t).x;
    r.distance = (r.foot - p).norm();
    r.interior = best.t != 0.0 && best.t != 1.0;
    return r;
}

DistanceGradient distance_gradient(const BezierComponent& curve, const Point& p,
                                   const ProjectionResult& proj) {
    if (proj.distance < 1e-12)
        throw SingularGradient("distance_gradient: point lies on the skeleton");
    const int n = curve.degree();
    DistanceGradient g{Eigen::VectorXd::Zero(2 * (n + 1)), Eigen::VectorXd::Zero(2 * (n + 1))};
    const CurveJet j = jet(curve, proj.t0);
    const Point diff = j.x - p;
    const double d = diff.norm();
    const Eigen::VectorXd b = bernstein_all(n, proj.t0);

    for (int i = 0; i <= n; ++i) {
        g.d_distance[2 * i] = diff.x() * b[i] / d;
        g.d_distance[2 * i + 1] = diff.y() * b[i] / d;
    }
    if (!proj.interior) return g;

    // Implicit dependence of t0 on the control points through the
    // orthogonality condition; P is the same for both coordinates.
    const double P = j.dx.squaredNorm() + diff.dot(j.ddx);
    const double s = extent(curve);
    if (std::abs(P) <= 1e-14 * s * s) return g;
    const Eigen::VectorXd b1 = bernstein_all_d1(n, proj.t0);
    const double ortho = diff.dot(j.dx);
    for (int i = 0; i <= n; ++i) {
        const double qa = b[i] * j.dx.x() + diff.x() * b1[i];
        const double qb = b[i] * j.dx.y() + diff.y() * b1[i];
        g.d_t0[2 * i] = -qa / P;
        g.d_t0[2 * i + 1] = -qb / P;
        g.d_distance[2 * i] += ortho * g.d_t0[2 * i] / d;
        g.d_distance[2 * i + 1] += ortho * g.d_t0[2 * i + 1] / d;
    }
    return g;
}

}  // namespace stretchopt::geometry
