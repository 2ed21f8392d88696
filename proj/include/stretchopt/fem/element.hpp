#pragma once

#include "stretchopt/fem/material.hpp"

#include <Eigen/Core>

#include <array>
#include <stdexcept>

namespace stretchopt::fem {

using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat8 = Eigen::Matrix<double, 8, 8>;

class ElementInversion : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bilinear square element of edge h, local nodes ordered counter-clockwise
/// from the lower-left corner, dofs [ux0, uy0, ux1, uy1, ...]. 2x2 Gauss rule.
struct QuadGeometry {
    double h = 1.0;
    std::array<Eigen::Matrix<double, 2, 4>, 4> dNdX;  // per Gauss point
    std::array<Eigen::Vector2d, 4> gauss_xi;
    double weight = 0.25;                             // detJ * Gauss weight

    explicit QuadGeometry(double h = 1.0);

    Eigen::Vector4d shape(const Eigen::Vector2d& xi) const;
    Eigen::Matrix<double, 2, 4> shape_gradient(const Eigen::Vector2d& xi) const;
};

/// F = I + grad_0 u at the given Gauss point. Throws ElementInversion when
/// det F <= 0.
Eigen::Matrix2d deformation_gradient(const QuadGeometry& g, const Vec8& u_e, int gp);

/// Same without the inversion check.
Eigen::Matrix2d deformation_gradient_unchecked(const QuadGeometry& g, const Vec8& u_e, int gp);

struct ElementResponse {
    double energy = 0.0;
    Vec8 force = Vec8::Zero();
    Mat8 stiffness = Mat8::Zero();
    bool inverted = false;
};

/// Nonlinear total-Lagrangian element: integral of psi, its gradient and
/// Hessian in u_e.
ElementResponse nonlinear_element(const QuadGeometry& g, const Material& mat, const Vec8& u_e,
                                  bool with_tangent = true);

/// Small-strain stiffness of the linearized law.
Mat8 linear_stiffness(const QuadGeometry& g, const Eigen::Matrix3d& D);

/// Mean over the Gauss points of psi(F(u_e)) and its gradient in u_e.
struct EnergyDensity {
    double mean = 0.0;
    Vec8 gradient = Vec8::Zero();
    bool inverted = false;
};

EnergyDensity mean_energy_density(const QuadGeometry& g, const Material& mat, const Vec8& u_e);

struct InterpolationParams {
    double x0 = 0.01;
    double beta1 = 500.0;
    double pl = 3.0;
    double eps = 1e-5;
};

/// Nonlinear/linear blending factor driven by the physical density.
double gamma_factor(double x, const InterpolationParams& p);
double gamma_derivative(double x, const InterpolationParams& p);

/// Stiffness scale x^pl (1 - eps) + eps.
double energy_scale(double x, const InterpolationParams& p);
double energy_scale_derivative(double x, const InterpolationParams& p);

struct InterpolatedResponse : ElementResponse {
    /// d(force)/dx at fixed u_e.
    Vec8 force_density_derivative = Vec8::Zero();
    double gamma = 1.0;
    double scale = 1.0;
};

/// Energy interpolation [Phi(g u) - Phi_L(g u) + Phi_L(u)] * E with
/// g = gamma_factor(x) and E = energy_scale(x).
InterpolatedResponse interpolated_element(const QuadGeometry& g, const Material& mat,
                                          const Mat8& K_lin, const InterpolationParams& ip,
                                          const Vec8& u_e, double x, bool with_tangent = true,
                                          bool with_density_derivative = false);

}  // namespace stretchopt::fem
