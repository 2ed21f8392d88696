#include "stretchopt/fem/element.hpp"

#include <Eigen/LU>

#include <cmath>

namespace stretchopt::fem {

namespace {

constexpr double kXiNode[4] = {-1.0, 1.0, 1.0, -1.0};
constexpr double kEtaNode[4] = {-1.0, -1.0, 1.0, 1.0};

// Green-Lagrange variation matrix (Voigt 11, 22, 2*12) at deformation F.
Eigen::Matrix<double, 3, 8> strain_operator(const Eigen::Matrix2d& F,
                                            const Eigen::Matrix<double, 2, 4>& dN) {
    Eigen::Matrix<double, 3, 8> B;
    for (int a = 0; a < 4; ++a) {
        const double n1 = dN(0, a);
        const double n2 = dN(1, a);
        B(0, 2 * a) = F(0, 0) * n1;
        B(0, 2 * a + 1) = F(1, 0) * n1;
        B(1, 2 * a) = F(0, 1) * n2;
        B(1, 2 * a + 1) = F(1, 1) * n2;
        B(2, 2 * a) = F(0, 0) * n2 + F(0, 1) * n1;
        B(2, 2 * a + 1) = F(1, 0) * n2 + F(1, 1) * n1;
    }
    return B;
}

}  // namespace

QuadGeometry::QuadGeometry(double h_) : h(h_) {
    const double q = 1.0 / std::sqrt(3.0);
    gauss_xi = {Eigen::Vector2d(-q, -q), Eigen::Vector2d(q, -q), Eigen::Vector2d(q, q),
                Eigen::Vector2d(-q, q)};
    for (int gp = 0; gp < 4; ++gp) dNdX[gp] = shape_gradient(gauss_xi[gp]);
    weight = 0.25 * h * h;
}

Eigen::Vector4d QuadGeometry::shape(const Eigen::Vector2d& xi) const {
    Eigen::Vector4d N;
    for (int a = 0; a < 4; ++a) N[a] = 0.25 * (1.0 + xi[0] * kXiNode[a]) * (1.0 + xi[1] * kEtaNode[a]);
    return N;
}

Eigen::Matrix<double, 2, 4> QuadGeometry::shape_gradient(const Eigen::Vector2d& xi) const {
    Eigen::Matrix<double, 2, 4> d;
    for (int a = 0; a < 4; ++a) {
        d(0, a) = 0.25 * kXiNode[a] * (1.0 + xi[1] * kEtaNode[a]) * 2.0 / h;
        d(1, a) = 0.25 * kEtaNode[a] * (1.0 + xi[0] * kXiNode[a]) * 2.0 / h;
    }
    return d;
}

Eigen::Matrix2d deformation_gradient_unchecked(const QuadGeometry& g, const Vec8& u_e, int gp) {
    Eigen::Matrix2d F = Eigen::Matrix2d::Identity();
    for (int a = 0; a < 4; ++a) {
        F(0, 0) += u_e[2 * a] * g.dNdX[gp](0, a);
        F(0, 1) += u_e[2 * a] * g.dNdX[gp](1, a);
        F(1, 0) += u_e[2 * a + 1] * g.dNdX[gp](0, a);
        F(1, 1) += u_e[2 * a + 1] * g.dNdX[gp](1, a);
    }
    return F;
}

Eigen::Matrix2d deformation_gradient(const QuadGeometry& g, const Vec8& u_e, int gp) {
    const Eigen::Matrix2d F = deformation_gradient_unchecked(g, u_e, gp);
    if (!(F.determinant() > 0.0)) throw ElementInversion("deformation_gradient: det F <= 0");
    return F;
}

ElementResponse nonlinear_element(const QuadGeometry& g, const Material& mat, const Vec8& u_e,
                                  bool with_tangent) {
    ElementResponse r;
    for (int gp = 0; gp < 4; ++gp) {
        const Eigen::Matrix2d F = deformation_gradient_unchecked(g, u_e, gp);
        if (!(F.determinant() > 0.0)) {
            r.inverted = true;
            return r;
        }
        const auto& dN = g.dNdX[gp];
        r.energy += g.weight * mr_energy(invariants(F), mat);
        const PlaneStressTangent st = mr_stress_tangent(F, mat, with_tangent);
        const Eigen::Matrix<double, 3, 8> B = strain_operator(F, dN);
        const Eigen::Vector3d Sv(st.S(0, 0), st.S(1, 1), st.S(0, 1));
        r.force.noalias() += g.weight * B.transpose() * Sv;
        if (with_tangent) {
            r.stiffness.noalias() += g.weight * B.transpose() * st.D * B;
            const Eigen::Matrix4d G = dN.transpose() * st.S * dN;
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) {
                    r.stiffness(2 * a, 2 * b) += g.weight * G(a, b);
                    r.stiffness(2 * a + 1, 2 * b + 1) += g.weight * G(a, b);
                }
        }
    }
    return r;
}

Mat8 linear_stiffness(const QuadGeometry& g, const Eigen::Matrix3d& D) {
    Mat8 K = Mat8::Zero();
    for (int gp = 0; gp < 4; ++gp) {
        const Eigen::Matrix<double, 3, 8> B = strain_operator(Eigen::Matrix2d::Identity(), g.dNdX[gp]);
        K.noalias() += g.weight * B.transpose() * D * B;
    }
    return K;
}

EnergyDensity mean_energy_density(const QuadGeometry& g, const Material& mat, const Vec8& u_e) {
    EnergyDensity out;
    for (int gp = 0; gp < 4; ++gp) {
        const Eigen::Matrix2d F = deformation_gradient_unchecked(g, u_e, gp);
        if (!(F.determinant() > 0.0)) {
            out.inverted = true;
            return out;
        }
        out.mean += 0.25 * mr_energy(invariants(F), mat);
        const PlaneStressTangent st = mr_stress_tangent(F, mat, false);
        const Eigen::Vector3d Sv(st.S(0, 0), st.S(1, 1), st.S(0, 1));
        out.gradient.noalias() += 0.25 * strain_operator(F, g.dNdX[gp]).transpose() * Sv;
    }
    return out;
}

double gamma_factor(double x, const InterpolationParams& p) {
    const double a = std::tanh(p.beta1 * p.x0);
    return (a + std::tanh(p.beta1 * (x - p.x0))) / (a + std::tanh(p.beta1 * (1.0 - p.x0)));
}

double gamma_derivative(double x, const InterpolationParams& p) {
    const double a = std::tanh(p.beta1 * p.x0);
    const double t = std::tanh(p.beta1 * (x - p.x0));
    return p.beta1 * (1.0 - t * t) / (a + std::tanh(p.beta1 * (1.0 - p.x0)));
}

double energy_scale(double x, const InterpolationParams& p) {
    return std::pow(x, p.pl) * (1.0 - p.eps) + p.eps;
}

double energy_scale_derivative(double x, const InterpolationParams& p) {
    return p.pl * std::pow(x, p.pl - 1.0) * (1.0 - p.eps);
}

InterpolatedResponse interpolated_element(const QuadGeometry& g, const Material& mat,
                                          const Mat8& K_lin, const InterpolationParams& ip,
                                          const Vec8& u_e, double x, bool with_tangent,
                                          bool with_density_derivative) {
    InterpolatedResponse r;
    r.gamma = gamma_factor(x, ip);
    r.scale = energy_scale(x, ip);
    const double gm = r.gamma;
    const double E = r.scale;
    const Vec8 gu = gm * u_e;
    const ElementResponse nl =
        nonlinear_element(g, mat, gu, with_tangent || with_density_derivative);
    if (nl.inverted) {
        r.inverted = true;
        return r;
    }
    const Vec8 KLu = K_lin * u_e;
    const double lin_energy = 0.5 * u_e.dot(KLu);
    r.energy = E * (nl.energy - gm * gm * lin_energy + lin_energy);
    r.force = E * (gm * nl.force - gm * gm * KLu + KLu);
    if (with_tangent) r.stiffness = E * (gm * gm * nl.stiffness + (1.0 - gm * gm) * K_lin);
    if (with_density_derivative) {
        const double dE = energy_scale_derivative(x, ip);
        const double dg = gamma_derivative(x, ip);
        const Vec8 df_dgamma = nl.force + gm * (nl.stiffness * u_e) - 2.0 * gm * KLu;
        r.force_density_derivative = dE * (gm * nl.force - gm * gm * KLu + KLu) + E * dg * df_dgamma;
    }
    return r;
}

}  // namespace stretchopt::fem
