#include "stretchopt/fem/material.hpp"

#include <Eigen/LU>

#include <cmath>
#include <stdexcept>

namespace stretchopt::fem {

void Material::validate() const {
    if (!(A10 > 0.0)) throw std::invalid_argument("Material: A10 must be positive");
    if (!(A01 >= 0.0)) throw std::invalid_argument("Material: A01 must be non-negative");
    if (!(K > 0.0)) throw std::invalid_argument("Material: K must be positive");
}

Invariants invariants(const Eigen::Matrix3d& C) {
    return {C.trace(), (C.array() * C.array()).sum(), C.determinant()};
}

Eigen::Matrix3d embed_plane_strain_C(const Eigen::Matrix2d& F) {
    Eigen::Matrix3d C = Eigen::Matrix3d::Zero();
    C.topLeftCorner<2, 2>() = F.transpose() * F;
    C(2, 2) = 1.0;
    return C;
}

Invariants invariants(const Eigen::Matrix2d& F) { return invariants(embed_plane_strain_C(F)); }

double mr_energy(const Invariants& inv, const Material& mat) {
    const double J = std::sqrt(inv.I3);
    return mat.A10 * (inv.I1 * std::pow(inv.I3, -1.0 / 3.0) - 3.0) +
           mat.A01 * (inv.I2 * std::pow(inv.I3, -2.0 / 3.0) - 3.0) +
           0.5 * mat.K * (J - 1.0) * (J - 1.0);
}

double mr_energy(const Eigen::Matrix3d& C, const Material& mat) {
    return mr_energy(invariants(C), mat);
}

namespace {

// dpsi/dC = a1 I + a2 C + a3 C^-1
struct Coefficients {
    double a1, a2, a3;
    double I1, I2, I3, J, i13, i23;
};

Coefficients coefficients(const Eigen::Matrix3d& C, const Material& mat) {
    const Invariants inv = invariants(C);
    Coefficients c{};
    c.I1 = inv.I1;
    c.I2 = inv.I2;
    c.I3 = inv.I3;
    c.J = std::sqrt(inv.I3);
    c.i13 = std::pow(inv.I3, -1.0 / 3.0);
    c.i23 = c.i13 * c.i13;
    c.a1 = mat.A10 * c.i13;
    c.a2 = 2.0 * mat.A01 * c.i23;
    c.a3 = -mat.A10 * c.I1 * c.i13 / 3.0 - 2.0 * mat.A01 * c.I2 * c.i23 / 3.0 +
           0.5 * mat.K * (c.J - 1.0) * c.J;
    return c;
}

}  // namespace

Eigen::Matrix3d mr_stress(const Eigen::Matrix3d& C, const Material& mat) {
    const Coefficients c = coefficients(C, mat);
    const Eigen::Matrix3d Ci = C.inverse();
    return 2.0 * (c.a1 * Eigen::Matrix3d::Identity() + c.a2 * C + c.a3 * Ci);
}

Tangent3 mr_tangent(const Eigen::Matrix3d& C, const Material& mat) {
    const Coefficients c = coefficients(C, mat);
    const Eigen::Matrix3d Ci = C.inverse();
    const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
    // Gradients of the scalar coefficients, each of the form x I + y C + z C^-1.
    const double da1_ci = -mat.A10 * c.i13 / 3.0;
    const double da2_ci = -4.0 * mat.A01 * c.i23 / 3.0;
    const double da3_i = -mat.A10 * c.i13 / 3.0;
    const double da3_c = -4.0 * mat.A01 * c.i23 / 3.0;
    const double da3_ci = mat.A10 * c.I1 * c.i13 / 9.0 + 4.0 * mat.A01 * c.I2 * c.i23 / 9.0 +
                          0.25 * mat.K * (2.0 * c.J - 1.0) * c.J;

    Tangent3 T;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l) {
                    const double sym = 0.5 * (I(i, k) * I(j, l) + I(i, l) * I(j, k));
                    const double dCi = -0.5 * (Ci(i, k) * Ci(j, l) + Ci(i, l) * Ci(j, k));
                    double v = I(i, j) * da1_ci * Ci(k, l) + c.a2 * sym + C(i, j) * da2_ci * Ci(k, l) +
                               Ci(i, j) * (da3_i * I(k, l) + da3_c * C(k, l) + da3_ci * Ci(k, l)) +
                               c.a3 * dCi;
                    T(3 * i + j, 3 * k + l) = 4.0 * v;
                }
    return T;
}

PlaneStressTangent mr_stress_tangent(const Eigen::Matrix2d& F, const Material& mat,
                                     bool with_tangent) {
    const Eigen::Matrix3d C = embed_plane_strain_C(F);
    PlaneStressTangent out;
    out.S = mr_stress(C, mat).topLeftCorner<2, 2>();
    out.D.setZero();
    if (with_tangent) {
        const Tangent3 T = mr_tangent(C, mat);
        constexpr int vi[3] = {0, 1, 0};
        constexpr int vj[3] = {0, 1, 1};
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) out.D(a, b) = T(3 * vi[a] + vj[a], 3 * vi[b] + vj[b]);
    }
    return out;
}

LinearModuli linear_moduli(const Material& mat) {
    return {2.0 * mat.A10 + 8.0 * mat.A01, mat.K};
}

Eigen::Matrix3d plane_strain_elasticity(const LinearModuli& m) {
    const double lam = m.lame();
    const double mu = m.shear;
    Eigen::Matrix3d D;
    D << lam + 2.0 * mu, lam, 0.0, lam, lam + 2.0 * mu, 0.0, 0.0, 0.0, mu;
    return D;
}

}  // namespace stretchopt::fem
