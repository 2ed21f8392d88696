#pragma once

#include <Eigen/Core>

namespace stretchopt::fem {

/// Mooney-Rivlin constants with a volumetric penalty. Units of stress.
struct Material {
    double A10 = 34.0;
    double A01 = 5.8;
    double K = 2000.0;

    void validate() const;
};

struct Invariants {
    double I1 = 3.0;
    double I2 = 3.0;  // C:C
    double I3 = 1.0;  // det C
};

using Tangent3 = Eigen::Matrix<double, 9, 9>;  // index (3i+j, 3k+l)

/// Invariants of C = F^T F for a 3x3 C.
Invariants invariants(const Eigen::Matrix3d& C);

/// Plane strain: the in-plane F is embedded with F33 = 1.
Invariants invariants(const Eigen::Matrix2d& F);

Eigen::Matrix3d embed_plane_strain_C(const Eigen::Matrix2d& F);

double mr_energy(const Invariants& inv, const Material& mat);
double mr_energy(const Eigen::Matrix3d& C, const Material& mat);

/// S = 2 dpsi/dC.
Eigen::Matrix3d mr_stress(const Eigen::Matrix3d& C, const Material& mat);

/// 4 d^2 psi / dC dC, symmetrized in both index pairs.
Tangent3 mr_tangent(const Eigen::Matrix3d& C, const Material& mat);

/// In-plane stress and Voigt tangent ordered (11, 22, 12) with engineering
/// shear strain, for plane-strain kinematics.
struct PlaneStressTangent {
    Eigen::Matrix2d S;
    Eigen::Matrix3d D;
};

PlaneStressTangent mr_stress_tangent(const Eigen::Matrix2d& F, const Material& mat,
                                     bool with_tangent = true);

/// Small-strain isotropic moduli obtained by linearizing the energy at C = I.
/// With I2 = C:C the shear modulus is 2 A10 + 8 A01; the bulk modulus is K.
struct LinearModuli {
    double shear;
    double bulk;
    double lame() const { return bulk - 2.0 * shear / 3.0; }
};

LinearModuli linear_moduli(const Material& mat);

/// Plane-strain Voigt matrix of the linearized law.
Eigen::Matrix3d plane_strain_elasticity(const LinearModuli& m);

}  // namespace stretchopt::fem
