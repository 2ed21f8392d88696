#pragma once

#include "stretchopt/fem/model.hpp"

#include <cmath>

namespace helpers {

inline double psi_diag(double l1, double l2, const stretchopt::fem::Material& m) {
    const double c1 = l1 * l1, c2 = l2 * l2;
    const double I1 = c1 + c2 + 1.0, I2 = c1 * c1 + c2 * c2 + 1.0, I3 = c1 * c2;
    const double s = std::sqrt(I3) - 1.0;
    return m.A10 * (I1 * std::cbrt(1.0 / I3) - 3.0) + m.A01 * (I2 * std::pow(I3, -2.0 / 3.0) - 3.0) + 0.5 * m.K * s * s;
}

// Plane-strain uniaxial stretch l1 with a traction-free transverse direction:
// the transverse stretch minimizing psi, by golden section.
inline double free_transverse_stretch(double l1, const stretchopt::fem::Material& m) {
    double a = 0.5, b = 1.5;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int k = 0; k < 200; ++k) {
        const double x1 = b - g * (b - a), x2 = a + g * (b - a);
        if (psi_diag(l1, x1, m) <= psi_diag(l1, x2, m)) b = x2; else a = x1;
    }
    return 0.5 * (a + b);
}

}  // namespace helpers
