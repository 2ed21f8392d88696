#pragma once

#include "stretchopt/density/projection.hpp"

#include <vector>

namespace stretchopt::io {

struct Contour {
    std::vector<density::Point> points;
    bool closed = false;
};

/// Marching squares on element-centred values at `level`. The field is padded
/// with a ring of zeros so every contour of a bounded blob closes.
std::vector<Contour> marching_squares(const density::Grid& grid, const Eigen::VectorXd& values, double level);

}  // namespace stretchopt::io
