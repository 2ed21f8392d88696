#pragma once

#include "stretchopt/config.hpp"
#include "stretchopt/opt/optimizer.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace stretchopt::io {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Create dir if needed and check that files can be written there.
void ensure_output_dir(const std::string& dir);

/// ny lines of nx values, top row first as in an image.
std::string density_text(const density::Grid& grid, const Eigen::VectorXd& rho);
std::string density_vtk(const density::Grid& grid, const Eigen::VectorXd& rho,
                        const Eigen::VectorXd* energy = nullptr);

std::string skeleton_text(const opt::DesignVector& X);
/// Inverse of skeleton_text; throws IoError on malformed input.
opt::DesignVector parse_skeleton(const std::string& text);
opt::DesignVector read_skeleton(const std::string& path);

/// Skeleton polylines of components with rho_bar > 0.1 over the 0.5 envelope.
std::string design_svg(const density::Grid& grid, const opt::DesignVector& X, const Eigen::VectorXd& rho);
/// The 0.5 envelope of the cell repeated reps x reps times.
std::string tiled_svg(const density::Grid& grid, const Eigen::VectorXd& rho, int reps = 5);

std::string log_csv(const std::vector<opt::IterationRecord>& history);

void write_file(const std::string& path, const std::string& contents);

/// Every export of a finished (or aborted) run.
void export_design(const std::string& dir, const RunConfig& cfg, const opt::RunResult& result);

}  // namespace stretchopt::io
