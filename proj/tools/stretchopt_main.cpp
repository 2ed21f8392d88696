#include "stretchopt/io/config.hpp"
#include "stretchopt/io/export.hpp"
#include "stretchopt/opt/gradcheck.hpp"
#include "stretchopt/opt/optimizer.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

using namespace stretchopt;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kSolver = 3;

struct Failure {
    int code;
    std::string message;
};

RunConfig load(const std::string& path, const std::string& output_override) {
    RunConfig cfg;
    try {
        cfg = io::parse_config(path);
    } catch (const ConfigError& e) {
        throw Failure{kValidation, std::string("invalid config: ") + e.what()};
    } catch (const io::ConfigParseError& e) {
        throw Failure{kValidation, path + ": " + e.what()};
    } catch (const std::runtime_error& e) {
        throw Failure{kValidation, e.what()};
    }
    if (!output_override.empty()) cfg.output_dir = output_override;
    try {
        io::ensure_output_dir(cfg.output_dir);
    } catch (const io::IoError& e) {
        throw Failure{kValidation, e.what()};
    }
    return cfg;
}

std::optional<opt::DesignVector> initial_from(const RunConfig& cfg) {
    if (cfg.initial_design.empty()) return std::nullopt;
    try {
        opt::DesignVector X = io::read_skeleton(cfg.initial_design);
        if (X.layout.n_components != cfg.n_components || X.layout.degree != cfg.degree)
            throw Failure{kValidation, "initial_design does not match n_components/degree"};
        return X;
    } catch (const io::IoError& e) {
        throw Failure{kValidation, e.what()};
    }
}

Eigen::VectorXd physical(const RunConfig& cfg, const opt::DesignVector& X) {
    const density::Grid grid = cfg.grid();
    const density::DensityField f = density::project_field(grid, X.components(), cfg.projection());
    return cfg.symmetric ? density::symmetrize(f, density::Symmetrizer(grid)).rho_phys : f.rho_phys;
}

void write_geometry(const RunConfig& cfg, const opt::DesignVector& X) {
    namespace fs = std::filesystem;
    const fs::path p(cfg.output_dir);
    const density::Grid grid = cfg.grid();
    const Eigen::VectorXd rho = physical(cfg, X);
    io::write_file((p / "config.json").string(), io::config_to_json(cfg));
    io::write_file((p / "density.txt").string(), io::density_text(grid, rho));
    io::write_file((p / "density.vtk").string(), io::density_vtk(grid, rho));
    io::write_file((p / "skeleton.txt").string(), io::skeleton_text(X));
    io::write_file((p / "design.svg").string(), io::design_svg(grid, X, rho));
    io::write_file((p / "tiled.svg").string(), io::tiled_svg(grid, rho, 5));
}

int cmd_run(const std::string& path, const std::string& out, bool quiet) {
    const RunConfig cfg = load(path, out);
    const auto initial = initial_from(cfg);
    auto report = [quiet](const opt::IterationRecord& r) {
        if (quiet) return;
        std::printf("%4d f %.6g vol %.4f maxE %.4f cPN %.4f c %.4f change %.2e%s%s\n", r.iteration, r.objective,
                    r.volume_fraction, r.max_element_energy, r.pnorm, r.c, r.max_change,
                    r.feasible ? " feasible" : "", r.rejected ? " rejected" : "");
        std::fflush(stdout);
    };
    const opt::RunResult result = opt::run(cfg, initial, report);
    io::export_design(cfg.output_dir, cfg, result);
    std::printf("status %s after %zu iterations\n", opt::to_string(result.status), result.history.size());
    if (result.incumbent_iteration >= 0)
        std::printf("returning the best feasible iterate (%d)\n", result.incumbent_iteration);
    if (result.identification && !result.identification->warning.empty())
        std::fprintf(stderr, "warning: %s\n", result.identification->warning.c_str());
    if (result.has_final_eval) {
        const auto& e = result.final_eval;
        std::printf("objective %.9g volume %.6f max_energy %.6f\n", e.objective, e.volume_fraction,
                    e.energy.max_energy);
    }
    if (result.status == opt::RunStatus::aborted) {
        std::fprintf(stderr, "solver failure: %s\n", result.diagnostic.c_str());
        return kSolver;
    }
    return kOk;
}

int cmd_gradcheck(const std::string& path, const std::string& out, double step, std::vector<int> vars) {
    RunConfig cfg = load(path, out);
    auto initial = initial_from(cfg);
    if (!initial) {
        cfg.warmstart = false;
        initial = opt::initialize_design(cfg);
    }
    opt::Pipeline pipeline(cfg);
    opt::GradientCheck check;
    try {
        check = opt::check_gradients(pipeline, *initial, cfg.c_init, step, vars);
    } catch (const std::invalid_argument& e) {
        throw Failure{kValidation, e.what()};
    } catch (const std::runtime_error& e) {
        throw Failure{kSolver, e.what()};
    }
    const std::string file = (std::filesystem::path(cfg.output_dir) / "gradcheck.csv").string();
    io::write_file(file, opt::gradient_csv(check));
    std::printf("wrote %s (%zu rows)\n", file.c_str(), check.rows.size());
    std::printf("worst relative error: objective %.3e energy %.3e volume %.3e\n", check.worst_objective,
                check.worst_energy, check.worst_volume);
    return kOk;
}

int cmd_project(const std::string& path, const std::string& out) {
    RunConfig cfg = load(path, out);
    auto X = initial_from(cfg);
    if (!X) {
        cfg.warmstart = false;
        X = opt::initialize_design(cfg);
    }
    write_geometry(cfg, *X);
    std::printf("projected %d components onto %dx%d\n", X->layout.n_components, cfg.nx, cfg.ny);
    return kOk;
}

int cmd_identify(const std::string& path, const std::string& out) {
    RunConfig cfg = load(path, out);
    cfg.warmstart = true;
    cfg.identify = true;
    std::optional<opt::WarmStartResult> ws;
    std::optional<opt::IdentifyResult> id;
    opt::DesignVector X;
    try {
        X = opt::initialize_design(cfg, &ws, &id);
    } catch (const std::runtime_error& e) {
        throw Failure{kSolver, e.what()};
    }
    write_geometry(cfg, X);
    if (ws)
        io::write_file((std::filesystem::path(cfg.output_dir) / "warmstart.txt").string(),
                       io::density_text(cfg.grid(), ws->density));
    if (id) {
        std::printf("fit residual %.6g -> %.6g over %zu steps%s\n", id->residual_history.front(),
                    id->residual_history.back(), id->residual_history.size() - 1,
                    id->fell_back ? " (fell back to lattice)" : "");
        if (!id->warning.empty()) std::fprintf(stderr, "warning: %s\n", id->warning.c_str());
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Explicit Bezier-skeleton design of stretchable periodic lattices"};
    app.require_subcommand(1);
    std::string config, out;
    bool quiet = false;
    double step = 1e-6;
    std::vector<int> vars;

    auto add = [&](const char* name, const char* help) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("config", config, "JSON run configuration")->required();
        sub->add_option("-o,--output", out, "output directory (overrides output_dir)");
        return sub;
    };
    auto* run = add("run", "optimize and export the final design");
    run->add_flag("-q,--quiet", quiet, "suppress per-iteration output");
    auto* grad = add("gradcheck", "compare adjoint gradients with central differences");
    grad->add_option("--step", step, "FD step as a fraction of each variable's range");
    grad->add_option("--vars", vars, "design variable indices, space or comma separated (default: all)")->delimiter(',');
    auto* proj = add("project", "project the initial design onto the grid");
    auto* ident = add("identify", "SIMP warm start and skeleton fit only");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kValidation;
    }

    try {
        if (*run) return cmd_run(config, out, quiet);
        if (*grad) return cmd_gradcheck(config, out, step, vars);
        if (*proj) return cmd_project(config, out);
        if (*ident) return cmd_identify(config, out);
    } catch (const Failure& f) {
        std::fprintf(stderr, "error: %s\n", f.message.c_str());
        return f.code;
    } catch (const io::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kValidation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return kSolver;
    }
    return kOk;
}
