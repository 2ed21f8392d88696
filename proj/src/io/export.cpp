#include "stretchopt/io/export.hpp"

#include "stretchopt/io/config.hpp"
#include "stretchopt/io/contour.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace stretchopt::io {

namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string num(double v) { return fmt("%.12g", v); }
std::string exact(double v) { return fmt("%.17g", v); }
std::string coord(double v) { return fmt("%.4f", v); }

}  // namespace

void ensure_output_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) throw IoError("cannot create output directory " + dir);
    const std::string probe = (std::filesystem::path(dir) / ".write_probe").string();
    {
        std::ofstream out(probe);
        if (!out || !(out << "ok")) throw IoError("output directory is not writable: " + dir);
    }
    std::filesystem::remove(probe, ec);
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << contents;
    if (!out) throw IoError("write failed: " + path);
}

std::string density_text(const density::Grid& grid, const Eigen::VectorXd& rho) {
    if (rho.size() != grid.num_elements()) throw std::invalid_argument("density_text: size mismatch");
    std::string s;
    for (int j = grid.ny - 1; j >= 0; --j) {
        for (int i = 0; i < grid.nx; ++i) {
            if (i) s += ' ';
            s += num(rho[grid.element(i, j)]);
        }
        s += '\n';
    }
    return s;
}

std::string density_vtk(const density::Grid& grid, const Eigen::VectorXd& rho, const Eigen::VectorXd* energy) {
    std::ostringstream o;
    o << "# vtk DataFile Version 3.0\nstretchopt density\nASCII\nDATASET STRUCTURED_POINTS\n";
    o << "DIMENSIONS " << grid.nx + 1 << ' ' << grid.ny + 1 << " 1\n";
    o << "ORIGIN 0 0 0\nSPACING " << num(grid.h) << ' ' << num(grid.h) << " 1\n";
    o << "CELL_DATA " << grid.num_elements() << "\nSCALARS density double 1\nLOOKUP_TABLE default\n";
    for (int e = 0; e < grid.num_elements(); ++e) o << num(rho[e]) << '\n';
    if (energy && energy->size() == grid.num_elements()) {
        o << "SCALARS energy double 1\nLOOKUP_TABLE default\n";
        for (int e = 0; e < grid.num_elements(); ++e) o << num((*energy)[e]) << '\n';
    }
    return o.str();
}

std::string skeleton_text(const opt::DesignVector& X) {
    const auto& L = X.layout;
    std::string s = "stretchopt-skeleton 1\n";
    s += "components " + std::to_string(L.n_components) + " degree " + std::to_string(L.degree) + "\n";
    s += "domain " + exact(X.upper[L.coord(0, 0, 0)]) + " " + exact(X.upper[L.coord(0, 0, 1)]) + "\n";
    s += "width_bounds " + exact(X.lower[L.width(0)]) + " " + exact(X.upper[L.width(0)]) + "\n";
    s += "move_limit " + exact(X.move_limit) + "\n";
    for (int k = 0; k < L.n_components; ++k) {
        s += "component " + std::to_string(k) + " rho_bar " + exact(X.values[L.rho_bar(k)]) + " w " +
             exact(X.values[L.width(k)]) + "\n";
        for (int i = 0; i <= L.degree; ++i)
            s += "  " + exact(X.values[L.coord(k, i, 0)]) + " " + exact(X.values[L.coord(k, i, 1)]) + "\n";
    }
    return s;
}

opt::DesignVector parse_skeleton(const std::string& text) {
    std::istringstream in(text);
    std::string tag;
    int version = 0, nc = 0, deg = 0, idx = 0;
    double W = 0, H = 0, wmin = 0, wmax = 0, move = 0;
    std::string a, b, c, d;
    if (!(in >> tag >> version) || tag != "stretchopt-skeleton" || version != 1)
        throw IoError("skeleton: missing or unsupported header");
    if (!(in >> a >> nc >> b >> deg) || a != "components" || b != "degree" || nc < 1 || deg < 1)
        throw IoError("skeleton: bad components line");
    if (!(in >> a >> W >> H) || a != "domain") throw IoError("skeleton: bad domain line");
    if (!(in >> a >> wmin >> wmax) || a != "width_bounds") throw IoError("skeleton: bad width_bounds line");
    if (!(in >> a >> move) || a != "move_limit") throw IoError("skeleton: bad move_limit line");
    std::vector<density::BezierComponent> comps(static_cast<std::size_t>(nc));
    for (int k = 0; k < nc; ++k) {
        auto& comp = comps[static_cast<std::size_t>(k)];
        if (!(in >> a >> idx >> b >> comp.rho_bar >> c >> comp.w) || a != "component" || idx != k || b != "rho_bar" ||
            c != "w")
            throw IoError("skeleton: bad header for component " + std::to_string(k));
        comp.control_points.resize(static_cast<std::size_t>(deg + 1));
        for (auto& p : comp.control_points)
            if (!(in >> p.x() >> p.y())) throw IoError("skeleton: bad control point in component " + std::to_string(k));
    }
    try {
        return opt::DesignVector::from_components(comps, W, H, wmin, wmax, move);
    } catch (const std::invalid_argument& e) {
        throw IoError(std::string("skeleton: ") + e.what());
    }
}

opt::DesignVector read_skeleton(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open skeleton file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_skeleton(ss.str());
}

namespace {

// SVG y axis points down; flip so the cell reads like the density raster.
std::string path_data(const std::vector<Contour>& contours, double height, double dx = 0.0, double dy = 0.0) {
    std::string d;
    for (const auto& c : contours) {
        for (std::size_t i = 0; i < c.points.size(); ++i) {
            d += (i ? " L" : "M") + coord(c.points[i].x() + dx) + "," + coord(height - c.points[i].y() + dy);
        }
        if (c.closed) d += " Z";
        d += ' ';
    }
    if (!d.empty()) d.pop_back();
    return d;
}

std::string svg_header(double w, double h, double margin) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" + coord(-margin) + " " + coord(-margin) + " " +
           coord(w + 2 * margin) + " " + coord(h + 2 * margin) + "\" width=\"" + coord(10 * (w + 2 * margin)) +
           "\" height=\"" + coord(10 * (h + 2 * margin)) + "\">\n";
}

}  // namespace

std::string design_svg(const density::Grid& grid, const opt::DesignVector& X, const Eigen::VectorXd& rho) {
    const double W = grid.width(), H = grid.height();
    std::string s = svg_header(W, H, 1.0);
    s += "<rect x=\"0\" y=\"0\" width=\"" + coord(W) + "\" height=\"" + coord(H) +
         "\" fill=\"none\" stroke=\"#999999\" stroke-width=\"0.1\"/>\n";
    const auto env = marching_squares(grid, rho, 0.5);
    if (!env.empty())
        s += "<path class=\"envelope\" d=\"" + path_data(env, H) +
             "\" fill=\"#d8e4f0\" fill-rule=\"evenodd\" stroke=\"#1f4e79\" stroke-width=\"0.15\"/>\n";
    for (const auto& comp : X.components()) {
        if (!(comp.rho_bar > 0.1)) continue;
        s += "<polyline class=\"skeleton\" points=\"";
        constexpr int samples = 64;
        for (int i = 0; i <= samples; ++i) {
            const density::Point p = geometry::eval(comp, static_cast<double>(i) / samples);
            if (i) s += ' ';
            s += coord(p.x()) + "," + coord(H - p.y());
        }
        s += "\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"0.3\"/>\n";
    }
    s += "</svg>\n";
    return s;
}

std::string tiled_svg(const density::Grid& grid, const Eigen::VectorXd& rho, int reps) {
    if (reps < 1) throw std::invalid_argument("tiled_svg: reps must be positive");
    const double W = grid.width(), H = grid.height();
    std::string s = svg_header(reps * W, reps * H, 1.0);
    s += "<defs><path id=\"cell\" d=\"" + path_data(marching_squares(grid, rho, 0.5), H) +
         "\" fill=\"#404040\" fill-rule=\"evenodd\"/></defs>\n";
    for (int j = 0; j < reps; ++j)
        for (int i = 0; i < reps; ++i)
            s += "<use href=\"#cell\" x=\"" + coord(i * W) + "\" y=\"" + coord(j * H) + "\"/>\n";
    s += "</svg>\n";
    return s;
}

std::string log_csv(const std::vector<opt::IterationRecord>& history) {
    std::string s = "iteration,objective,volume_fraction,max_element_energy,pnorm,c,max_change,newton_iterations,feasible,rejected\n";
    for (const auto& r : history) {
        s += std::to_string(r.iteration) + "," + exact(r.objective) + "," + exact(r.volume_fraction) + "," +
             exact(r.max_element_energy) + "," + exact(r.pnorm) + "," + exact(r.c) + "," + exact(r.max_change) + "," +
             std::to_string(r.newton_iterations) + "," + (r.feasible ? "1" : "0") + "," + (r.rejected ? "1" : "0") +
             "\n";
    }
    return s;
}

void export_design(const std::string& dir, const RunConfig& cfg, const opt::RunResult& result) {
    ensure_output_dir(dir);
    const std::filesystem::path p(dir);
    const density::Grid grid = cfg.grid();
    Eigen::VectorXd rho;
    const Eigen::VectorXd* energy = nullptr;
    if (result.has_final_eval) {
        rho = result.final_eval.field.rho_phys;
        energy = &result.final_eval.solve.element_energy;
    } else {
        const density::DensityField f = density::project_field(grid, result.design.components(), cfg.projection());
        rho = cfg.symmetric ? density::symmetrize(f, density::Symmetrizer(grid)).rho_phys : f.rho_phys;
    }
    write_file((p / "config.json").string(), config_to_json(cfg));
    write_file((p / "density.txt").string(), density_text(grid, rho));
    write_file((p / "density.vtk").string(), density_vtk(grid, rho, energy));
    write_file((p / "skeleton.txt").string(), skeleton_text(result.design));
    write_file((p / "design.svg").string(), design_svg(grid, result.design, rho));
    write_file((p / "tiled.svg").string(), tiled_svg(grid, rho, 5));
    write_file((p / "log.csv").string(), log_csv(result.history));
    if (result.warmstart) write_file((p / "warmstart.txt").string(), density_text(grid, result.warmstart->density));
}

}  // namespace stretchopt::io
