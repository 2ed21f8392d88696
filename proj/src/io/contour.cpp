#include "stretchopt/io/contour.hpp"

#include <map>
#include <stdexcept>

namespace stretchopt::io {

namespace {

// Padded lattice of sample points: (i, j) with i in [0, nx+1], j in [0, ny+1];
// sample (i, j) sits at the centroid of element (i-1, j-1).
struct Lattice {
    const density::Grid& g;
    const Eigen::VectorXd& v;
    int nx() const { return g.nx + 2; }
    int ny() const { return g.ny + 2; }
    double value(int i, int j) const {
        if (i < 1 || j < 1 || i > g.nx || j > g.ny) return 0.0;
        return v[g.element(i - 1, j - 1)];
    }
    density::Point pos(int i, int j) const { return {(i - 0.5) * g.h, (j - 0.5) * g.h}; }
};

// Edge ids: horizontal edge (i,j)-(i+1,j) -> 2*(j*nx+i), vertical (i,j)-(i,j+1) -> 2*(j*nx+i)+1.
long edge_id(const Lattice& L, int i, int j, bool vertical) {
    return 2L * (static_cast<long>(j) * L.nx() + i) + (vertical ? 1 : 0);
}

density::Point edge_point(const Lattice& L, long id, double level) {
    const bool vertical = id % 2;
    const long k = id / 2;
    const int i = static_cast<int>(k % L.nx()), j = static_cast<int>(k / L.nx());
    const int i2 = vertical ? i : i + 1, j2 = vertical ? j + 1 : j;
    const double a = L.value(i, j), b = L.value(i2, j2);
    const double t = (a == b) ? 0.5 : (level - a) / (b - a);
    return L.pos(i, j) + t * (L.pos(i2, j2) - L.pos(i, j));
}

}  // namespace

std::vector<Contour> marching_squares(const density::Grid& grid, const Eigen::VectorXd& values, double level) {
    if (values.size() != grid.num_elements()) throw std::invalid_argument("marching_squares: size mismatch");
    const Lattice L{grid, values};
    // Segments as edge-id pairs, oriented with the inside on the left.
    std::vector<std::pair<long, long>> segs;
    for (int j = 0; j + 1 < L.ny(); ++j) {
        for (int i = 0; i + 1 < L.nx(); ++i) {
            const double v0 = L.value(i, j), v1 = L.value(i + 1, j), v2 = L.value(i + 1, j + 1),
                         v3 = L.value(i, j + 1);
            const int code = (v0 > level) | ((v1 > level) << 1) | ((v2 > level) << 2) | ((v3 > level) << 3);
            if (code == 0 || code == 15) continue;
            const long b = edge_id(L, i, j, false);      // bottom
            const long r = edge_id(L, i + 1, j, true);   // right
            const long t = edge_id(L, i, j + 1, false);  // top
            const long l = edge_id(L, i, j, true);       // left
            const bool centre_in = 0.25 * (v0 + v1 + v2 + v3) > level;
            switch (code) {
                case 1: segs.emplace_back(l, b); break;
                case 2: segs.emplace_back(b, r); break;
                case 3: segs.emplace_back(l, r); break;
                case 4: segs.emplace_back(r, t); break;
                case 5:
                    if (centre_in) { segs.emplace_back(l, t); segs.emplace_back(r, b); }
                    else { segs.emplace_back(l, b); segs.emplace_back(r, t); }
                    break;
                case 6: segs.emplace_back(b, t); break;
                case 7: segs.emplace_back(l, t); break;
                case 8: segs.emplace_back(t, l); break;
                case 9: segs.emplace_back(t, b); break;
                case 10:
                    if (centre_in) { segs.emplace_back(b, l); segs.emplace_back(t, r); }
                    else { segs.emplace_back(b, r); segs.emplace_back(t, l); }
                    break;
                case 11: segs.emplace_back(t, r); break;
                case 12: segs.emplace_back(r, l); break;
                case 13: segs.emplace_back(r, b); break;
                case 14: segs.emplace_back(b, l); break;
                default: break;
            }
        }
    }
    // Chain segments head to tail; the padding guarantees every chain closes.
    std::map<long, std::size_t> by_start;
    for (std::size_t s = 0; s < segs.size(); ++s) by_start[segs[s].first] = s;
    std::vector<bool> used(segs.size(), false);
    std::vector<Contour> out;
    for (std::size_t s0 = 0; s0 < segs.size(); ++s0) {
        if (used[s0]) continue;
        Contour c;
        std::size_t s = s0;
        const long start = segs[s0].first;
        c.points.push_back(edge_point(L, start, level));
        while (!used[s]) {
            used[s] = true;
            const long end = segs[s].second;
            if (end == start) {
                c.closed = true;
                break;
            }
            c.points.push_back(edge_point(L, end, level));
            const auto it = by_start.find(end);
            if (it == by_start.end()) break;
            s = it->second;
        }
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace stretchopt::io
