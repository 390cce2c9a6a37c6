#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace homlab {

enum class GridKind { Torus, Box };

/// Uniform lattice over a periodic cell (torus) or a Dirichlet box.
///
/// Scalars live on nodes. Vector fields are staggered: component l lives on
/// the edge from node x to x + h*e_l and is stored at the base node index.
/// On the box, the last node layer along axis l carries no l-edge; those
/// entries are kept zero.
struct Grid {
    GridKind kind = GridKind::Torus;
    int d = 2;            // spatial dimension, 2 or 3
    int n = 8;            // cells per side
    double extent = 1.0;  // torus: period; box: half-width L
    double origin0 = 0.0; // physical coordinate of node index 0 (same per axis)
    double h = 0.125;

    Grid() = default;

    static Grid torus(int d, int n, double period, double origin = 0.0) {
        if (d < 2 || d > 3) throw std::invalid_argument("grid: d must be 2 or 3");
        if (n < 8 || n % 2 != 0) throw std::invalid_argument("grid: torus n must be even and >= 8");
        Grid g;
        g.kind = GridKind::Torus;
        g.d = d;
        g.n = n;
        g.extent = period;
        g.origin0 = origin;
        g.h = period / n;
        return g;
    }

    static Grid box(int d, int n, double half_width) {
        if (d < 2 || d > 3) throw std::invalid_argument("grid: d must be 2 or 3");
        if (n < 4) throw std::invalid_argument("grid: box n must be >= 4");
        Grid g;
        g.kind = GridKind::Box;
        g.d = d;
        g.n = n;
        g.extent = half_width;
        g.origin0 = -half_width;
        g.h = 2.0 * half_width / n;
        return g;
    }

    bool is_torus() const { return kind == GridKind::Torus; }

    /// Nodes per side: n on the torus, n+1 on the box.
    int nps() const { return is_torus() ? n : n + 1; }

    std::size_t node_count() const {
        std::size_t m = 1;
        for (int l = 0; l < d; ++l) m *= static_cast<std::size_t>(nps());
        return m;
    }

    std::size_t stride(int axis) const {
        std::size_t s = 1;
        for (int l = axis + 1; l < d; ++l) s *= static_cast<std::size_t>(nps());
        return s;
    }

    std::size_t index(const std::array<int, 3>& c) const {
        std::size_t idx = 0;
        for (int l = 0; l < d; ++l) idx = idx * static_cast<std::size_t>(nps()) + static_cast<std::size_t>(c[l]);
        return idx;
    }

    std::array<int, 3> coords(std::size_t idx) const {
        std::array<int, 3> c{0, 0, 0};
        for (int l = d - 1; l >= 0; --l) {
            c[l] = static_cast<int>(idx % static_cast<std::size_t>(nps()));
            idx /= static_cast<std::size_t>(nps());
        }
        return c;
    }

    double pos(int i) const { return origin0 + i * h; }

    std::array<double, 3> position(const std::array<int, 3>& c) const {
        std::array<double, 3> x{0.0, 0.0, 0.0};
        for (int l = 0; l < d; ++l) x[l] = pos(c[l]);
        return x;
    }

    /// Centered coordinate in [-extent/2, extent/2) on the torus (used by
    /// diagnostics that need a canonical cell), plain position on the box.
    double pos_centered(int i) const {
        if (!is_torus()) return pos(i);
        double p = i * h;
        double half = 0.5 * extent;
        return (p < half) ? p : p - extent;
    }

    /// Minimal-image displacement along one axis (torus) or plain difference.
    double wrap_delta(double dx) const {
        if (!is_torus()) return dx;
        while (dx > 0.5 * extent) dx -= extent;
        while (dx < -0.5 * extent) dx += extent;
        return dx;
    }

    bool same_layout(const Grid& o) const {
        return kind == o.kind && d == o.d && n == o.n && extent == o.extent;
    }
};

} // namespace homlab
