#pragma once

#include "grid.hpp"

#include <cmath>
#include <iosfwd>
#include <utility>
#include <vector>

namespace homlab {

struct ScalarField {
    Grid grid;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const Grid& g) : grid(g), v(g.node_count(), 0.0) {}

    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
    std::size_t size() const { return v.size(); }
};

/// Staggered vector field: component l stored at the base node of the l-edge.
struct VectorField {
    Grid grid;
    std::vector<std::vector<double>> comp; // d arrays of node_count()

    VectorField() = default;
    explicit VectorField(const Grid& g) : grid(g), comp(g.d, std::vector<double>(g.node_count(), 0.0)) {}

    std::vector<double>& operator[](int l) { return comp[l]; }
    const std::vector<double>& operator[](int l) const { return comp[l]; }
};

/// Matrix-valued node field (one array per entry, row-major in (i,j)).
struct MatrixField {
    Grid grid;
    std::vector<std::vector<double>> entry; // d*d arrays

    MatrixField() = default;
    explicit MatrixField(const Grid& g) : grid(g), entry(g.d * g.d, std::vector<double>(g.node_count(), 0.0)) {}

    std::vector<double>& at(int i, int j) { return entry[i * grid.d + j]; }
    const std::vector<double>& at(int i, int j) const { return entry[i * grid.d + j]; }
};

/// Skew-symmetric matrix field storing the independent components j<k.
/// Component (j,k) is interpreted as sitting at the (j,k) face center
/// x + h/2 e_j + h/2 e_k, stored at the base node index.
struct SkewField {
    Grid grid;
    std::vector<std::pair<int, int>> pairs;   // lexicographic j<k
    std::vector<std::vector<double>> comp;    // one array per pair

    SkewField() = default;
    explicit SkewField(const Grid& g) : grid(g) {
        for (int j = 0; j < g.d; ++j)
            for (int k = j + 1; k < g.d; ++k) pairs.emplace_back(j, k);
        comp.assign(pairs.size(), std::vector<double>(g.node_count(), 0.0));
    }

    int pair_index(int j, int k) const {
        for (std::size_t p = 0; p < pairs.size(); ++p)
            if (pairs[p].first == std::min(j, k) && pairs[p].second == std::max(j, k)) return static_cast<int>(p);
        return -1;
    }

    double sign(int j, int k) const { return j < k ? 1.0 : (j > k ? -1.0 : 0.0); }

    /// Value of component (j,k) at linear index idx, with exact skewness.
    double value(int j, int k, std::size_t idx) const {
        if (j == k) return 0.0;
        return sign(j, k) * comp[pair_index(j, k)][idx];
    }
};

// Binary dump: one UTF-8 JSON header line, then little-endian IEEE doubles
// in node-major order with components interleaved last.
void dump_field(std::ostream& os, const Grid& g, const std::vector<const std::vector<double>*>& comps, int rank);
void dump_scalar(const std::string& path, const ScalarField& f);
void dump_vector(const std::string& path, const VectorField& f);
ScalarField load_scalar(const std::string& path);
VectorField load_vector(const std::string& path);

} // namespace homlab
