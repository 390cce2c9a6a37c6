#include "field.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace homlab {

using nlohmann::json;

namespace {

json grid_header(const Grid& g, int rank, int components) {
    json h;
    h["grid"] = g.is_torus() ? "torus" : "box";
    h["d"] = g.d;
    h["n"] = g.n;
    h["extent"] = g.extent;
    h["origin"] = g.origin0;
    h["rank"] = rank;
    h["components"] = components;
    return h;
}

Grid grid_from_header(const json& h) {
    const std::string kind = h.at("grid").get<std::string>();
    const int d = h.at("d").get<int>();
    const int n = h.at("n").get<int>();
    const double extent = h.at("extent").get<double>();
    Grid g = (kind == "torus") ? Grid::torus(d, n, extent) : Grid::box(d, n, extent);
    if (h.contains("origin")) g.origin0 = h.at("origin").get<double>();
    return g;
}

} // namespace

void dump_field(std::ostream& os, const Grid& g, const std::vector<const std::vector<double>*>& comps, int rank) {
    const json h = grid_header(g, rank, static_cast<int>(comps.size()));
    os << h.dump() << "\n";
    const std::size_t N = g.node_count();
    // node-major, components interleaved last; doubles are written in the
    // host little-endian layout
    std::vector<double> row(comps.size());
    for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t c = 0; c < comps.size(); ++c) row[c] = (*comps[c])[i];
        os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(sizeof(double) * row.size()));
    }
}

void dump_scalar(const std::string& path, const ScalarField& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("dump_scalar: cannot open " + path);
    dump_field(os, f.grid, {&f.v}, 0);
}

void dump_vector(const std::string& path, const VectorField& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("dump_vector: cannot open " + path);
    std::vector<const std::vector<double>*> comps;
    for (int l = 0; l < f.grid.d; ++l) comps.push_back(&f.comp[l]);
    dump_field(os, f.grid, comps, 1);
}

namespace {

std::pair<Grid, std::vector<std::vector<double>>> load_any(const std::string& path, int expect_rank) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_field: cannot open " + path);
    std::string header;
    std::getline(is, header);
    const json h = json::parse(header);
    if (h.at("rank").get<int>() != expect_rank) throw std::runtime_error("load_field: rank mismatch in " + path);
    Grid g = grid_from_header(h);
    const int nc = h.at("components").get<int>();
    const std::size_t N = g.node_count();
    std::vector<std::vector<double>> comps(nc, std::vector<double>(N, 0.0));
    std::vector<double> row(static_cast<std::size_t>(nc));
    for (std::size_t i = 0; i < N; ++i) {
        is.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(sizeof(double) * row.size()));
        if (!is) throw std::runtime_error("load_field: truncated data in " + path);
        for (int c = 0; c < nc; ++c) comps[static_cast<std::size_t>(c)][i] = row[static_cast<std::size_t>(c)];
    }
    return {g, std::move(comps)};
}

} // namespace

ScalarField load_scalar(const std::string& path) {
    auto [g, comps] = load_any(path, 0);
    ScalarField f(g);
    f.v = std::move(comps[0]);
    return f;
}

VectorField load_vector(const std::string& path) {
    auto [g, comps] = load_any(path, 1);
    VectorField f(g);
    for (int l = 0; l < g.d; ++l) f.comp[l] = std::move(comps[static_cast<std::size_t>(l)]);
    return f;
}

} // namespace homlab
