#include "config.hpp"

#include <map>
#include <sstream>

namespace homlab {

CoefficientField MediumSpec::build(const Grid& g) const {
    if (kind == "constant") {
        Eigen::MatrixXd A = diag * Eigen::MatrixXd::Identity(g.d, g.d);
        return constant_medium(g, A);
    }
    if (kind == "periodic_checkerboard") return periodic_checkerboard(g, contrast, cells_per_period);
    if (kind == "random_checkerboard") return random_checkerboard(g, seed, value_low, value_high, cell_size);
    if (kind == "smooth_iso") {
        const double period = g.is_torus() ? g.extent : 2.0 * g.extent;
        return smooth_isotropic(g, base, amplitude, period);
    }
    if (kind == "smooth_aniso") {
        const double period = g.is_torus() ? g.extent : 2.0 * g.extent;
        return smooth_anisotropic(g, base, amplitude, period);
    }
    if (kind == "smooth_skew") {
        const double period = g.is_torus() ? g.extent : 2.0 * g.extent;
        CoefficientField b = smooth_isotropic(g, base, amplitude, period);
        return skew_perturbation(b, skew_amplitude, "default");
    }
    throw MediaError("unknown medium kind: " + kind);
}

Grid GridSpec::build() const {
    if (kind == "torus") return Grid::torus(d, n, extent);
    if (kind == "box") return Grid::box(d, n, extent);
    throw std::invalid_argument("unknown grid kind: " + kind);
}

std::string canonical_config(const ExperimentConfig& cfg) {
    std::map<std::string, std::string> kv;
    auto put = [&kv](const std::string& k, auto v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        kv[k] = os.str();
    };
    put("experiment", cfg.experiment);
    put("grid.d", cfg.grid.d);
    put("grid.n", cfg.grid.n);
    put("grid.extent", cfg.grid.extent);
    put("grid.kind", cfg.grid.kind);
    put("medium.kind", cfg.medium.kind);
    put("medium.contrast", cfg.medium.contrast);
    put("medium.cells_per_period", cfg.medium.cells_per_period);
    put("medium.value_low", cfg.medium.value_low);
    put("medium.value_high", cfg.medium.value_high);
    put("medium.cell_size", cfg.medium.cell_size);
    put("medium.base", cfg.medium.base);
    put("medium.amplitude", cfg.medium.amplitude);
    put("medium.skew_amplitude", cfg.medium.skew_amplitude);
    put("medium.seed", cfg.medium.seed);
    put("medium.diag", cfg.medium.diag);
    put("charge.kind", cfg.charge.kind);
    put("charge.px", cfg.charge.px);
    put("charge.py", cfg.charge.py);
    put("charge.pz", cfg.charge.pz);
    put("charge.sx", cfg.charge.sx);
    put("charge.sy", cfg.charge.sy);
    put("charge.sz", cfg.charge.sz);
    put("charge.r_support", cfg.charge.r_support);
    put("tol", cfg.tol);
    put("max_iters", cfg.max_iters);
    put("precond", cfg.precond);
    put("seed", cfg.seed);
    put("box_half_width", cfg.box_half_width);
    put("box_n", cfg.box_n);
    put("annulus_min", cfg.annulus_min);
    put("annulus_max", cfg.annulus_max);
    put("annuli", cfg.annuli);
    put("refinement_levels", cfg.refinement_levels);
    put("seed_pairs", cfg.seed_pairs);
    std::ostringstream os;
    for (const auto& [k, v] : kv) os << k << "=" << v << "\n";
    return os.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    const std::string s = canonical_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace homlab
