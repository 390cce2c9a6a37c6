#pragma once

#include "../solver/solver.hpp"

#include <cstdint>
#include <string>

namespace homlab {

inline constexpr const char* kToolVersion = "homlab 0.1.0";

struct MediumSpec {
    std::string kind = "constant"; // constant | periodic_checkerboard | random_checkerboard | smooth_iso | smooth_skew
    double contrast = 4.0;         // periodic_checkerboard
    int cells_per_period = 2;      // periodic_checkerboard
    double value_low = 0.25, value_high = 1.0; // random_checkerboard
    double cell_size = 0.0625;                 // random_checkerboard
    double base = 0.62, amplitude = 0.22;      // smooth media
    double skew_amplitude = 0.15;              // smooth_skew
    std::uint64_t seed = 1;
    double diag = 1.0; // constant medium a = diag * I

    CoefficientField build(const Grid& g) const;
};

struct GridSpec {
    int d = 2;
    int n = 64;
    double extent = 1.0; // period (torus) or half-width (box)
    std::string kind = "torus";

    Grid build() const;
};

struct ChargeConfig {
    std::string kind = "radial_dipole";
    double px = 1.0, py = 0.0, pz = 0.0;
    double sx = 0.0, sy = 0.0, sz = 0.0;
    double r_support = 0.1;
};

struct ExperimentConfig {
    std::string experiment = "correctors"; // set by the subcommand
    GridSpec grid;
    MediumSpec medium;
    ChargeConfig charge;
    double tol = 1e-10;
    int max_iters = 20000;
    bool precond = true;
    int threads = 0; // 0 = library default
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    // multipole geometry
    double box_half_width = 1.0;
    int box_n = 64;
    double annulus_min = 0.0, annulus_max = 0.0; // 0 = derived defaults
    int annuli = 6;
    // rates / locality
    int refinement_levels = 3;
    int seed_pairs = 5;

    SolverConfig solver() const {
        SolverConfig cfg;
        cfg.tol = tol;
        cfg.max_iters = max_iters;
        cfg.precond = precond;
        return cfg;
    }
};

/// Canonical key=value serialization (sorted) used for hashing and echo.
std::string canonical_config(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg); // FNV-1a over the canonical form

} // namespace homlab
