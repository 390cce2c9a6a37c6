#include "cli/runner.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>

using namespace homlab;

namespace {

std::string g_emit_config_path;
std::string g_config_path;

// CLI11 only processes set_config on the top-level app, so the subcommand
// config file is applied by hand: command-line values win, file values fill
// the rest.
void apply_config_file(CLI::App* sub, const std::string& path) {
    CLI::ConfigTOML reader;
    for (const auto& item : reader.from_file(path)) {
        if (!item.parents.empty()) continue;
        CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
        if (opt == nullptr || opt->count() > 0 || !opt->get_configurable()) continue;
        for (const auto& v : item.inputs) opt->add_result(v);
        opt->run_callback();
    }
}

void add_common(CLI::App* sub, ExperimentConfig& cfg) {
    sub->option_defaults()->always_capture_default();
    sub->add_option("--config", g_config_path, "TOML config file; command-line flags take precedence")
        ->configurable(false)
        ->check(CLI::ExistingFile);
    sub->add_option("--emit-config", g_emit_config_path,
                    "write the resolved options as a TOML config and exit")
        ->configurable(false);
    sub->add_option("--out", cfg.out_dir, "output directory");
    sub->add_option("--seed", cfg.seed, "seed for seeded media");
    sub->add_option("--tol", cfg.tol, "solver relative residual tolerance");
    sub->add_option("--max-iters", cfg.max_iters, "solver iteration cap");
    sub->add_option("--precond", cfg.precond, "Jacobi preconditioner on/off");
    sub->add_option("--threads", cfg.threads, "worker threads (0 = default)");
    sub->add_option("--d", cfg.grid.d, "dimension (2 or 3)");
    sub->add_option("--n", cfg.grid.n, "cells per side of the torus");
    sub->add_option("--extent", cfg.grid.extent, "torus period");
    sub->add_option("--medium", cfg.medium.kind,
                    "constant | periodic_checkerboard | random_checkerboard | smooth_iso | smooth_skew");
    sub->add_option("--contrast", cfg.medium.contrast, "checkerboard contrast");
    sub->add_option("--cells-per-period", cfg.medium.cells_per_period, "checkerboard cells per period");
    sub->add_option("--value-low", cfg.medium.value_low, "random checkerboard low value");
    sub->add_option("--value-high", cfg.medium.value_high, "random checkerboard high value");
    sub->add_option("--cell-size", cfg.medium.cell_size, "random checkerboard cell size");
    sub->add_option("--base", cfg.medium.base, "smooth medium base value");
    sub->add_option("--amplitude", cfg.medium.amplitude, "smooth medium amplitude");
    sub->add_option("--skew-amplitude", cfg.medium.skew_amplitude, "skew perturbation amplitude");
    sub->add_option("--medium-seed", cfg.medium.seed, "medium seed");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"homlab: correctors, effective tensors, and effective multipoles for heterogeneous media"};
    app.require_subcommand(1);

    ExperimentConfig cfg;
    auto* c1 = app.add_subcommand("correctors", "corrector hierarchy, effective tensors, growth table");
    auto* c2 = app.add_subcommand("homogenize", "first-order correctors and the effective tensor only");
    auto* c3 = app.add_subcommand("multipole", "charge -> coefficients -> far-field comparison");
    auto* c4 = app.add_subcommand("rates", "discretization convergence studies");
    auto* c5 = app.add_subcommand("euclid-check", "constant-coefficient invariant table");
    auto* c6 = app.add_subcommand("locality", "moment sensitivity to re-randomizing the far medium");
    for (auto* s : {c1, c2, c3, c4, c5, c6}) add_common(s, cfg);

    for (auto* s : {c3}) {
        s->add_option("--box-n", cfg.box_n, "box cells per side");
        s->add_option("--box-half-width", cfg.box_half_width, "box half width L");
        s->add_option("--charge", cfg.charge.kind, "radial_dipole | linear | shifted_dipole");
        s->add_option("--r-support", cfg.charge.r_support, "charge support radius");
        s->add_option("--px", cfg.charge.px, "dipole direction x");
        s->add_option("--py", cfg.charge.py, "dipole direction y");
        s->add_option("--pz", cfg.charge.pz, "dipole direction z");
        s->add_option("--sx", cfg.charge.sx, "shift x (shifted_dipole)");
        s->add_option("--sy", cfg.charge.sy, "shift y (shifted_dipole)");
        s->add_option("--sz", cfg.charge.sz, "shift z (shifted_dipole)");
        s->add_option("--annulus-min", cfg.annulus_min, "innermost annulus radius (0 = 4 r_support)");
        s->add_option("--annulus-max", cfg.annulus_max, "outermost annulus radius (0 = L/2)");
        s->add_option("--annuli", cfg.annuli, "number of annuli");
    }
    c4->add_option("--levels", cfg.refinement_levels, "refinement levels");
    c6->add_option("--seed-pairs", cfg.seed_pairs, "seed pairs per rho");
    c6->add_option("--r-support", cfg.charge.r_support, "charge support radius");

    CLI11_PARSE(app, argc, argv);

    CLI::App* sub = app.get_subcommands().front();
    cfg.experiment = sub->get_name();
    if (!g_config_path.empty()) {
        try {
            apply_config_file(sub, g_config_path);
        } catch (const std::exception& e) {
            nlohmann::json err;
            err["error"] = std::string("config: ") + e.what();
            std::fprintf(stderr, "%s\n", err.dump().c_str());
            return 1;
        }
    }
    if (!g_emit_config_path.empty()) {
        std::ofstream os(g_emit_config_path);
        os << sub->config_to_str(true, true);
        return 0;
    }
    try {
        return run_experiment(cfg);
    } catch (const std::exception& e) {
        nlohmann::json err;
        err["error"] = e.what();
        err["experiment"] = cfg.experiment;
        std::fprintf(stderr, "%s\n", err.dump().c_str());
        return 1;
    }
}
