#include "runner.hpp"

#include "../core/kernels.hpp"
#include "../multipole/multipole.hpp"

#include <nlohmann/json.hpp>
#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace homlab {

using nlohmann::json;
namespace fs = std::filesystem;
namespace k = kernels;

namespace {

json header_json(const ExperimentConfig& cfg) {
    json h;
    h["version"] = kToolVersion;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
    h["config_hash"] = buf;
    h["config"] = json::parse(R"({})");
    std::istringstream is(canonical_config(cfg));
    std::string line;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) h["config"][line.substr(0, eq)] = line.substr(eq + 1);
    }
    return h;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream os(path);
    os << j.dump(2) << "\n";
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12e", v);
    return buf;
}

json tensor_json(const Tensor3& t) {
    json j = json::array();
    for (int i = 0; i < t.d; ++i) {
        json ji = json::array();
        for (int jj = 0; jj < t.d; ++jj) {
            json jk = json::array();
            for (int kk = 0; kk < t.d; ++kk) jk.push_back(t(i, jj, kk));
            ji.push_back(jk);
        }
        j.push_back(ji);
    }
    return j;
}

json matrix_json(const Eigen::MatrixXd& m) {
    json j = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (int c = 0; c < m.cols(); ++c) r.push_back(m(i, c));
        j.push_back(r);
    }
    return j;
}

void apply_threads(const ExperimentConfig& cfg) {
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
}

fs::path prepare_out(const ExperimentConfig& cfg) {
    fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    write_json(dir / "config_echo.json", header_json(cfg));
    return dir;
}

int run_correctors_cmd(const ExperimentConfig& cfg) {
    const fs::path dir = prepare_out(cfg);
    Grid g = cfg.grid.build();
    CoefficientField a = cfg.medium.build(g);
    CoefficientField astar = transpose_medium(a);
    const SolverConfig scfg = cfg.solver();
    CorrectorSet cs = compute_correctors(a, scfg);
    CorrectorSet css = compute_correctors(astar, scfg);
    Tensor3 Cp = cross_check_C(cs, css);

    json rep = header_json(cfg);
    rep["abar"] = matrix_json(cs.abar);
    rep["abar_star"] = matrix_json(css.abar);
    rep["lambda"] = a.lambda;
    rep["C"] = tensor_json(cs.C);
    rep["C_star"] = tensor_json(css.C);
    rep["C_crosscheck"] = tensor_json(Cp);
    double dn = 0.0;
    for (std::size_t i = 0; i < cs.C.v.size(); ++i) dn += (cs.C.v[i] - Cp.v[i]) * (cs.C.v[i] - Cp.v[i]);
    rep["C_vs_crosscheck_rel"] = std::sqrt(dn) / std::max(cs.C.norm(), 1e-8);
    rep["residual_max"] = cs.residuals.max();
    rep["residuals"] = {{"cell", cs.residuals.cell},
                        {"sigma_div", cs.residuals.sigma_div},
                        {"psi_cell", cs.residuals.psi_cell},
                        {"Psi_div", cs.residuals.Psi_div}};
    if (a.periodic && g.d == 2 && g.n <= 256) {
        Tensor3 li = cell_average_invariant(a, astar, cs, css, 10);
        rep["cell_average_invariant"] = tensor_json(li);
        double ln = 0.0;
        for (std::size_t i = 0; i < li.v.size(); ++i) ln += (cs.C.v[i] - li.v[i]) * (cs.C.v[i] - li.v[i]);
        rep["li_vs_C_rel"] = std::sqrt(ln) / std::max(cs.C.norm(), 1e-8);
    }
    // growth table at dyadic radii around the torus center
    {
        const double P = g.extent;
        std::array<double, 3> center{};
        for (int l = 0; l < g.d; ++l) center[l] = g.origin0 + 0.5 * P;
        std::vector<double> radii{P / 16, P / 8, P / 4};
        auto rows = growth_diagnostics(cs, {center}, radii);
        json gj = json::array();
        for (const auto& r : rows.front().rows)
            gj.push_back({{"R", r.radius}, {"first_order", r.first_order}, {"second_order", r.second_order}});
        rep["growth"] = {{"rows", gj},
                         {"slope_first", rows.front().slope_first},
                         {"slope_second", rows.front().slope_second},
                         {"r_star", rows.front().r_star}};
    }
    write_json(dir / "report.json", rep);
    for (int i = 0; i < g.d; ++i) dump_scalar((dir / ("phi_" + std::to_string(i) + ".bin")).string(),
                                              cs.phi[static_cast<std::size_t>(i)]);
    for (int i = 0; i < g.d; ++i)
        for (int j = 0; j < g.d; ++j)
            dump_scalar((dir / ("psi_" + std::to_string(i) + std::to_string(j) + ".bin")).string(), cs.psi_at(i, j));
    for (int i = 0; i < g.d; ++i)
        for (std::size_t p = 0; p < cs.sigma[static_cast<std::size_t>(i)].pairs.size(); ++p) {
            ScalarField f(g);
            f.v = cs.sigma[static_cast<std::size_t>(i)].comp[p];
            const auto [pj, pk] = cs.sigma[static_cast<std::size_t>(i)].pairs[p];
            dump_scalar((dir / ("sigma_" + std::to_string(i) + std::to_string(pj) + std::to_string(pk) + ".bin")).string(), f);
        }
    return 0;
}

int run_homogenize_cmd(const ExperimentConfig& cfg) {
    const fs::path dir = prepare_out(cfg);
    Grid g = cfg.grid.build();
    CoefficientField a = cfg.medium.build(g);
    std::vector<double> res;
    auto [phi, abar] = first_order(a, cfg.solver(), &res);
    json rep = header_json(cfg);
    rep["abar"] = matrix_json(abar);
    rep["lambda"] = a.lambda;
    rep["cell_residuals"] = res;
    {
        CoefficientField astar = transpose_medium(a);
        auto [phis, abars] = first_order(astar, cfg.solver());
        (void)phis;
        rep["abar_star"] = matrix_json(abars);
        rep["abar_transpose_defect"] = (abars - abar.transpose()).norm();
    }
    write_json(dir / "report.json", rep);
    // CSV: one row per entry of abar
    std::ofstream csv(dir / "abar.csv");
    csv << "# " << kToolVersion << " config_hash=" << header_json(cfg)["config_hash"].get<std::string>() << "\n";
    csv << "i,j,abar\n";
    for (int i = 0; i < g.d; ++i)
        for (int j = 0; j < g.d; ++j) csv << i << "," << j << "," << fmt(abar(i, j)) << "\n";
    return 0;
}

int run_euclid_cmd(const ExperimentConfig& cfg) {
    const fs::path dir = prepare_out(cfg);
    auto rows = euclid_invariant_suite();
    json rep = header_json(cfg);
    json table = json::array();
    bool all = true;
    for (const auto& r : rows) {
        std::printf("%-45s %12.3e <= %8.1e  %s\n", r.name.c_str(), r.value, r.threshold, r.pass ? "pass" : "FAIL");
        table.push_back({{"name", r.name}, {"value", r.value}, {"threshold", r.threshold}, {"pass", r.pass}});
        all = all && r.pass;
    }
    rep["checks"] = table;
    rep["all_pass"] = all;
    write_json(dir / "euclid.json", rep);
    return all ? 0 : 2;
}

int run_rates_cmd(const ExperimentConfig& cfg) {
    const fs::path dir = prepare_out(cfg);
    json rep = header_json(cfg);
    std::ofstream csv(dir / "rates.csv");
    csv << "# " << kToolVersion << " config_hash=" << header_json(cfg)["config_hash"].get<std::string>() << "\n";
    csv << "experiment,n,h,value\n";

    // gradient convergence against the analytic midpoint derivative
    std::vector<double> hs, errs;
    for (int lvl = 0; lvl < cfg.refinement_levels; ++lvl) {
        const int n = cfg.grid.n << lvl;
        Grid g = Grid::torus(cfg.grid.d, n, cfg.grid.extent);
        ScalarField f(g);
        const double w = 2.0 * 3.14159265358979323846 / g.extent;
        for (std::size_t i = 0; i < f.v.size(); ++i) f.v[i] = std::sin(w * g.pos(g.coords(i)[0]));
        VectorField grad = k::gradient(f);
        double worst = 0.0;
        for (std::size_t i = 0; i < f.v.size(); ++i) {
            const double xm = g.pos(g.coords(i)[0]) + 0.5 * g.h;
            worst = std::max(worst, std::abs(grad.comp[0][i] - w * std::cos(w * xm)));
        }
        hs.push_back(g.h);
        errs.push_back(worst);
        csv << "gradient," << n << "," << fmt(g.h) << "," << fmt(worst) << "\n";
    }
    RateFit gradfit = fit_rate(hs, errs);
    rep["gradient_order"] = gradfit.slope;

    // second-order harmonicity under refinement
    std::vector<double> hs2, res2;
    for (int lvl = 0; lvl < cfg.refinement_levels; ++lvl) {
        const int n = cfg.grid.n << lvl;
        Grid g = Grid::torus(cfg.grid.d, n, cfg.grid.extent);
        CoefficientField a = cfg.medium.build(g);
        CorrectorOptions opts;
        opts.flux_potentials = false;
        CorrectorSet cs = compute_correctors(a, cfg.solver(), opts);
        HarmonicBasis basis = x2_basis(cs.abar, g.d);
        const Poly& u_h = basis.elements[static_cast<std::size_t>(g.d)]; // first trace-free quadratic
        const double rms = harmonicity_residual_rms(a, cs, u_h);
        hs2.push_back(g.h);
        res2.push_back(rms);
        csv << "harmonicity," << n << "," << fmt(g.h) << "," << fmt(rms) << "\n";
    }
    RateFit harmfit = fit_rate(hs2, res2);
    rep["harmonicity_order"] = harmfit.slope;
    rep["harmonicity_r2"] = harmfit.r_squared;
    write_json(dir / "rates.json", rep);
    return 0;
}

int run_multipole_cmd(const ExperimentConfig& cfg) {
    const fs::path dir = prepare_out(cfg);
    const int d = cfg.grid.d;
    Grid torus = cfg.grid.build();
    if (!torus.is_torus()) throw std::invalid_argument("multipole: grid must be the corrector torus");
    Grid box = Grid::box(d, cfg.box_n, cfg.box_half_width);
    if (std::abs(box.h - torus.h) > 1e-12 * torus.h)
        throw std::invalid_argument("multipole: box and torus lattice spacing must match");

    CoefficientField a = cfg.medium.build(torus);
    CoefficientField astar = transpose_medium(a);
    const SolverConfig scfg = cfg.solver();

    ChargeSpec charge;
    charge.kind = cfg.charge.kind;
    charge.p = {cfg.charge.px, cfg.charge.py, cfg.charge.pz};
    charge.shift = {cfg.charge.sx, cfg.charge.sy, cfg.charge.sz};
    charge.r_support = cfg.charge.r_support;

    CoefficientField box_med = sample_medium(box, a.generator, a.kind, a.symmetric, a.periodic, a.seed);
    CoefficientField box_med_star = transpose_medium(box_med);

    json rep = header_json(cfg);
    std::ofstream csv(dir / "farfield.csv");
    csv << "# " << kToolVersion << " config_hash=" << header_json(cfg)["config_hash"].get<std::string>() << "\n";
    csv << "R,rms_grad_v,rms_grad_err,rel_err\n";

    const double rmin = cfg.annulus_min > 0.0 ? cfg.annulus_min : 4.0 * charge.r_support;
    const double rmax = cfg.annulus_max > 0.0 ? cfg.annulus_max : 0.5 * cfg.box_half_width;
    std::vector<std::pair<double, double>> annuli;
    const double ratio = std::pow(rmax / rmin, 1.0 / cfg.annuli);
    for (int i = 0; i < cfg.annuli; ++i) annuli.push_back({rmin * std::pow(ratio, i), rmin * std::pow(ratio, i + 1)});

    if (d == 2) {
        // solver-stack smoke path: no fundamental-solution toolkit in d = 2
        VectorField gf(box);
        const std::size_t N = box.node_count();
        for (int l = 0; l < 2; ++l)
            for (std::size_t i = 0; i < N; ++i) {
                const auto c = box.coords(i);
                if (c[l] + 1 == box.nps()) continue;
                auto xe = box.position(c);
                xe[l] += 0.5 * box.h;
                const double r = std::sqrt(xe[0] * xe[0] + xe[1] * xe[1]);
                gf.comp[l][i] = ChargeSpec::chi(r / charge.r_support) * charge.p[l];
            }
        SolveStats st;
        ScalarField v = solve_box_dirichlet(box_med_star, gf, scfg, &st);
        VectorField gv = k::gradient(v);
        std::vector<double> rmid, rms;
        for (const auto& [r0, r1] : annuli) {
            const double rr = k::annulus_rms(gv, r0, r1, {0.0, 0.0, 0.0});
            rmid.push_back(std::sqrt(r0 * r1));
            rms.push_back(std::max(rr, 1e-300));
            csv << fmt(std::sqrt(r0 * r1)) << "," << fmt(rr) << ",," << "\n";
        }
        RateFit fit = fit_rate(rmid, rms);
        rep["smoke_d2"] = {{"solver_iters", st.iters}, {"field_slope", fit.slope}, {"r_squared", fit.r_squared}};
        write_json(dir / "farfield.json", rep);
        return 0;
    }

    CorrectorSet cs = compute_correctors(a, scfg);
    CorrectorSet css = compute_correctors(astar, scfg);
    SolveStats st;
    ScalarField v = direct_field(box_med_star, charge, scfg, &st);

    VectorField gf = charge.sample(box);
    HarmonicBasis basis = x2_basis(cs.abar, 3);
    std::vector<double> moments = intrinsic_moments(gf, cs, basis);
    Eigen::Matrix3d abar3 = cs.abar;
    MultipoleCoefficients coeffs = extract_coefficients(moments, basis, abar3);
    EuclidToolkit tk(abar3);
    MultipoleFn vtilde;
    vtilde.M = tk.G().M;
    if (!a.symmetric) {
        const Tensor3 Cstar_sym = css.C.symmetrized();
        vtilde = build_vtilde(coeffs.dipole_only(), Cstar_sym, tk);
    }
    const double r_excl = 2.0 * charge.r_support;
    ScalarField pred = predict_farfield(coeffs, tk, css, vtilde, box, r_excl);
    FarFieldReport rpt = compare_farfield(v, pred, annuli);

    MultipoleCoefficients dip;
    dip.abar = coeffs.abar;
    dip.c = coeffs.dipole_only();
    ScalarField pred_dip = predict_farfield(dip, tk, css, vtilde, box, r_excl);
    FarFieldReport rpt_dip = compare_farfield(v, pred_dip, annuli);

    for (const auto& row : rpt.rows)
        csv << fmt(row.r_mid) << "," << fmt(row.rms_grad_v) << "," << fmt(row.rms_grad_err) << "," << fmt(row.rel_err)
            << "\n";

    json cj;
    for (const auto& [alpha, val] : coeffs.c) {
        char key[16];
        std::snprintf(key, sizeof(key), "%d%d%d", alpha[0], alpha[1], alpha[2]);
        cj[key] = val;
    }
    rep["coefficients"] = cj;
    rep["moments"] = moments;
    rep["abar"] = matrix_json(cs.abar);
    rep["solver_iters"] = st.iters;
    rep["beta_hat"] = rpt.beta_hat;
    rep["beta_hat_dipole_only"] = rpt_dip.beta_hat;
    rep["fit_field_slope"] = rpt.fit_field.slope;
    rep["fit_err_slope"] = rpt.fit_err.slope;
    write_json(dir / "farfield.json", rep);
    return 0;
}

int run_locality_cmd(const ExperimentConfig& cfg) {
    const fs::path dir = prepare_out(cfg);
    Grid torus = Grid::torus(cfg.grid.d, cfg.grid.n, cfg.grid.extent, -0.5 * cfg.grid.extent);
    ChargeSpec charge;
    charge.kind = cfg.charge.kind;
    charge.p = {cfg.charge.px, cfg.charge.py, cfg.charge.pz};
    charge.r_support = cfg.charge.r_support;
    LocalityParams params;
    params.base_seed = cfg.seed;
    params.seed_pairs = cfg.seed_pairs;
    const double P = cfg.grid.extent;
    params.rho_values = {P / 16.0, P / 8.0, P / 4.0};
    params.cell_size = cfg.medium.cell_size;
    params.value_low = cfg.medium.value_low;
    params.value_high = cfg.medium.value_high;
    LocalityReport lr = locality_experiment(torus, charge, params, cfg.solver());

    std::ofstream csv(dir / "locality.csv");
    csv << "# " << kToolVersion << " config_hash=" << header_json(cfg)["config_hash"].get<std::string>() << "\n";
    csv << "rho,seed_pair,moment_change,dipole_change\n";
    for (const auto& row : lr.rows)
        csv << fmt(row.rho) << "," << row.seed_pair << "," << fmt(row.moment_change) << "," << fmt(row.dipole_change)
            << "\n";
    json rep = header_json(cfg);
    rep["rho"] = lr.rho_values;
    rep["median_change"] = lr.median_change;
    bool monotone = true;
    for (std::size_t i = 1; i < lr.median_change.size(); ++i)
        if (lr.median_change[i] > lr.median_change[i - 1] + 1e-12) monotone = false;
    rep["median_non_increasing"] = monotone;
    write_json(dir / "locality.json", rep);
    return 0;
}

} // namespace

int run_experiment(const ExperimentConfig& cfg) {
    apply_threads(cfg);
    if (cfg.experiment == "correctors") return run_correctors_cmd(cfg);
    if (cfg.experiment == "homogenize") return run_homogenize_cmd(cfg);
    if (cfg.experiment == "euclid-check") return run_euclid_cmd(cfg);
    if (cfg.experiment == "rates") return run_rates_cmd(cfg);
    if (cfg.experiment == "multipole") return run_multipole_cmd(cfg);
    if (cfg.experiment == "locality") return run_locality_cmd(cfg);
    throw std::invalid_argument("unknown experiment: " + cfg.experiment);
}

} // namespace homlab
