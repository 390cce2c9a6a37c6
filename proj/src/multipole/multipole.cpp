#include "multipole.hpp"

#include "../core/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace homlab {

namespace k = kernels;

std::array<double, 3> ChargeSpec::eval(const std::array<double, 3>& x) const {
    std::array<double, 3> y{0.0, 0.0, 0.0};
    for (int l = 0; l < 3; ++l) y[l] = x[l] - center[l];
    if (kind == "shifted_dipole")
        for (int l = 0; l < 3; ++l) y[l] -= shift[l];
    double r = std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
    const double c = chi(r / r_support);
    std::array<double, 3> out{0.0, 0.0, 0.0};
    if (c == 0.0) return out;
    for (int l = 0; l < 3; ++l) out[l] = c * p[l];
    if (kind == "linear") {
        for (int l = 0; l < 3; ++l)
            for (int m = 0; m < 3; ++m) out[l] += c * Q(l, m) * y[m];
    }
    return out;
}

VectorField ChargeSpec::sample(const Grid& g) const {
    VectorField out(g);
    const std::size_t N = g.node_count();
    const int nps = g.nps();
    for (int l = 0; l < g.d; ++l) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(N); ++ii) {
            const std::size_t idx = static_cast<std::size_t>(ii);
            const auto c = g.coords(idx);
            if (!g.is_torus() && c[l] + 1 == nps) continue;
            auto xe = g.position(c);
            xe[l] += 0.5 * g.h;
            out.comp[l][idx] = eval(xe)[l];
        }
    }
    return out;
}

HarmonicBasis x2_basis(const Eigen::MatrixXd& abar, int d) {
    HarmonicBasis basis;
    basis.d = d;
    for (int i = 0; i < d; ++i) basis.elements.push_back(Poly::variable(d, i));
    const Eigen::MatrixXd S = 0.5 * (abar + abar.transpose());
    // symmetric matrices orthogonal to S (Frobenius), Gram-Schmidt over the
    // canonical symmetric basis
    std::vector<Eigen::MatrixXd> raw;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            Eigen::MatrixXd E = Eigen::MatrixXd::Zero(d, d);
            E(i, j) = E(j, i) = 1.0;
            raw.push_back(E);
        }
    const double s2 = S.squaredNorm();
    std::vector<Eigen::MatrixXd> kept;
    for (auto& E : raw) {
        Eigen::MatrixXd F = E - (E.cwiseProduct(S).sum() / s2) * S;
        for (const auto& K : kept) {
            const double k2 = K.squaredNorm();
            F -= (F.cwiseProduct(K).sum() / k2) * K;
        }
        if (F.norm() > 1e-10) kept.push_back(F / F.norm());
    }
    for (const auto& E : kept) {
        Poly q = Poly::zero(d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                if (E(i, j) != 0.0) q = q + (Poly::variable(d, i) * Poly::variable(d, j)).scaled(0.5 * E(i, j));
        basis.elements.push_back(q);
        basis.quad_matrices.push_back(E);
    }
    return basis;
}

GCombo MultipoleCoefficients::dipole_only() const {
    GCombo out;
    for (const auto& [alpha, v] : c)
        if (midx_degree(alpha) == 1) out[alpha] = v;
    return out;
}

double MultipoleCoefficients::dipole(int i) const {
    MIdx a{0, 0, 0};
    a[i] = 1;
    auto it = c.find(a);
    return it == c.end() ? 0.0 : it->second;
}

double MultipoleCoefficients::quad(int i, int j) const {
    MIdx a{0, 0, 0};
    a[i] += 1;
    a[j] += 1;
    auto it = c.find(a);
    return it == c.end() ? 0.0 : it->second;
}

ScalarField direct_field(const CoefficientField& astar, const ChargeSpec& charge, const SolverConfig& cfg,
                         SolveStats* stats) {
    const Grid& g = astar.grid;
    if (g.is_torus()) throw std::invalid_argument("direct_field: box grid required");
    double margin = 0.0;
    for (int l = 0; l < 3; ++l) margin = std::max(margin, std::abs(charge.center[l]) + std::abs(charge.shift[l]));
    if (charge.r_support + margin > 0.5 * g.extent)
        throw std::invalid_argument("direct_field: support too large for the box");
    VectorField gf = charge.sample(g);
    ScalarField v = solve_box_dirichlet(astar, gf, cfg, stats);
    // neutrality: the net flux of a* grad v + g through a mid-box sphere is
    // the residual sum inside, which the solve already bounds; re-check by
    // direct summation of the divergence over the half-ball
    ScalarField divg = k::divergence(gf);
    double net = 0.0;
    for (auto i : k::ball_nodes(g, {0.0, 0.0, 0.0}, 0.5 * g.extent)) net += divg.v[i];
    double hv = 1.0;
    for (int l = 0; l < g.d; ++l) hv *= g.h;
    double gnorm = 0.0;
    for (int l = 0; l < g.d; ++l) gnorm += k::dot(gf.comp[l], gf.comp[l]);
    gnorm = std::sqrt(gnorm) * std::sqrt(hv);
    if (gnorm > 0.0 && std::abs(net * hv) > 1e-6 * gnorm)
        throw std::runtime_error("direct_field: source is not neutral");
    return v;
}

std::vector<double> intrinsic_moments(const VectorField& g, const CorrectorSet& cs, const HarmonicBasis& basis) {
    const Grid& grid = g.grid;
    if ((int)basis.quad_matrices.size() > 0) {
        // basis quadratics must be abar-trace-free; audit against cs.abar
        const Eigen::MatrixXd S = 0.5 * (cs.abar + cs.abar.transpose());
        for (const auto& E : basis.quad_matrices)
            if (std::abs(E.cwiseProduct(S).sum()) > 1e-8 * S.norm() * E.norm())
                throw std::invalid_argument("intrinsic_moments: basis is not abar-trace-free");
    }
    double hv = 1.0;
    for (int l = 0; l < grid.d; ++l) hv *= grid.h;
    std::vector<double> out;
    for (const auto& u_b : basis.elements) {
        ScalarField Eu = expand(u_b, cs, Poly::zero(grid.d), grid);
        VectorField grad = k::gradient(Eu);
        double acc = 0.0;
        for (int l = 0; l < grid.d; ++l) acc += k::dot(grad.comp[l], g.comp[l]);
        out.push_back(acc * hv);
    }
    return out;
}

MultipoleCoefficients extract_coefficients(const std::vector<double>& moments, const HarmonicBasis& basis,
                                           const Eigen::Matrix3d& abar) {
    if (moments.size() != basis.elements.size())
        throw std::invalid_argument("extract_coefficients: moment vector does not match the basis");
    const int d = basis.d;
    if (d != 3) throw std::invalid_argument("extract_coefficients: d = 3 required");
    MultipoleCoefficients out;
    out.abar = abar;
    // dipole block: (x_i, d^a G)_h = -delta  =>  c_{e_i} = +l[x_i]
    for (int i = 0; i < d; ++i) {
        MIdx a{0, 0, 0};
        a[i] = 1;
        out.c[a] = moments[static_cast<std::size_t>(i)];
    }
    // quadrupole block:  sum_{k<=l} c_kl E^b_kl = -l[q_b], minimal-norm in c
    const auto alphas = multi_indices(3, 2);
    const int nq = static_cast<int>(basis.quad_matrices.size());
    if (nq == 0) return out;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nq, static_cast<int>(alphas.size()));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nq);
    for (int r = 0; r < nq; ++r) {
        const auto& E = basis.quad_matrices[static_cast<std::size_t>(r)];
        for (std::size_t cidx = 0; cidx < alphas.size(); ++cidx) {
            const auto& a = alphas[cidx];
            int i = -1, j = -1;
            for (int l = 0; l < 3; ++l) {
                if (a[l] == 2) i = j = l;
                else if (a[l] == 1) {
                    if (i < 0) i = l;
                    else j = l;
                }
            }
            // d^a (1/2 E x.x)(0): E_ii for a = 2 e_i, E_ij for mixed pairs
            A(r, static_cast<int>(cidx)) = E(i, j);
        }
        b(r) = -moments[static_cast<std::size_t>(d + r)];
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
    if (cod.rank() < nq) throw std::runtime_error("extract_coefficients: rank deficiency beyond the trace relation");
    const Eigen::VectorXd sol = cod.solve(b);
    for (std::size_t cidx = 0; cidx < alphas.size(); ++cidx)
        if (std::abs(sol(static_cast<int>(cidx))) > 0.0) out.c[alphas[cidx]] = sol(static_cast<int>(cidx));
    return out;
}

ScalarField predict_farfield(const MultipoleCoefficients& coeffs, const EuclidToolkit& tk,
                             const CorrectorSet& cs_star, const MultipoleFn& vtilde, const Grid& box, double r_excl) {
    return expand_dual(coeffs.c, tk, cs_star, vtilde, box, r_excl);
}

FarFieldReport compare_farfield(const ScalarField& v_direct, const ScalarField& prediction,
                                const std::vector<std::pair<double, double>>& annuli) {
    if (annuli.size() < 3) throw std::invalid_argument("compare_farfield: need at least 3 annuli");
    const Grid& g = v_direct.grid;
    ScalarField err(g);
    for (std::size_t i = 0; i < err.v.size(); ++i) err.v[i] = v_direct.v[i] - prediction.v[i];
    VectorField gv = k::gradient(v_direct);
    VectorField ge = k::gradient(err);
    FarFieldReport rep;
    std::vector<double> rmid, fld, er;
    for (const auto& [r0, r1] : annuli) {
        FarFieldRow row;
        row.r_in = r0;
        row.r_out = r1;
        row.r_mid = std::sqrt(r0 * r1);
        row.rms_grad_v = k::annulus_rms(gv, r0, r1, {0.0, 0.0, 0.0});
        row.rms_grad_err = k::annulus_rms(ge, r0, r1, {0.0, 0.0, 0.0});
        row.rel_err = row.rms_grad_v > 0.0 ? row.rms_grad_err / row.rms_grad_v : 0.0;
        rep.rows.push_back(row);
        rmid.push_back(row.r_mid);
        fld.push_back(std::max(row.rms_grad_v, 1e-300));
        er.push_back(std::max(row.rms_grad_err, 1e-300));
    }
    rep.fit_field = fit_rate(rmid, fld);
    rep.fit_err = fit_rate(rmid, er);
    rep.beta_hat = rep.fit_field.slope - rep.fit_err.slope;
    return rep;
}

LocalityReport locality_experiment(const Grid& torus, const ChargeSpec& charge, const LocalityParams& params,
                                   const SolverConfig& cfg) {
    LocalityReport rep;
    rep.rho_values = params.rho_values;
    VectorField gf = charge.sample(torus);
    for (double rho : params.rho_values) {
        if (rho <= charge.r_support) throw std::invalid_argument("locality_experiment: rho must exceed r_support");
        std::vector<double> changes;
        for (int pair = 0; pair < params.seed_pairs; ++pair) {
            const std::uint64_t s1 = params.base_seed + 1000ull * static_cast<std::uint64_t>(pair);
            const std::uint64_t s2 = s1 + 500ull;
            CoefficientField mA =
                random_checkerboard(torus, s1, params.value_low, params.value_high, params.cell_size);
            CoefficientField mB = random_checkerboard_masked(torus, s1, s2, rho, params.value_low, params.value_high,
                                                             params.cell_size);
            CorrectorOptions opts;
            opts.flux_potentials = false;
            CorrectorSet csA = compute_correctors(mA, cfg, opts);
            CorrectorSet csB = compute_correctors(mB, cfg, opts);
            HarmonicBasis basisA = x2_basis(csA.abar, torus.d);
            HarmonicBasis basisB = x2_basis(csB.abar, torus.d);
            // compare moments on the shared basis of A (the abar shift is part
            // of the measured change, so reuse A's trace-free quadratics)
            auto mo_A = intrinsic_moments(gf, csA, basisA);
            auto mo_B = intrinsic_moments(gf, csB, basisA);
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < mo_A.size(); ++i) {
                num += (mo_A[i] - mo_B[i]) * (mo_A[i] - mo_B[i]);
                den += mo_A[i] * mo_A[i];
            }
            LocalityRow row;
            row.rho = rho;
            row.seed_pair = s1;
            row.moment_change = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
            if (torus.d == 3) {
                auto cA = extract_coefficients(mo_A, basisA, csA.abar);
                auto cB = extract_coefficients(mo_B, basisB, csB.abar);
                double dn = 0.0, dd = 0.0;
                for (int i = 0; i < 3; ++i) {
                    dn += (cA.dipole(i) - cB.dipole(i)) * (cA.dipole(i) - cB.dipole(i));
                    dd += cA.dipole(i) * cA.dipole(i);
                }
                row.dipole_change = dd > 0.0 ? std::sqrt(dn / dd) : std::sqrt(dn);
            }
            rep.rows.push_back(row);
            changes.push_back(row.moment_change);
        }
        std::sort(changes.begin(), changes.end());
        const std::size_t nmid = changes.size() / 2;
        const double median = (changes.size() % 2 == 1) ? changes[nmid] : 0.5 * (changes[nmid - 1] + changes[nmid]);
        rep.median_change.push_back(median);
    }
    return rep;
}

} // namespace homlab
