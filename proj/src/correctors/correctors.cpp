#include "correctors.hpp"

#include "../cli/ratefit.hpp"
#include "../core/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace homlab {

namespace k = kernels;

Tensor3 Tensor3::symmetrized() const {
    Tensor3 s(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            for (int kk = 0; kk < d; ++kk) {
                const double v6 = (*this)(i, j, kk) + (*this)(i, kk, j) + (*this)(j, i, kk) + (*this)(j, kk, i) +
                                  (*this)(kk, i, j) + (*this)(kk, j, i);
                s(i, j, kk) = v6 / 6.0;
            }
    return s;
}

double CorrectorResiduals::max() const {
    double m = 0.0;
    for (auto v : cell) m = std::max(m, v);
    for (auto v : sigma_div) m = std::max(m, v);
    for (auto v : psi_cell) m = std::max(m, v);
    for (auto v : Psi_div) m = std::max(m, v);
    return m;
}

std::size_t CorrectorSet::wrap_index(const std::array<double, 3>& x) const {
    std::array<int, 3> c{0, 0, 0};
    for (int l = 0; l < d; ++l) {
        const double t = (x[l] - grid.origin0) / grid.h;
        const long j = std::lround(t);
        if (std::abs(t - static_cast<double>(j)) > 1e-6)
            throw std::invalid_argument("corrector lookup: point not on the torus lattice");
        c[l] = static_cast<int>(((j % grid.n) + grid.n) % grid.n);
    }
    return grid.index(c);
}

namespace {

// mean of each staggered component
std::vector<double> flux_mean(const VectorField& F) {
    std::vector<double> m(static_cast<std::size_t>(F.grid.d), 0.0);
    for (int l = 0; l < F.grid.d; ++l) m[static_cast<std::size_t>(l)] = k::mean(F.comp[l]);
    return m;
}

double rel_norm(const VectorField& A, const VectorField& B) {
    // ||A - B|| / ||B|| over all components
    double num = 0.0, den = 0.0;
    for (int l = 0; l < A.grid.d; ++l) {
        for (std::size_t i = 0; i < A.comp[l].size(); ++i) {
            const double dlt = A.comp[l][i] - B.comp[l][i];
            num += dlt * dlt;
            den += B.comp[l][i] * B.comp[l][i];
        }
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

// (sigma_i e_j)_l on l-edges: face (l,j) values averaged along axis j.
void sigma_column_to_edges(const SkewField& s, int j, VectorField& out) {
    const Grid& g = s.grid;
    const std::size_t N = g.node_count();
    const int nps = g.nps();
    for (int l = 0; l < g.d; ++l) {
        if (l == j) {
            k::fill(out.comp[l], 0.0);
            continue;
        }
        const int p = s.pair_index(l, j);
        const double sgn = s.sign(l, j);
        const std::size_t sj = g.stride(j);
        const std::size_t span = sj * static_cast<std::size_t>(nps);
        const double* arr = s.comp[static_cast<std::size_t>(p)].data();
        double* o = out.comp[l].data();
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(N); ++ii) {
            const std::size_t i = static_cast<std::size_t>(ii);
            const std::size_t ij = (i / sj) % static_cast<std::size_t>(nps);
            const std::size_t prev = (ij > 0) ? i - sj : i - sj + span;
            o[i] = sgn * 0.5 * (arr[i] + arr[prev]);
        }
    }
}

// (phi a - sigma) e_j as an edge field: phi is averaged onto each edge and
// multiplied by the unit flux a e_j there.
VectorField assemble_psi_rhs(const DivFormOperator& A, const ScalarField& phi, const SkewField& sigma, int j) {
    const Grid& g = phi.grid;
    VectorField rhs(g);
    VectorField aej = A.unit_flux(j);
    std::vector<double> phie;
    for (int l = 0; l < g.d; ++l) {
        k::node_to_edge(g, phi.v, l, phie);
        double* o = rhs.comp[l].data();
        const double* f = aej.comp[l].data();
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(phie.size()); ++i)
            o[i] = phie[static_cast<std::size_t>(i)] * f[static_cast<std::size_t>(i)];
    }
    VectorField se(g);
    sigma_column_to_edges(sigma, j, se);
    for (int l = 0; l < g.d; ++l) k::axpy(-1.0, se.comp[l], rhs.comp[l]);
    return rhs;
}

} // namespace

std::pair<std::vector<ScalarField>, Eigen::MatrixXd> first_order(const CoefficientField& a, const SolverConfig& cfg,
                                                                 std::vector<double>* residuals) {
    const Grid& g = a.grid;
    DivFormOperator A(a);
    std::vector<ScalarField> phi;
    Eigen::MatrixXd abar = Eigen::MatrixXd::Zero(g.d, g.d);
    if (residuals) residuals->clear();
    for (int i = 0; i < g.d; ++i) {
        VectorField aei = A.unit_flux(i);
        SolveStats st;
        phi.push_back(solve_cell(a, aei, cfg, &st));
        if (residuals) residuals->push_back(st.true_rel_residual);
        // flux of e_i + grad phi_i
        VectorField w = k::gradient(phi.back());
        for (std::size_t idx = 0; idx < w.comp[i].size(); ++idx) w.comp[i][idx] += 1.0;
        VectorField fl(g);
        A.flux(w, fl);
        const auto m = flux_mean(fl);
        for (int l = 0; l < g.d; ++l) abar(l, i) = m[static_cast<std::size_t>(l)];
    }
    return {std::move(phi), abar};
}

CorrectorSet compute_correctors(const CoefficientField& a, const SolverConfig& cfg, const CorrectorOptions& opts) {
    const Grid& g = a.grid;
    if (!g.is_torus()) throw std::invalid_argument("compute_correctors: torus grid required");
    DivFormOperator A(a);
    CorrectorSet cs;
    cs.grid = g;
    cs.d = g.d;

    auto [phi, abar] = first_order(a, cfg, &cs.residuals.cell);
    cs.phi = std::move(phi);
    cs.abar = abar;

    // flux fluctuations and their skew potentials
    std::vector<VectorField> q_first;
    for (int i = 0; i < g.d; ++i) {
        VectorField w = k::gradient(cs.phi[static_cast<std::size_t>(i)]);
        for (std::size_t idx = 0; idx < w.comp[i].size(); ++idx) w.comp[i][idx] += 1.0;
        VectorField fl(g);
        A.flux(w, fl);
        for (int l = 0; l < g.d; ++l) {
            const double m = abar(l, i);
            for (auto& v : fl.comp[l]) v -= m;
            const double m2 = k::mean(fl.comp[l]);
            if (std::abs(m2) > 1e-8)
                throw std::runtime_error("flux_correctors: q_i not mean-zero; homogenized flux is inconsistent");
        }
        q_first.push_back(std::move(fl));
    }
    for (int i = 0; i < g.d; ++i) {
        cs.sigma.push_back(curl_potential(q_first[static_cast<std::size_t>(i)]));
        VectorField divs = skew_divergence(cs.sigma.back());
        cs.residuals.sigma_div.push_back(rel_norm(divs, q_first[static_cast<std::size_t>(i)]));
    }

    if (!opts.second_order) return cs;

    cs.has_second_order = true;
    cs.C = Tensor3(g.d);
    std::vector<VectorField> q_second;
    for (int i = 0; i < g.d; ++i) {
        for (int j = 0; j < g.d; ++j) {
            VectorField rhs = assemble_psi_rhs(A, cs.phi[static_cast<std::size_t>(i)],
                                               cs.sigma[static_cast<std::size_t>(i)], j);
            SolveStats st;
            cs.psi.push_back(solve_cell(a, rhs, cfg, &st));
            cs.residuals.psi_cell.push_back(st.true_rel_residual);
            // flux a grad psi_ij + (phi_i a - sigma_i) e_j
            VectorField grad = k::gradient(cs.psi.back());
            VectorField fl(g);
            A.flux(grad, fl);
            for (int l = 0; l < g.d; ++l) k::axpy(1.0, rhs.comp[l], fl.comp[l]);
            const auto m = flux_mean(fl);
            for (int l = 0; l < g.d; ++l) {
                cs.C(i, j, l) = m[static_cast<std::size_t>(l)];
                for (auto& v : fl.comp[l]) v -= m[static_cast<std::size_t>(l)];
            }
            q_second.push_back(std::move(fl));
        }
    }

    if (!opts.flux_potentials) return cs;
    cs.has_flux_potentials = true;
    for (int i = 0; i < g.d; ++i)
        for (int j = 0; j < g.d; ++j) {
            const auto& q = q_second[static_cast<std::size_t>(i * g.d + j)];
            for (int l = 0; l < g.d; ++l)
                if (std::abs(k::mean(q.comp[l])) > 1e-8)
                    throw std::runtime_error("flux_potentials: q_ij not mean-zero");
            cs.Psi.push_back(curl_potential(q));
            VectorField divs = skew_divergence(cs.Psi.back());
            cs.residuals.Psi_div.push_back(rel_norm(divs, q));
        }
    return cs;
}

Tensor3 cross_check_C(const CorrectorSet& plain, const CorrectorSet& starred) {
    const Grid& g = plain.grid;
    if (!g.same_layout(starred.grid)) throw std::invalid_argument("cross_check_C: grid mismatch");
    const int d = g.d;
    Tensor3 Cp(d);
    std::vector<VectorField> grad_phi, grad_phi_star;
    for (int i = 0; i < d; ++i) {
        grad_phi.push_back(k::gradient(plain.phi[static_cast<std::size_t>(i)]));
        grad_phi_star.push_back(k::gradient(starred.phi[static_cast<std::size_t>(i)]));
    }
    VectorField se(g);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            // e_j . sigma_i grad phi*_k  summed per edge direction
            for (int kk = 0; kk < d; ++kk) {
                double acc = 0.0;
                sigma_column_to_edges(plain.sigma[static_cast<std::size_t>(i)], j, se);
                // (sigma_i)_{j l} = -(sigma_i e_j)_l with our column helper?
                // sigma_column_to_edges gives (sigma_i)_{l j}; we need
                // (sigma_i)_{j l} = -(sigma_i)_{l j}, handled by the sign below.
                for (int l = 0; l < d; ++l)
                    acc -= k::dot(se.comp[l], grad_phi_star[static_cast<std::size_t>(kk)].comp[l]);
                sigma_column_to_edges(starred.sigma[static_cast<std::size_t>(kk)], j, se);
                for (int l = 0; l < d; ++l)
                    acc += k::dot(se.comp[l], grad_phi[static_cast<std::size_t>(i)].comp[l]);
                Cp(i, j, kk) = acc / static_cast<double>(g.node_count());
            }
        }
    return Cp;
}

Tensor3 cell_average_invariant(const CoefficientField& a, const CoefficientField& astar, const CorrectorSet& plain,
                               const CorrectorSet& starred, int periods) {
    const Grid& g = a.grid;
    const int d = g.d;
    if (periods % 2 != 0) throw std::invalid_argument("cell_average_invariant: periods must be even");
    DivFormOperator A(a), As(astar);

    // staggered fluxes of e_i + grad phi_i for both media, kept on edges so
    // the coordinate factors below are evaluated exactly at the sample points
    std::vector<VectorField> Fp, Fs;
    for (int i = 0; i < d; ++i) {
        VectorField w = k::gradient(plain.phi[static_cast<std::size_t>(i)]);
        for (auto& v : w.comp[i]) v += 1.0;
        VectorField fl(g);
        A.flux(w, fl);
        Fp.push_back(std::move(fl));
        VectorField ws = k::gradient(starred.phi[static_cast<std::size_t>(i)]);
        for (auto& v : ws.comp[i]) v += 1.0;
        VectorField fls(g);
        As.flux(ws, fls);
        Fs.push_back(std::move(fls));
    }
    // phi interpolated onto each edge direction
    std::vector<std::vector<std::vector<double>>> phie(static_cast<std::size_t>(d)), phise(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        phie[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(d));
        phise[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) {
            k::node_to_edge(g, plain.phi[static_cast<std::size_t>(i)].v, j, phie[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
            k::node_to_edge(g, starred.phi[static_cast<std::size_t>(i)].v, j, phise[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
        }
    }

    const double P = g.extent;
    const int wn = periods * g.n;
    const double R = 0.45 * periods * P;
    const double x0 = -0.5 * periods * P;
    const double shift = std::fmod(x0 - g.origin0, P);
    if (std::min(std::abs(shift), P - std::abs(shift)) > 1e-9 * P)
        throw std::invalid_argument("cell_average_invariant: window origin must align with the torus lattice");

    Tensor3 out(d);
    std::array<int, 3> c{0, 0, 0};
    const int wz = (d == 3) ? wn : 1;
    for (int j = 0; j < d; ++j) {
        double wsum = 0.0;
        Tensor3 acc(d); // slot (i, 0, k) accumulates the pair (i, k) for this j
        for (int ix = 0; ix < wn; ++ix) {
            for (int iy = 0; iy < wn; ++iy) {
                for (int iz = 0; iz < wz; ++iz) {
                    std::array<double, 3> x{x0 + ix * g.h, x0 + iy * g.h, (d == 3) ? x0 + iz * g.h : 0.0};
                    x[j] += 0.5 * g.h; // j-edge midpoint
                    double r2 = 0.0;
                    for (int l = 0; l < d; ++l) r2 += x[l] * x[l];
                    if (r2 >= R * R) continue;
                    const double t = 1.0 - r2 / (R * R);
                    const double t2w = t * t;
                    const double t4 = t2w * t2w;
                    const double w = t4 * t4; // C^7 window keeps the x-weighted terms small
                    c[0] = ((ix % g.n) + g.n) % g.n;
                    c[1] = ((iy % g.n) + g.n) % g.n;
                    c[2] = ((iz % g.n) + g.n) % g.n;
                    const std::size_t idx = g.index(c);
                    wsum += w;
                    for (int i = 0; i < d; ++i)
                        for (int kk = 0; kk < d; ++kk) {
                            const double t1 = (x[i] + phie[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][idx]) *
                                              Fs[static_cast<std::size_t>(kk)].comp[j][idx];
                            const double t2 =
                                (x[kk] + phise[static_cast<std::size_t>(kk)][static_cast<std::size_t>(j)][idx]) *
                                Fp[static_cast<std::size_t>(i)].comp[j][idx];
                            const double hom = x[i] * starred.abar(j, kk) - x[kk] * plain.abar(j, i);
                            acc(i, 0, kk) += w * (t1 - t2 - hom);
                        }
                }
            }
        }
        for (int i = 0; i < d; ++i)
            for (int kk = 0; kk < d; ++kk) out(i, j, kk) = acc(i, 0, kk) / wsum;
    }
    return out;
}

std::vector<GrowthReport> growth_diagnostics(const CorrectorSet& set, const std::vector<std::array<double, 3>>& centers,
                                             const std::vector<double>& radii) {
    if (radii.size() < 3 || radii.back() / radii.front() < 4.0 - 1e-9)
        throw std::invalid_argument("growth_diagnostics: radius range too small (< 3 dyadic levels)");
    const Grid& g = set.grid;
    std::vector<GrowthReport> reports;
    for (const auto& center : centers) {
        GrowthReport rep;
        rep.center = center;
        for (double R : radii) {
            auto nodes = kernels::ball_nodes(g, center, R);
            double s1 = 0.0;
            for (const auto& f : set.phi)
                for (auto i : nodes) s1 += f.v[i] * f.v[i];
            for (const auto& s : set.sigma)
                for (const auto& compv : s.comp)
                    for (auto i : nodes) s1 += compv[i] * compv[i];
            double s2 = 0.0;
            if (set.has_second_order) {
                auto rms_recentered = [&](const std::vector<double>& v) {
                    double m = 0.0;
                    for (auto i : nodes) m += v[i];
                    m /= static_cast<double>(nodes.size());
                    double s = 0.0;
                    for (auto i : nodes) {
                        const double dlt = v[i] - m;
                        s += dlt * dlt;
                    }
                    return s;
                };
                for (const auto& f : set.psi) s2 += rms_recentered(f.v);
                for (const auto& s : set.Psi)
                    for (const auto& compv : s.comp) s2 += rms_recentered(compv);
            }
            GrowthRow row;
            row.radius = R;
            row.first_order = std::sqrt(s1 / static_cast<double>(nodes.size())) / R;
            row.second_order = set.has_second_order ? std::sqrt(s2 / static_cast<double>(nodes.size())) / (R * R) : 0.0;
            rep.rows.push_back(row);
        }
        std::vector<double> rs, v1, v2;
        for (const auto& r : rep.rows) {
            rs.push_back(r.radius);
            v1.push_back(std::max(r.first_order, 1e-300));
            v2.push_back(std::max(r.second_order, 1e-300));
        }
        bool fit_ok = true;
        for (double v : v1)
            if (v <= 1e-250) fit_ok = false;
        if (fit_ok) rep.slope_first = fit_rate(rs, v1).slope;
        if (set.has_second_order) {
            fit_ok = true;
            for (double v : v2)
                if (v <= 1e-250) fit_ok = false;
            if (fit_ok) rep.slope_second = fit_rate(rs, v2).slope;
        }
        rep.r_star = 2.0 * radii.back(); // sentinel: never dips below 1 in range
        for (std::size_t i = 0; i < rep.rows.size(); ++i) {
            bool ok = true;
            for (std::size_t j = i; j < rep.rows.size(); ++j)
                if (rep.rows[j].first_order > 1.0 || rep.rows[j].second_order > 1.0) ok = false;
            if (ok) {
                rep.r_star = rep.rows[i].radius;
                break;
            }
        }
        reports.push_back(std::move(rep));
    }
    return reports;
}

} // namespace homlab
