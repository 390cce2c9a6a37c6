#include "twoscale.hpp"

#include "../core/kernels.hpp"

#include <cmath>
#include <functional>

namespace homlab {

namespace k = kernels;

ScalarField expand(const Poly& u_h, const CorrectorSet& cs, const Poly& utilde, const Grid& target) {
    if (target.d != cs.d) throw std::invalid_argument("expand: dimension mismatch");
    const Poly total = u_h + utilde;
    std::vector<Poly> d_total, dd;
    for (int i = 0; i < cs.d; ++i) d_total.push_back(total.derivative(i));
    if (cs.has_second_order)
        for (int i = 0; i < cs.d; ++i)
            for (int j = 0; j < cs.d; ++j) dd.push_back(u_h.derivative(i).derivative(j));

    ScalarField out(target);
    const std::size_t N = target.node_count();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(N); ++ii) {
        const std::size_t idx = static_cast<std::size_t>(ii);
        const auto c = target.coords(idx);
        const auto x = target.position(c);
        const std::size_t t = cs.wrap_index(x);
        double v = total.eval(x);
        for (int i = 0; i < cs.d; ++i) v += cs.phi[static_cast<std::size_t>(i)].v[t] * d_total[static_cast<std::size_t>(i)].eval(x);
        if (cs.has_second_order)
            for (int i = 0; i < cs.d; ++i)
                for (int j = 0; j < cs.d; ++j)
                    v += cs.psi_at(i, j).v[t] * dd[static_cast<std::size_t>(i * cs.d + j)].eval(x);
        out.v[idx] = v;
    }
    return out;
}

ScalarField expand_dual(const GCombo& v_h, const EuclidToolkit& tk, const CorrectorSet& cs_star,
                        const MultipoleFn& vtilde, const Grid& target, double r_excl) {
    if (target.d != 3) throw std::invalid_argument("expand_dual: d = 3 required");
    MultipoleFn base = tk.combo(v_h);
    MultipoleFn total = vtilde.empty() ? base : (base + vtilde);
    std::vector<MultipoleFn> d_total, dd;
    for (int i = 0; i < 3; ++i) d_total.push_back(total.derivative(i));
    const bool second = cs_star.has_second_order;
    if (second)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                MIdx ij{0, 0, 0};
                ij[i] += 1;
                ij[j] += 1;
                dd.push_back(base.derivative_multi(ij));
            }

    ScalarField out(target);
    const std::size_t N = target.node_count();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(N); ++ii) {
        const std::size_t idx = static_cast<std::size_t>(ii);
        const auto c = target.coords(idx);
        const auto x = target.position(c);
        const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        if (r < r_excl) {
            out.v[idx] = 0.0;
            continue;
        }
        const std::size_t t = cs_star.wrap_index(x);
        double v = total.eval(x);
        for (int i = 0; i < 3; ++i) v += cs_star.phi[static_cast<std::size_t>(i)].v[t] * d_total[static_cast<std::size_t>(i)].eval(x);
        if (second)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    v += cs_star.psi_at(i, j).v[t] * dd[static_cast<std::size_t>(i * 3 + j)].eval(x);
        out.v[idx] = v;
    }
    return out;
}

namespace {

// Accumulate  sign * [ s (a w)_l - (sigma w)_l ]  onto g, where s is a node
// scalar and sigma a face-centered skew field on the corrector torus, and w
// is an analytic vector evaluated at staggered positions of `target`.
void add_corrected_flux_term(VectorField& g, const CoefficientField& a, const CorrectorSet& cs,
                             const ScalarField& s, const SkewField& sigma,
                             const std::function<double(int, const std::array<double, 3>&)>& w_at, double sign) {
    const Grid& target = g.grid;
    const int d = target.d;
    const int nps = target.nps();
    const std::size_t N = target.node_count();

    // w sampled on target edges, then pushed through the coefficient
    VectorField w(target);
    for (int l = 0; l < d; ++l) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(N); ++ii) {
            const std::size_t idx = static_cast<std::size_t>(ii);
            const auto c = target.coords(idx);
            if (!target.is_torus() && c[l] + 1 == nps) {
                w.comp[l][idx] = 0.0;
                continue;
            }
            auto xe = target.position(c);
            xe[l] += 0.5 * target.h;
            w.comp[l][idx] = w_at(l, xe);
        }
    }
    VectorField aw(target);
    DivFormOperator A(a);
    A.flux(w, aw);

    for (int l = 0; l < d; ++l) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(N); ++ii) {
            const std::size_t idx = static_cast<std::size_t>(ii);
            const auto c = target.coords(idx);
            if (!target.is_torus() && c[l] + 1 == nps) continue;
            auto x0 = target.position(c);
            auto x1 = x0;
            x1[l] += target.h;
            const double sv = 0.5 * (s.v[cs.wrap_index(x0)] + s.v[cs.wrap_index(x1)]);
            double acc = sv * aw.comp[l][idx];
            // (sigma w)_l gathered from the two adjacent (l,j) faces
            for (int j = 0; j < d; ++j) {
                if (j == l) continue;
                const int p = sigma.pair_index(l, j);
                const double sgn = sigma.sign(l, j);
                const auto& arr = sigma.comp[static_cast<std::size_t>(p)];
                double sum = 0.0;
                for (int step = 0; step < 2; ++step) {
                    auto xb = target.position(c);
                    if (step == 1) xb[j] -= target.h; // back face; wrap via the lattice lookup
                    const std::size_t fb = cs.wrap_index(xb);
                    auto xmid = xb;
                    xmid[l] += 0.5 * target.h;
                    xmid[j] += 0.5 * target.h;
                    sum += sgn * arr[fb] * w_at(j, xmid);
                }
                acc -= 0.5 * sum;
            }
            g.comp[l][idx] += sign * acc;
        }
    }
}

} // namespace

VectorField residual_flux(const Poly& u_h, const CoefficientField& a, const CorrectorSet& cs, const Poly& utilde,
                          const Grid& target) {
    if (!cs.has_flux_potentials) throw std::invalid_argument("residual_flux: flux potentials Psi are required");
    const int d = cs.d;

    const int m = u_h.degree();
    const Poly u_low = (m >= 0) ? (u_h - u_h.homogeneous_part(m)) : u_h;
    const Tensor3 Cs = cs.C.symmetrized();

    VectorField g(target);
    const std::size_t N = target.node_count();
    const int nps = target.nps();

    // C^sym term evaluated at edge midpoints
    std::vector<Poly> dd_ulow;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) dd_ulow.push_back(u_low.derivative(i).derivative(j));
    for (int l = 0; l < d; ++l) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(N); ++ii) {
            const std::size_t idx = static_cast<std::size_t>(ii);
            const auto c = target.coords(idx);
            if (!target.is_torus() && c[l] + 1 == nps) continue;
            auto xe = target.position(c);
            xe[l] += 0.5 * target.h;
            double acc = 0.0;
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) acc += Cs(i, j, l) * dd_ulow[static_cast<std::size_t>(i * d + j)].eval(xe);
            g.comp[l][idx] -= acc;
        }
    }

    // (phi_i a - sigma_i) grad d_i ut
    for (int i = 0; i < d; ++i) {
        std::vector<Poly> grad_di;
        bool nonzero = false;
        for (int l = 0; l < d; ++l) {
            grad_di.push_back(utilde.derivative(i).derivative(l));
            if (!grad_di.back().is_zero()) nonzero = true;
        }
        if (!nonzero) continue;
        auto w_at = [&grad_di](int l, const std::array<double, 3>& x) {
            return grad_di[static_cast<std::size_t>(l)].eval(x);
        };
        add_corrected_flux_term(g, a, cs, cs.phi[static_cast<std::size_t>(i)], cs.sigma[static_cast<std::size_t>(i)],
                                w_at, -1.0);
    }

    // (psi_ij a - Psi_ij) grad d_ij u_h
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            std::vector<Poly> grad_dij;
            bool nonzero = false;
            for (int l = 0; l < d; ++l) {
                grad_dij.push_back(u_h.derivative(i).derivative(j).derivative(l));
                if (!grad_dij.back().is_zero()) nonzero = true;
            }
            if (!nonzero) continue;
            auto w_at = [&grad_dij](int l, const std::array<double, 3>& x) {
                return grad_dij[static_cast<std::size_t>(l)].eval(x);
            };
            add_corrected_flux_term(g, a, cs, cs.psi_at(i, j), cs.Psi_at(i, j), w_at, -1.0);
        }
    return g;
}

namespace {

struct WindowEval {
    Grid box;
    CoefficientField medium;
    std::vector<std::size_t> window_nodes;
};

WindowEval make_window(const CoefficientField& a_torus) {
    const Grid& tg = a_torus.grid;
    if (!a_torus.generator) throw std::invalid_argument("window evaluation needs a medium generator");
    int nb = tg.n + 8;
    if (nb % 2 != 0) ++nb;
    WindowEval we;
    we.box = Grid::box(tg.d, nb, 0.5 * nb * tg.h);
    we.medium = sample_medium(we.box, a_torus.generator, a_torus.kind, a_torus.symmetric, a_torus.periodic,
                              a_torus.seed);
    const double lim = 0.4 * tg.extent;
    for (std::size_t i = 0; i < we.box.node_count(); ++i) {
        const auto c = we.box.coords(i);
        bool ok = true;
        for (int l = 0; l < tg.d; ++l)
            if (std::abs(we.box.pos(c[l])) > lim) ok = false;
        if (ok) we.window_nodes.push_back(i);
    }
    return we;
}

double window_rms(const std::vector<double>& v, const std::vector<std::size_t>& nodes) {
    double s = 0.0;
    for (auto i : nodes) s += v[i] * v[i];
    return std::sqrt(s / static_cast<double>(nodes.size()));
}

} // namespace

double harmonicity_residual_rms(const CoefficientField& a_torus, const CorrectorSet& cs, const Poly& u_h) {
    WindowEval we = make_window(a_torus);
    ScalarField F = expand(u_h, cs, Poly::zero(cs.d), we.box);
    DivFormOperator A(we.medium);
    std::vector<double> r;
    A.apply(F.v, r);
    return window_rms(r, we.window_nodes);
}

double expansion_consistency_rms(const CoefficientField& a_torus, const CorrectorSet& cs, const Poly& u_h,
                                 const Poly& utilde) {
    WindowEval we = make_window(a_torus);
    ScalarField F = expand(u_h, cs, utilde, we.box);
    DivFormOperator A(we.medium);
    std::vector<double> r;
    A.apply(F.v, r);
    VectorField g = residual_flux(u_h, we.medium, cs, utilde, we.box);
    ScalarField divg = k::divergence(g);
    std::vector<double> diff(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) diff[i] = r[i] - divg.v[i];
    return window_rms(diff, we.window_nodes);
}

HetPairing pairing_het(const ScalarField& u, const ScalarField& v, const CoefficientField& a, double R_cut) {
    const Grid& g = u.grid;
    if (!g.same_layout(v.grid) || !g.same_layout(a.grid)) throw std::invalid_argument("pairing_het: grid mismatch");
    const double reach = g.is_torus() ? 0.5 * g.extent : g.extent;
    if (2.0 * R_cut > reach + 1e-12) throw std::invalid_argument("pairing_het: cutoff annulus leaves the grid");

    const CoefficientField astar = transpose_medium(a);
    DivFormOperator A(a), As(astar);
    VectorField gu = k::gradient(u), gv = k::gradient(v);
    VectorField fu(g), fv(g);
    A.flux(gu, fu);
    As.flux(gv, fv);
    std::vector<double> ue, ve;

    auto eval_at = [&](double rc) {
        ScalarField eta(g);
        const std::size_t N = g.node_count();
        for (std::size_t i = 0; i < N; ++i) {
            const auto c = g.coords(i);
            double r2 = 0.0;
            for (int l = 0; l < g.d; ++l) {
                const double dx = g.wrap_delta(g.pos(c[l]));
                r2 += dx * dx;
            }
            const double r = std::sqrt(r2);
            eta.v[i] = std::clamp((2.0 * rc - r) / rc, 0.0, 1.0);
        }
        VectorField geta = k::gradient(eta);
        double acc = 0.0;
        for (int l = 0; l < g.d; ++l) {
            k::node_to_edge(g, v.v, l, ve);
            k::node_to_edge(g, u.v, l, ue);
            for (std::size_t i = 0; i < N; ++i) {
                const double integrand = ve[i] * fu.comp[l][i] - ue[i] * fv.comp[l][i];
                acc += geta.comp[l][i] * integrand;
            }
        }
        double hv = 1.0;
        for (int l = 0; l < g.d; ++l) hv *= g.h;
        return -acc * hv;
    };

    HetPairing out;
    out.value = eval_at(R_cut);
    out.value_alt = eval_at(R_cut / 1.5);
    const double scale = std::max(std::abs(out.value), std::abs(out.value_alt));
    out.variation = scale > 0.0 ? std::abs(out.value - out.value_alt) / scale : 0.0;
    return out;
}

} // namespace homlab
