#include "solver.hpp"

#include "../core/kernels.hpp"

#include <cmath>
#include <sstream>

namespace homlab {

namespace k = kernels;

DivFormOperator::DivFormOperator(const CoefficientField& a) : a_(&a) {}

void DivFormOperator::flux(const VectorField& w, VectorField& out) const {
    const Grid& g = a_->grid;
    const std::size_t N = g.node_count();
    for (int l = 0; l < g.d; ++l) {
        const double* dl = a_->diag[static_cast<std::size_t>(l)].data();
        const double* wl = w.comp[l].data();
        double* ol = out.comp[l].data();
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(N); ++i) ol[i] = dl[i] * wl[i];
    }
    if (!a_->has_offdiag) return;
    std::vector<double> wbar, t(N), te;
    for (int l = 0; l < g.d; ++l) {
        k::fill(t, 0.0);
        for (int j = 0; j < g.d; ++j) {
            if (j == l) continue;
            k::edge_to_node(w, j, wbar);
            const double* alj = a_->offd.at(l, j).data();
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(N); ++i) t[i] += alj[i] * wbar[i];
        }
        k::node_to_edge(g, t, l, te);
        double* ol = out.comp[l].data();
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(N); ++i) ol[i] += te[i];
    }
}

void DivFormOperator::apply(const std::vector<double>& u, std::vector<double>& r) const {
    const Grid& g = a_->grid;
    ScalarField uf(g);
    uf.v = u; // cheap enough relative to the stencil work at these sizes
    VectorField grad(g), fl(g);
    k::gradient(uf, grad);
    flux(grad, fl);
    ScalarField div(g);
    k::divergence(fl, div);
    r.resize(u.size());
    const std::size_t N = u.size();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(N); ++i) r[i] = -div.v[i];
}

VectorField DivFormOperator::unit_flux(int i) const {
    const Grid& g = a_->grid;
    VectorField e(g);
    k::fill(e.comp[i], 1.0);
    if (!g.is_torus()) {
        // no trailing edge layer on the box
        const std::size_t s = g.stride(i);
        const int nps = g.nps();
        const std::size_t N = g.node_count();
        for (std::size_t idx = 0; idx < N; ++idx)
            if ((idx / s) % static_cast<std::size_t>(nps) + 1 == static_cast<std::size_t>(nps)) e.comp[i][idx] = 0.0;
    }
    VectorField out(g);
    flux(e, out);
    return out;
}

std::vector<double> DivFormOperator::jacobi_diag() const {
    const Grid& g = a_->grid;
    const std::size_t N = g.node_count();
    const int nps = g.nps();
    std::vector<double> D(N, 0.0);
    const double inv_h2 = 1.0 / (g.h * g.h);
    for (int l = 0; l < g.d; ++l) {
        const std::size_t s = g.stride(l);
        const std::size_t span = s * static_cast<std::size_t>(nps);
        const double* dl = a_->diag[static_cast<std::size_t>(l)].data();
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(N); ++ii) {
            const std::size_t i = static_cast<std::size_t>(ii);
            const std::size_t il = (i / s) % static_cast<std::size_t>(nps);
            double prev;
            if (il > 0) prev = dl[i - s];
            else if (g.is_torus()) prev = dl[i - s + span];
            else prev = 0.0;
            double cur = (g.is_torus() || il + 1 < static_cast<std::size_t>(nps)) ? dl[i] : 0.0;
            D[i] += (cur + prev) * inv_h2;
        }
    }
    if (!g.is_torus()) {
        for (std::size_t i = 0; i < N; ++i) {
            const auto c = g.coords(i);
            for (int l = 0; l < g.d; ++l)
                if (c[l] == 0 || c[l] + 1 == nps) {
                    D[i] = 1.0;
                    break;
                }
        }
    }
    return D;
}

void ref_apply_op(const CoefficientField& a, const std::vector<double>& u, std::vector<double>& r) {
    const Grid& g = a.grid;
    ScalarField uf(g);
    uf.v = u;
    VectorField grad(g);
    ref::gradient(uf, grad);
    // flux: diagonal edge samples, off-diagonal via node averages (naive)
    VectorField fl(g);
    const std::size_t N = g.node_count();
    for (int l = 0; l < g.d; ++l)
        for (std::size_t i = 0; i < N; ++i) fl.comp[l][i] = a.diag[static_cast<std::size_t>(l)][i] * grad.comp[l][i];
    if (a.has_offdiag) {
        const int nps = g.nps();
        for (int l = 0; l < g.d; ++l) {
            std::vector<double> t(N, 0.0);
            for (int j = 0; j < g.d; ++j) {
                if (j == l) continue;
                for (std::size_t i = 0; i < N; ++i) {
                    auto c = g.coords(i);
                    auto cp = c;
                    cp[j] = (c[j] > 0) ? c[j] - 1 : (g.is_torus() ? nps - 1 : 0);
                    double cur = grad.comp[j][i];
                    if (!g.is_torus() && c[j] + 1 == nps) cur = 0.0;
                    double prev = (c[j] > 0 || g.is_torus()) ? grad.comp[j][g.index(cp)] : 0.0;
                    t[i] += a.offd.at(l, j)[i] * 0.5 * (cur + prev);
                }
            }
            for (std::size_t i = 0; i < N; ++i) {
                auto c = g.coords(i);
                if (c[l] + 1 < nps) {
                    auto cn = c;
                    cn[l] += 1;
                    fl.comp[l][i] += 0.5 * (t[i] + t[g.index(cn)]);
                } else if (g.is_torus()) {
                    auto cn = c;
                    cn[l] = 0;
                    fl.comp[l][i] += 0.5 * (t[i] + t[g.index(cn)]);
                }
            }
        }
    }
    ScalarField div(g);
    ref::divergence(fl, div);
    r.resize(N);
    for (std::size_t i = 0; i < N; ++i) r[i] = -div.v[i];
}

namespace {

struct Krylov {
    const DivFormOperator& A;
    std::vector<double> Dinv; // Jacobi inverse diagonal, empty if disabled
    bool project;             // keep iterates mean-zero (torus null space)

    void precond(const std::vector<double>& r, std::vector<double>& z) const {
        const std::size_t N = r.size();
        z.resize(N);
        if (Dinv.empty()) {
            k::copy(r, z);
            return;
        }
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(N); ++i) z[i] = r[i] * Dinv[i];
    }

    void post(std::vector<double>& x) const {
        if (project) k::subtract_mean(x);
    }
};

SolveStats run_cg(const Krylov& ks, const std::vector<double>& b, std::vector<double>& x, const SolverConfig& cfg) {
    const std::size_t N = b.size();
    const double bnorm = k::nrm2(b);
    x.assign(N, 0.0);
    if (bnorm == 0.0) return {0, 0.0, 0.0, "cg"};
    std::vector<double> r = b, z, p, Ap(N);
    ks.precond(r, z);
    p = z;
    double rz = k::dot(r, z);
    double rel = 1.0;
    for (int it = 1; it <= cfg.max_iters; ++it) {
        ks.A.apply(p, Ap);
        const double pAp = k::dot(p, Ap);
        if (pAp <= 0.0) throw SolverError("cg: operator not positive on search direction", rel);
        const double alpha = rz / pAp;
        k::axpy(alpha, p, x);
        k::axpy(-alpha, Ap, r);
        ks.post(x);
        rel = k::nrm2(r) / bnorm;
        if (rel <= cfg.tol) return {it, rel, 0.0, "cg"};
        ks.precond(r, z);
        const double rz_new = k::dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        k::xpay(z, beta, p);
    }
    throw SolverError("cg: no convergence within max_iters", rel);
}

SolveStats run_bicgstab(const Krylov& ks, const std::vector<double>& b, std::vector<double>& x,
                        const SolverConfig& cfg) {
    const std::size_t N = b.size();
    const double bnorm = k::nrm2(b);
    x.assign(N, 0.0);
    if (bnorm == 0.0) return {0, 0.0, 0.0, "bicgstab"};
    std::vector<double> r = b, rhat = b, p(N, 0.0), v(N, 0.0), phat, shat, t(N), s;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    double rel = 1.0;
    for (int it = 1; it <= cfg.max_iters; ++it) {
        const double rho_new = k::dot(rhat, r);
        if (rho_new == 0.0) throw SolverError("bicgstab: breakdown (rho = 0)", rel);
        if (it == 1) {
            p = r;
        } else {
            const double beta = (rho_new / rho) * (alpha / omega);
            // p = r + beta (p - omega v)
            k::axpy(-omega, v, p);
            k::xpay(r, beta, p);
        }
        rho = rho_new;
        ks.precond(p, phat);
        ks.A.apply(phat, v);
        const double rhv = k::dot(rhat, v);
        if (rhv == 0.0) throw SolverError("bicgstab: breakdown (rhat.v = 0)", rel);
        alpha = rho / rhv;
        s = r;
        k::axpy(-alpha, v, s);
        if (k::nrm2(s) / bnorm <= cfg.tol) {
            k::axpy(alpha, phat, x);
            ks.post(x);
            rel = k::nrm2(s) / bnorm;
            return {it, rel, 0.0, "bicgstab"};
        }
        ks.precond(s, shat);
        ks.A.apply(shat, t);
        const double tt = k::dot(t, t);
        if (tt == 0.0) throw SolverError("bicgstab: breakdown (t = 0)", rel);
        omega = k::dot(t, s) / tt;
        k::axpy(alpha, phat, x);
        k::axpy(omega, shat, x);
        ks.post(x);
        r = s;
        k::axpy(-omega, t, r);
        rel = k::nrm2(r) / bnorm;
        if (rel <= cfg.tol) return {it, rel, 0.0, "bicgstab"};
        if (omega == 0.0) throw SolverError("bicgstab: breakdown (omega = 0)", rel);
    }
    throw SolverError("bicgstab: no convergence within max_iters", rel);
}

ScalarField solve_impl(const CoefficientField& a, const VectorField& g_field, const SolverConfig& cfg,
                       SolveStats* stats, bool torus) {
    cfg.validate();
    const Grid& g = a.grid;
    if (!g.same_layout(g_field.grid)) throw std::invalid_argument("solve: grid mismatch");
    DivFormOperator A(a);
    ScalarField b(g);
    k::divergence(g_field, b);
    Krylov ks{A, {}, torus};
    if (cfg.precond) {
        ks.Dinv = A.jacobi_diag();
        for (auto& dv : ks.Dinv) dv = (dv != 0.0) ? 1.0 / dv : 1.0;
    }
    const bool use_cg = (cfg.method == SolverConfig::Method::CG) ||
                        (cfg.method == SolverConfig::Method::Auto && a.symmetric);
    ScalarField u(g);
    SolveStats st = use_cg ? run_cg(ks, b.v, u.v, cfg) : run_bicgstab(ks, b.v, u.v, cfg);
    // re-verify the residual independently of the recursion
    std::vector<double> r;
    A.apply(u.v, r);
    const double bnorm = k::nrm2(b.v);
    if (bnorm > 0.0) {
        k::axpy(-1.0, b.v, r);
        st.true_rel_residual = k::nrm2(r) / bnorm;
        if (st.true_rel_residual > 10.0 * cfg.tol)
            throw SolverError("solve: true residual exceeds 10x tolerance", st.true_rel_residual);
    }
    if (stats) *stats = st;
    return u;
}

} // namespace

ScalarField solve_cell(const CoefficientField& a, const VectorField& g_field, const SolverConfig& cfg,
                       SolveStats* stats) {
    if (!a.grid.is_torus()) throw std::invalid_argument("solve_cell: torus grid required");
    return solve_impl(a, g_field, cfg, stats, true);
}

ScalarField solve_box_dirichlet(const CoefficientField& a, const VectorField& g_field, const SolverConfig& cfg,
                                SolveStats* stats) {
    const Grid& g = a.grid;
    if (g.is_torus()) throw std::invalid_argument("solve_box_dirichlet: box grid required");
    // the source must keep clear of the boundary layer
    const int nps = g.nps();
    for (int l = 0; l < g.d; ++l)
        for (std::size_t i = 0; i < g.node_count(); ++i)
            if (g_field.comp[l][i] != 0.0) {
                const auto c = g.coords(i);
                for (int m = 0; m < g.d; ++m)
                    if (c[m] <= 1 || c[m] + 2 >= nps)
                        throw std::invalid_argument("solve_box_dirichlet: source support touches the boundary");
            }
    return solve_impl(a, g_field, cfg, stats, false);
}

} // namespace homlab
