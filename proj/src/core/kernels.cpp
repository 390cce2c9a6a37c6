#include "kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace homlab::kernels {

namespace {

constexpr std::size_t kBlock = 4096;

// Iterate axis-l lines: base index plus per-line length and neighbor offset.
struct AxisInfo {
    std::size_t stride;
    int nps;
};

inline AxisInfo axis_info(const Grid& g, int l) { return {g.stride(l), g.nps()}; }

} // namespace

void gradient(const ScalarField& f, VectorField& out) {
    const Grid& g = f.grid;
    const int nps = g.nps();
    const std::size_t N = g.node_count();
    const double inv_h = 1.0 / g.h;
    for (int l = 0; l < g.d; ++l) {
        const std::size_t s = g.stride(l);
        const std::size_t span = s * static_cast<std::size_t>(nps); // full cycle along axis l
        const double* u = f.v.data();
        double* e = out.comp[l].data();
        const bool torus = g.is_torus();
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(N); ++ii) {
            const std::size_t i = static_cast<std::size_t>(ii);
            const std::size_t il = (i / s) % static_cast<std::size_t>(nps);
            if (il + 1 < static_cast<std::size_t>(nps)) {
                e[i] = (u[i + s] - u[i]) * inv_h;
            } else if (torus) {
                e[i] = (u[i + s - span] - u[i]) * inv_h;
            } else {
                e[i] = 0.0; // box: no trailing edge
            }
        }
    }
}

VectorField gradient(const ScalarField& f) {
    VectorField out(f.grid);
    gradient(f, out);
    return out;
}

void divergence(const VectorField& F, ScalarField& out) {
    const Grid& g = F.grid;
    const int nps = g.nps();
    const std::size_t N = g.node_count();
    const double inv_h = 1.0 / g.h;
    const bool torus = g.is_torus();
    fill(out.v, 0.0);
    for (int l = 0; l < g.d; ++l) {
        const std::size_t s = g.stride(l);
        const std::size_t span = s * static_cast<std::size_t>(nps);
        const double* e = F.comp[l].data();
        double* r = out.v.data();
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(N); ++ii) {
            const std::size_t i = static_cast<std::size_t>(ii);
            const std::size_t il = (i / s) % static_cast<std::size_t>(nps);
            if (torus) {
                const std::size_t prev = (il > 0) ? i - s : i - s + span;
                r[i] += (e[i] - e[prev]) * inv_h;
            } else {
                if (il == 0 || il + 1 == static_cast<std::size_t>(nps)) continue; // boundary pinned
                r[i] += (e[i] - e[i - s]) * inv_h;
            }
        }
    }
    if (!torus) {
        // zero out non-interior nodes along the remaining axes
        double* r = out.v.data();
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(N); ++ii) {
            const std::size_t i = static_cast<std::size_t>(ii);
            for (int l = 0; l < g.d; ++l) {
                const std::size_t il = (i / g.stride(l)) % static_cast<std::size_t>(nps);
                if (il == 0 || il + 1 == static_cast<std::size_t>(nps)) {
                    r[i] = 0.0;
                    break;
                }
            }
        }
    }
}

ScalarField divergence(const VectorField& F) {
    ScalarField out(F.grid);
    divergence(F, out);
    return out;
}

void edge_to_node(const VectorField& F, int l, std::vector<double>& out) {
    const Grid& g = F.grid;
    const int nps = g.nps();
    const std::size_t N = g.node_count();
    const std::size_t s = g.stride(l);
    const std::size_t span = s * static_cast<std::size_t>(nps);
    const double* e = F.comp[l].data();
    out.resize(N);
    const bool torus = g.is_torus();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(N); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const std::size_t il = (i / s) % static_cast<std::size_t>(nps);
        double prev;
        if (il > 0) prev = e[i - s];
        else if (torus) prev = e[i - s + span];
        else prev = 0.0;
        double cur = e[i];
        if (!torus && il + 1 == static_cast<std::size_t>(nps)) cur = 0.0;
        out[i] = 0.5 * (cur + prev);
    }
}

void node_to_edge(const Grid& g, const std::vector<double>& c, int l, std::vector<double>& out) {
    const int nps = g.nps();
    const std::size_t N = g.node_count();
    const std::size_t s = g.stride(l);
    const std::size_t span = s * static_cast<std::size_t>(nps);
    out.resize(N);
    const bool torus = g.is_torus();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(N); ++ii) {
        const std::size_t i = static_cast<std::size_t>(ii);
        const std::size_t il = (i / s) % static_cast<std::size_t>(nps);
        if (il + 1 < static_cast<std::size_t>(nps)) out[i] = 0.5 * (c[i] + c[i + s]);
        else if (torus) out[i] = 0.5 * (c[i] + c[i + s - span]);
        else out[i] = 0.0;
    }
}

void vector_magnitude(const VectorField& F, std::vector<double>& out) {
    const Grid& g = F.grid;
    const std::size_t N = g.node_count();
    std::vector<double> tmp;
    out.assign(N, 0.0);
    for (int l = 0; l < g.d; ++l) {
        edge_to_node(F, l, tmp);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(N); ++i) out[i] += tmp[i] * tmp[i];
    }
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(N); ++i) out[i] = std::sqrt(out[i]);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t N = a.size();
    const std::size_t nb = (N + kBlock - 1) / kBlock;
    std::vector<double> partial(nb, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ib = 0; ib < static_cast<std::ptrdiff_t>(nb); ++ib) {
        const std::size_t lo = static_cast<std::size_t>(ib) * kBlock;
        const std::size_t hi = std::min(lo + kBlock, N);
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
        partial[ib] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

double nrm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
    const std::size_t N = y.size();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(N); ++i) y[i] += alpha * x[i];
}

void xpay(const std::vector<double>& x, double beta, std::vector<double>& y) {
    const std::size_t N = y.size();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(N); ++i) y[i] = x[i] + beta * y[i];
}

void scal(double alpha, std::vector<double>& x) {
    const std::size_t N = x.size();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(N); ++i) x[i] *= alpha;
}

void copy(const std::vector<double>& x, std::vector<double>& y) { y = x; }

void fill(std::vector<double>& x, double value) {
    const std::size_t N = x.size();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(N); ++i) x[i] = value;
}

double mean(const std::vector<double>& a) {
    std::vector<double> ones; // avoid allocating: reuse dot with blocks
    const std::size_t N = a.size();
    const std::size_t nb = (N + kBlock - 1) / kBlock;
    std::vector<double> partial(nb, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ib = 0; ib < static_cast<std::ptrdiff_t>(nb); ++ib) {
        const std::size_t lo = static_cast<std::size_t>(ib) * kBlock;
        const std::size_t hi = std::min(lo + kBlock, N);
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += a[i];
        partial[ib] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total / static_cast<double>(N);
}

void subtract_mean(std::vector<double>& a) {
    const double m = mean(a);
    const std::size_t N = a.size();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(N); ++i) a[i] -= m;
}

namespace {

template <typename Pred>
std::vector<std::size_t> select_nodes(const Grid& g, Pred&& pred) {
    std::vector<std::size_t> out;
    const std::size_t N = g.node_count();
    for (std::size_t i = 0; i < N; ++i) {
        auto c = g.coords(i);
        double r2 = 0.0;
        for (int l = 0; l < g.d; ++l) {
            const double dx = pred.delta(l, c[l]);
            r2 += dx * dx;
        }
        if (pred.keep(std::sqrt(r2))) out.push_back(i);
    }
    return out;
}

struct RegionPred {
    const Grid* g;
    std::array<double, 3> center;
    double r_in, r_out;
    double delta(int l, int cl) const { return g->wrap_delta(g->pos(cl) - center[l]); }
    bool keep(double r) const { return r >= r_in && r < r_out; }
};

} // namespace

std::vector<std::size_t> ball_nodes(const Grid& g, const std::array<double, 3>& center, double R) {
    if (R <= 0.0) throw std::invalid_argument("ball_nodes: R must be positive");
    RegionPred p{&g, center, -1.0, R};
    auto nodes = select_nodes(g, p);
    if (nodes.empty()) throw std::runtime_error("ball_nodes: empty region");
    return nodes;
}

std::vector<std::size_t> annulus_nodes(const Grid& g, const std::array<double, 3>& center, double r_in, double r_out) {
    if (!(0.0 <= r_in && r_in < r_out)) throw std::invalid_argument("annulus_nodes: need 0 <= r_in < r_out");
    RegionPred p{&g, center, r_in, r_out};
    auto nodes = select_nodes(g, p);
    if (nodes.empty()) throw std::runtime_error("annulus_nodes: empty region");
    return nodes;
}

double ball_mean(const ScalarField& f, double R, const std::array<double, 3>& center) {
    auto nodes = ball_nodes(f.grid, center, R);
    double s = 0.0;
    for (auto i : nodes) s += f.v[i];
    return s / static_cast<double>(nodes.size());
}

std::vector<double> ball_mean(const VectorField& F, double R, const std::array<double, 3>& center) {
    auto nodes = ball_nodes(F.grid, center, R);
    std::vector<double> out(F.grid.d, 0.0);
    std::vector<double> tmp;
    for (int l = 0; l < F.grid.d; ++l) {
        edge_to_node(F, l, tmp);
        double s = 0.0;
        for (auto i : nodes) s += tmp[i];
        out[l] = s / static_cast<double>(nodes.size());
    }
    return out;
}

double annulus_rms(const VectorField& F, double r_in, double r_out, const std::array<double, 3>& center) {
    auto nodes = annulus_nodes(F.grid, center, r_in, r_out);
    std::vector<double> mag;
    vector_magnitude(F, mag);
    double s = 0.0;
    for (auto i : nodes) s += mag[i] * mag[i];
    return std::sqrt(s / static_cast<double>(nodes.size()));
}

double annulus_rms_scalar(const ScalarField& f, double r_in, double r_out, const std::array<double, 3>& center) {
    auto nodes = annulus_nodes(f.grid, center, r_in, r_out);
    double s = 0.0;
    for (auto i : nodes) s += f.v[i] * f.v[i];
    return std::sqrt(s / static_cast<double>(nodes.size()));
}

} // namespace homlab::kernels

namespace homlab::ref {

void gradient(const ScalarField& f, VectorField& out) {
    const Grid& g = f.grid;
    const int nps = g.nps();
    const std::size_t N = g.node_count();
    const double inv_h = 1.0 / g.h;
    for (int l = 0; l < g.d; ++l) {
        for (std::size_t i = 0; i < N; ++i) {
            auto c = g.coords(i);
            double up;
            if (c[l] + 1 < nps) {
                auto cn = c;
                cn[l] += 1;
                up = f.v[g.index(cn)];
            } else if (g.is_torus()) {
                auto cn = c;
                cn[l] = 0;
                up = f.v[g.index(cn)];
            } else {
                out.comp[l][i] = 0.0;
                continue;
            }
            out.comp[l][i] = (up - f.v[i]) * inv_h;
        }
    }
}

void divergence(const VectorField& F, ScalarField& out) {
    const Grid& g = F.grid;
    const int nps = g.nps();
    const std::size_t N = g.node_count();
    const double inv_h = 1.0 / g.h;
    for (std::size_t i = 0; i < N; ++i) {
        auto c = g.coords(i);
        bool interior = true;
        if (!g.is_torus()) {
            for (int l = 0; l < g.d; ++l)
                if (c[l] == 0 || c[l] + 1 == nps) interior = false;
        }
        if (!interior) {
            out.v[i] = 0.0;
            continue;
        }
        double s = 0.0;
        for (int l = 0; l < g.d; ++l) {
            auto cp = c;
            cp[l] = (c[l] > 0) ? c[l] - 1 : nps - 1;
            s += (F.comp[l][i] - F.comp[l][g.index(cp)]) * inv_h;
        }
        out.v[i] = s;
    }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace homlab::ref
