#include "spectral.hpp"
#include "kernels.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <stdexcept>

namespace homlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
};

// FFTW planning is not thread-safe; plans for a given shape are cached and
// reused (execution via fftw_execute_dft_* is safe on distinct buffers).
std::mutex g_plan_mutex;
std::map<std::pair<int, int>, PlanPair>& plan_cache() {
    static std::map<std::pair<int, int>, PlanPair> cache;
    return cache;
}

struct Workspace {
    int d, n;
    std::size_t real_n, cplx_n;
    double* real_buf;
    fftw_complex* cplx_buf;
    PlanPair plans;

    Workspace(int d_, int n_) : d(d_), n(n_) {
        real_n = 1;
        for (int l = 0; l < d; ++l) real_n *= static_cast<std::size_t>(n);
        cplx_n = real_n / static_cast<std::size_t>(n) * (static_cast<std::size_t>(n) / 2 + 1);
        real_buf = fftw_alloc_real(real_n);
        cplx_buf = fftw_alloc_complex(cplx_n);
        std::lock_guard<std::mutex> lock(g_plan_mutex);
        auto& entry = plan_cache()[{d, n}];
        if (!entry.fwd) {
            if (d == 2) {
                entry.fwd = fftw_plan_dft_r2c_2d(n, n, real_buf, cplx_buf, FFTW_ESTIMATE);
                entry.bwd = fftw_plan_dft_c2r_2d(n, n, cplx_buf, real_buf, FFTW_ESTIMATE);
            } else {
                entry.fwd = fftw_plan_dft_r2c_3d(n, n, n, real_buf, cplx_buf, FFTW_ESTIMATE);
                entry.bwd = fftw_plan_dft_c2r_3d(n, n, n, cplx_buf, real_buf, FFTW_ESTIMATE);
            }
        }
        plans = entry;
    }

    ~Workspace() {
        fftw_free(real_buf);
        fftw_free(cplx_buf);
    }

    void forward(const std::vector<double>& in, std::vector<std::complex<double>>& out) {
        for (std::size_t i = 0; i < real_n; ++i) real_buf[i] = in[i];
        fftw_execute_dft_r2c(plans.fwd, real_buf, cplx_buf);
        out.resize(cplx_n);
        for (std::size_t i = 0; i < cplx_n; ++i) out[i] = {cplx_buf[i][0], cplx_buf[i][1]};
    }

    void backward(const std::vector<std::complex<double>>& in, std::vector<double>& out) {
        for (std::size_t i = 0; i < cplx_n; ++i) {
            cplx_buf[i][0] = in[i].real();
            cplx_buf[i][1] = in[i].imag();
        }
        fftw_execute_dft_c2r(plans.bwd, cplx_buf, real_buf);
        out.resize(real_n);
        const double scale = 1.0 / static_cast<double>(real_n);
        for (std::size_t i = 0; i < real_n; ++i) out[i] = real_buf[i] * scale;
    }

    // integer frequencies of the half-complex entry at linear index `idx`
    std::array<int, 3> freq(std::size_t idx) const {
        std::array<int, 3> k{0, 0, 0};
        const std::size_t last = static_cast<std::size_t>(n) / 2 + 1;
        if (d == 2) {
            k[1] = static_cast<int>(idx % last);
            k[0] = static_cast<int>(idx / last);
        } else {
            k[2] = static_cast<int>(idx % last);
            const std::size_t rest = idx / last;
            k[1] = static_cast<int>(rest % static_cast<std::size_t>(n));
            k[0] = static_cast<int>(rest / static_cast<std::size_t>(n));
        }
        return k;
    }
};

} // namespace

double laplace_symbol(const Grid& g, const std::array<int, 3>& k) {
    double s = 0.0;
    for (int l = 0; l < g.d; ++l) {
        const double sl = std::sin(kPi * static_cast<double>(k[l]) / static_cast<double>(g.n));
        s += sl * sl;
    }
    return 4.0 / (g.h * g.h) * s;
}

ScalarField solve_poisson_fft(const ScalarField& f, double mean_tol) {
    const Grid& g = f.grid;
    if (!g.is_torus()) throw std::invalid_argument("solve_poisson_fft: torus grid required");
    const double nrm = kernels::nrm2(f.v);
    if (nrm > 0.0) {
        const double m = kernels::mean(f.v);
        if (std::abs(m) * std::sqrt(static_cast<double>(f.v.size())) > mean_tol * nrm)
            throw std::invalid_argument("solve_poisson_fft: source is not mean-zero");
    }
    Workspace ws(g.d, g.n);
    std::vector<std::complex<double>> fh;
    ws.forward(f.v, fh);
    for (std::size_t i = 0; i < fh.size(); ++i) {
        const auto k = ws.freq(i);
        const double lam = laplace_symbol(g, k);
        fh[i] = (lam > 0.0) ? fh[i] / lam : std::complex<double>(0.0, 0.0);
    }
    ScalarField w(g);
    ws.backward(fh, w.v);
    return w;
}

SkewField curl_potential(const VectorField& q) {
    const Grid& g = q.grid;
    if (!g.is_torus()) throw std::invalid_argument("curl_potential: torus grid required");
    Workspace ws(g.d, g.n);
    std::vector<std::vector<std::complex<double>>> qh(static_cast<std::size_t>(g.d));
    for (int l = 0; l < g.d; ++l) ws.forward(q.comp[l], qh[static_cast<std::size_t>(l)]);

    SkewField s(g);
    std::vector<std::complex<double>> sh(qh[0].size());
    for (std::size_t p = 0; p < s.pairs.size(); ++p) {
        const int j = s.pairs[p].first;
        const int k = s.pairs[p].second;
        for (std::size_t i = 0; i < sh.size(); ++i) {
            const auto kv = ws.freq(i);
            const double lam = laplace_symbol(g, kv);
            if (lam <= 0.0) {
                sh[i] = 0.0;
                continue;
            }
            const double thj = 2.0 * kPi * kv[j] / g.n;
            const double thk = 2.0 * kPi * kv[k] / g.n;
            const std::complex<double> dj(std::cos(thj) - 1.0, std::sin(thj));
            const std::complex<double> dk(std::cos(thk) - 1.0, std::sin(thk));
            sh[i] = (dj * qh[static_cast<std::size_t>(k)][i] - dk * qh[static_cast<std::size_t>(j)][i]) / (g.h * lam);
        }
        ws.backward(sh, s.comp[p]);
    }
    return s;
}

VectorField skew_divergence(const SkewField& s) {
    const Grid& g = s.grid;
    VectorField out(g);
    const int nps = g.nps();
    const std::size_t N = g.node_count();
    for (int l = 0; l < g.d; ++l) {
        for (int k = 0; k < g.d; ++k) {
            if (k == l) continue;
            const int p = s.pair_index(l, k);
            const double sgn = s.sign(l, k);
            const std::size_t sk = g.stride(k);
            const std::size_t span = sk * static_cast<std::size_t>(nps);
            const double* arr = s.comp[static_cast<std::size_t>(p)].data();
            double* o = out.comp[l].data();
            const double inv_h = 1.0 / g.h;
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(N); ++ii) {
                const std::size_t i = static_cast<std::size_t>(ii);
                const std::size_t ik = (i / sk) % static_cast<std::size_t>(nps);
                const std::size_t prev = (ik > 0) ? i - sk : i - sk + span;
                o[i] += sgn * (arr[i] - arr[prev]) * inv_h;
            }
        }
    }
    return out;
}

} // namespace homlab
