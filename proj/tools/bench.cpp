// Timing comparison of the OpenMP kernels against the serial references.

#include "core/kernels.hpp"
#include "media/media.hpp"
#include "solver/solver.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>

using namespace homlab;

namespace {

double now() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

template <typename F>
double time_best_of(int reps, F&& f) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now();
        f();
        best = std::min(best, now() - t0);
    }
    return best;
}

void bench_grid(int d, int n) {
    Grid g = Grid::torus(d, n, 1.0);
    ScalarField f(g);
    for (std::size_t i = 0; i < f.v.size(); ++i) f.v[i] = std::sin(0.001 * static_cast<double>(i));
    VectorField F(g);
    ScalarField r(g);
    CoefficientField med = smooth_isotropic(g, 0.6, 0.3, 1.0);
    DivFormOperator A(med);
    std::vector<double> out(f.v.size());

    std::printf("grid d=%d n=%d (%zu nodes), %d threads\n", d, n, g.node_count(), omp_get_max_threads());
    const double tg_par = time_best_of(5, [&] { kernels::gradient(f, F); });
    const double tg_ser = time_best_of(5, [&] { ref::gradient(f, F); });
    std::printf("  gradient       omp %.3f ms   serial %.3f ms   speedup %.2fx\n", 1e3 * tg_par, 1e3 * tg_ser,
                tg_ser / tg_par);
    const double td_par = time_best_of(5, [&] { kernels::divergence(F, r); });
    const double td_ser = time_best_of(5, [&] { ref::divergence(F, r); });
    std::printf("  divergence     omp %.3f ms   serial %.3f ms   speedup %.2fx\n", 1e3 * td_par, 1e3 * td_ser,
                td_ser / td_par);
    const double ta_par = time_best_of(5, [&] { A.apply(f.v, out); });
    const double ta_ser = time_best_of(5, [&] { ref_apply_op(med, f.v, out); });
    std::printf("  operator apply omp %.3f ms   serial %.3f ms   speedup %.2fx\n", 1e3 * ta_par, 1e3 * ta_ser,
                ta_ser / ta_par);
    const double tdot_par = time_best_of(5, [&] { (void)kernels::dot(f.v, out); });
    const double tdot_ser = time_best_of(5, [&] { (void)ref::dot(f.v, out); });
    std::printf("  dot            omp %.3f ms   serial %.3f ms   speedup %.2fx\n", 1e3 * tdot_par, 1e3 * tdot_ser,
                tdot_ser / tdot_par);
}

} // namespace

int main(int argc, char** argv) {
    int n2 = 512, n3 = 64;
    if (argc > 1) n2 = std::atoi(argv[1]);
    if (argc > 2) n3 = std::atoi(argv[2]);
    bench_grid(2, n2);
    bench_grid(3, n3);
    return 0;
}
