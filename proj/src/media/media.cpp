#include "media.hpp"

#include <cmath>
#include <sstream>

namespace homlab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kAuditSlack = 1e-11; // rounding slack on the exact eigen checks

std::vector<std::array<double, 3>> xi_sphere(int d, int count) {
    std::vector<std::array<double, 3>> dirs;
    if (d == 2) {
        for (int i = 0; i < count; ++i) {
            const double t = 2.0 * kPi * i / count;
            dirs.push_back({std::cos(t), std::sin(t), 0.0});
        }
    } else {
        // Fibonacci sphere
        const double golden = kPi * (3.0 - std::sqrt(5.0));
        for (int i = 0; i < count; ++i) {
            const double z = 1.0 - 2.0 * (i + 0.5) / count;
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double t = golden * i;
            dirs.push_back({r * std::cos(t), r * std::sin(t), z});
        }
    }
    return dirs;
}

} // namespace

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

EllipticityReport audit_matrix(const Eigen::MatrixXd& A, int directions) {
    const int d = static_cast<int>(A.rows());
    EllipticityReport rep;
    // isotropic fast path: both (i01) branches and every sphere direction
    // reduce to the same scalar inequalities v > 0 and v <= 1
    bool iso = true;
    for (int i = 0; i < d && iso; ++i)
        for (int j = 0; j < d && iso; ++j) {
            if (i != j && A(i, j) != 0.0) iso = false;
            if (i == j && A(i, i) != A(0, 0)) iso = false;
        }
    if (iso) {
        const double v = A(0, 0);
        rep.lambda = v;
        rep.worst_second_branch = v - v * v;
        rep.pass = v > 0.0 && rep.worst_second_branch >= -kAuditSlack;
        if (!rep.pass) rep.worst_xi = {1.0, 0.0, 0.0};
        return rep;
    }
    const Eigen::MatrixXd S = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es1(S);
    rep.lambda = es1.eigenvalues().minCoeff();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(S - A.transpose() * A);
    rep.worst_second_branch = es2.eigenvalues().minCoeff();
    rep.pass = rep.lambda > 0.0 && rep.worst_second_branch >= -kAuditSlack;
    if (!rep.pass) {
        Eigen::VectorXd xi = (rep.lambda <= 0.0) ? es1.eigenvectors().col(0) : es2.eigenvectors().col(0);
        for (int l = 0; l < d; ++l) rep.worst_xi[l] = xi[l];
    }
    // direction-sample audit on top of the exact one
    for (const auto& dir : xi_sphere(d, directions)) {
        Eigen::VectorXd xi(d);
        for (int l = 0; l < d; ++l) xi[l] = dir[l];
        const double quad = xi.dot(A * xi);
        if (quad < rep.lambda - kAuditSlack || quad < (A * xi).squaredNorm() - kAuditSlack) {
            rep.pass = false;
            for (int l = 0; l < d; ++l) rep.worst_xi[l] = xi[l];
        }
    }
    return rep;
}

Eigen::MatrixXd CoefficientField::matrix_at_node(std::size_t idx) const {
    const int d = grid.d;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
    auto c = grid.coords(idx);
    for (int l = 0; l < d; ++l) {
        auto cp = c;
        cp[l] = (c[l] > 0) ? c[l] - 1 : (grid.is_torus() ? grid.nps() - 1 : 0);
        A(l, l) = 0.5 * (diag[static_cast<std::size_t>(l)][idx] + diag[static_cast<std::size_t>(l)][grid.index(cp)]);
    }
    if (has_offdiag) {
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                if (i != j) A(i, j) = offd.at(i, j)[idx];
    }
    return A;
}

CoefficientField sample_medium(const Grid& g, const MatrixFn& fn, const std::string& kind, bool symmetric,
                               bool periodic, std::uint64_t seed) {
    CoefficientField m;
    m.grid = g;
    m.symmetric = symmetric;
    m.periodic = periodic;
    m.seed = seed;
    m.kind = kind;
    m.generator = fn;
    m.diag.assign(static_cast<std::size_t>(g.d), std::vector<double>(g.node_count(), 0.0));
    m.offd = MatrixField(g);

    const std::size_t N = g.node_count();
    double lambda = 1e300;
    double worst2 = 1e300;
    bool pass = true;
    std::array<double, 3> worst_pt{}, worst_xi{};
    bool any_off = false;

    for (std::size_t i = 0; i < N; ++i) {
        const auto c = g.coords(i);
        const auto xn = g.position(c);
        const Eigen::MatrixXd An = fn(xn);
        for (int r = 0; r < g.d; ++r)
            for (int cl = 0; cl < g.d; ++cl)
                if (r != cl) {
                    m.offd.at(r, cl)[i] = An(r, cl);
                    if (An(r, cl) != 0.0) any_off = true;
                }
        auto rep = audit_matrix(An);
        if (!rep.pass && pass) {
            pass = false;
            worst_pt = xn;
            worst_xi = rep.worst_xi;
        }
        lambda = std::min(lambda, rep.lambda);
        worst2 = std::min(worst2, rep.worst_second_branch);
        for (int l = 0; l < g.d; ++l) {
            auto xe = xn;
            xe[l] += 0.5 * g.h;
            const Eigen::MatrixXd Ae = fn(xe);
            m.diag[static_cast<std::size_t>(l)][i] = Ae(l, l);
            auto repe = audit_matrix(Ae);
            if (!repe.pass && pass) {
                pass = false;
                worst_pt = xe;
                worst_xi = repe.worst_xi;
            }
            lambda = std::min(lambda, repe.lambda);
            worst2 = std::min(worst2, repe.worst_second_branch);
        }
    }
    m.has_offdiag = any_off;
    m.lambda = lambda;
    m.audit_report = {lambda, worst2, pass, worst_pt, worst_xi};
    if (!pass) {
        std::ostringstream os;
        os << "medium '" << kind << "' violates (i01): lambda_min=" << lambda << ", second-branch margin=" << worst2
           << " at x=(" << worst_pt[0] << "," << worst_pt[1] << "," << worst_pt[2] << "), worst xi=(" << worst_xi[0]
           << "," << worst_xi[1] << "," << worst_xi[2] << ")";
        throw MediaError(os.str());
    }
    return m;
}

CoefficientField constant_medium(const Grid& g, const Eigen::MatrixXd& A) {
    if (A.rows() != g.d || A.cols() != g.d) throw MediaError("constant_medium: matrix dimension mismatch");
    const Eigen::MatrixXd Acopy = A;
    const bool sym = (A - A.transpose()).norm() < 1e-14;
    return sample_medium(
        g, [Acopy](const std::array<double, 3>&) { return Acopy; }, "constant", sym, true);
}

CoefficientField periodic_checkerboard(const Grid& g, double contrast, int cells_per_period) {
    if (contrast < 1.0) throw MediaError("periodic_checkerboard: contrast must be >= 1");
    if (cells_per_period <= 0) throw MediaError("periodic_checkerboard: cells_per_period must be positive");
    const double period = g.is_torus() ? g.extent : 2.0 * g.extent;
    const double cell = period / cells_per_period;
    // cell boundaries must align with the lattice
    const double ratio = cell / g.h;
    if (std::abs(ratio - std::round(ratio)) > 1e-9) throw MediaError("periodic_checkerboard: cell size does not divide grid");
    const double lo = 1.0 / contrast;
    const int d = g.d;
    auto fn = [cell, lo, d](const std::array<double, 3>& x) {
        long s = 0;
        for (int l = 0; l < d; ++l) s += static_cast<long>(std::floor(x[l] / cell + 1e-12));
        const double v = ((s % 2 + 2) % 2 == 0) ? lo : 1.0;
        return Eigen::MatrixXd(v * Eigen::MatrixXd::Identity(d, d));
    };
    return sample_medium(g, fn, "periodic_checkerboard", true, true);
}

namespace {

CoefficientField checkerboard_impl(const Grid& g, std::uint64_t seed_in, std::uint64_t seed_out, double rho,
                                   double lo, double hi, double cell, const std::string& kind) {
    if (!(0.0 < lo && lo <= hi && hi <= 1.0)) throw MediaError(kind + ": need 0 < low <= high <= 1");
    const double ratio = cell / g.h;
    if (std::abs(ratio - std::round(ratio)) > 1e-9) throw MediaError(kind + ": cell size does not divide grid");
    const double period = g.is_torus() ? g.extent : 2.0 * g.extent;
    const long cells_per_side = static_cast<long>(std::llround(period / cell));
    const int d = g.d;
    const double origin = g.origin0;
    auto fn = [=](const std::array<double, 3>& x) {
        std::uint64_t key = 0xABCD1234u;
        double c2 = 0.0;
        for (int l = 0; l < d; ++l) {
            long idx = static_cast<long>(std::floor((x[l] - origin) / cell + 1e-12));
            idx = ((idx % cells_per_side) + cells_per_side) % cells_per_side; // periodic cells
            key = key * 1000003u + static_cast<std::uint64_t>(idx);
            const double cc = origin + (idx + 0.5) * cell;
            const double dx = cc - (origin + 0.5 * period);
            c2 += dx * dx;
        }
        const bool inside = std::sqrt(c2) < rho;
        const std::uint64_t seed = inside ? seed_in : seed_out;
        const std::uint64_t bit = splitmix64(splitmix64(seed) ^ key) & 1u;
        const double v = bit ? hi : lo;
        return Eigen::MatrixXd(v * Eigen::MatrixXd::Identity(d, d));
    };
    auto m = sample_medium(g, fn, kind, true, g.is_torus(), seed_in);
    m.rng_algorithm = "splitmix64";
    return m;
}

} // namespace

CoefficientField random_checkerboard(const Grid& g, std::uint64_t seed, double value_low, double value_high,
                                     double cell_size) {
    return checkerboard_impl(g, seed, seed, 1e300, value_low, value_high, cell_size, "random_checkerboard");
}

CoefficientField random_checkerboard_masked(const Grid& g, std::uint64_t seed_inside, std::uint64_t seed_outside,
                                            double rho, double value_low, double value_high, double cell_size) {
    return checkerboard_impl(g, seed_inside, seed_outside, rho, value_low, value_high, cell_size,
                             "random_checkerboard_masked");
}

CoefficientField smooth_isotropic(const Grid& g, double base, double amplitude, double period) {
    if (base + std::abs(amplitude) > 1.0 + 1e-12) throw MediaError("smooth_isotropic: sup a must be <= 1");
    const int d = g.d;
    auto fn = [=](const std::array<double, 3>& x) {
        double s;
        if (d == 2) {
            s = std::sin(2 * kPi * x[0] / period) * std::cos(2 * kPi * x[1] / period);
        } else {
            s = (std::sin(2 * kPi * x[0] / period) * std::cos(2 * kPi * x[1] / period) +
                 std::sin(2 * kPi * x[1] / period) * std::cos(2 * kPi * x[2] / period) +
                 std::sin(2 * kPi * x[2] / period) * std::cos(2 * kPi * x[0] / period)) /
                1.8;
        }
        const double v = base + amplitude * s;
        return Eigen::MatrixXd(v * Eigen::MatrixXd::Identity(d, d));
    };
    return sample_medium(g, fn, "smooth_isotropic", true, true);
}

CoefficientField smooth_anisotropic(const Grid& g, double base, double amplitude, double period) {
    if (base + 1.5 * std::abs(amplitude) > 1.0 + 1e-12) throw MediaError("smooth_anisotropic: sup a must be <= 1");
    const int d = g.d;
    auto fn = [=](const std::array<double, 3>& x) {
        const double u = 2 * kPi * x[0] / period;
        const double v = 2 * kPi * x[1] / period;
        const double w = (d == 3) ? 2 * kPi * x[2] / period : 0.0;
        Eigen::MatrixXd A = base * Eigen::MatrixXd::Identity(d, d);
        A(0, 0) += amplitude * std::sin(u) * std::cos(v);
        A(1, 1) += amplitude * std::cos(u + 0.4) * std::sin(v + 0.9);
        const double c01 = 0.5 * amplitude * std::sin(u + v + 0.3);
        A(0, 1) += c01;
        A(1, 0) += c01;
        if (d == 3) {
            A(2, 2) += amplitude * std::sin(w + 0.2) * std::cos(u);
            const double c12 = 0.4 * amplitude * std::cos(v + w);
            A(1, 2) += c12;
            A(2, 1) += c12;
        }
        return A;
    };
    return sample_medium(g, fn, "smooth_anisotropic", true, true);
}

CoefficientField skew_perturbation(const CoefficientField& base, double amplitude, const std::string& pattern) {
    const Grid g = base.grid;
    const int d = g.d;
    const double period = g.is_torus() ? g.extent : 2.0 * g.extent;
    MatrixFn base_fn = base.generator;
    if (!base_fn) throw MediaError("skew_perturbation: base medium carries no generator");
    auto bfun = [=](const std::array<double, 3>& x) {
        const double u = 2 * kPi * x[0] / period;
        const double v = 2 * kPi * x[1] / period;
        if (pattern == "plane") return std::sin(u);
        // default: smooth, periodic, not centrally symmetric (b(-x) != +-b(x))
        double b = std::sin(u) * (0.75 + 0.25 * std::sin(v)) + 0.35 * std::cos(2.0 * u) * std::cos(v);
        if (d == 3) b += 0.25 * std::sin(2 * kPi * x[2] / period + 0.7);
        return b;
    };
    auto fn = [=](const std::array<double, 3>& x) {
        Eigen::MatrixXd A = base_fn(x);
        const double b = amplitude * bfun(x);
        A(0, 1) += b;
        A(1, 0) -= b;
        return A;
    };
    auto m = sample_medium(g, fn, base.kind + "+skew(" + pattern + ")", false, base.periodic, base.seed);
    return m;
}

CoefficientField transpose_medium(const CoefficientField& a) {
    CoefficientField t = a;
    t.kind = a.kind + "^T";
    if (a.has_offdiag) {
        for (int i = 0; i < a.grid.d; ++i)
            for (int j = i + 1; j < a.grid.d; ++j) std::swap(t.offd.at(i, j), t.offd.at(j, i));
    }
    MatrixFn base_fn = a.generator;
    if (base_fn)
        t.generator = [base_fn](const std::array<double, 3>& x) { return Eigen::MatrixXd(base_fn(x).transpose()); };
    return t;
}

} // namespace homlab
