#include "euclid.hpp"

#include <cmath>

namespace homlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

// -sum_pq S_pq d_p d_q applied to a polynomial
Poly elliptic_operator(const Eigen::MatrixXd& S, const Poly& p) {
    Poly out = Poly::zero(p.d);
    for (int a = 0; a < p.d; ++a)
        for (int b = 0; b < p.d; ++b)
            if (S(a, b) != 0.0) out = out + p.derivative(a).derivative(b).scaled(-S(a, b));
    return out;
}

// Gauss-Legendre nodes/weights on (-1, 1) by Newton iteration.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
        double t = std::cos(kPi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2 * j - 1) * t * p1 - (j - 1) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            const double dp = n * (t * p1 - p0) / (t * t - 1.0);
            const double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        double p0 = 1.0, p1 = t;
        for (int j = 2; j <= n; ++j) {
            const double p2 = ((2 * j - 1) * t * p1 - (j - 1) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        const double dp = n * (t * p1 - p0) / (t * t - 1.0);
        x[static_cast<std::size_t>(i)] = t;
        w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
}

} // namespace

std::vector<Poly> harmonic_polynomials(const Eigen::MatrixXd& abar, int m, int d) {
    const Eigen::MatrixXd S = 0.5 * (abar + abar.transpose());
    const auto monomials = multi_indices(d, m);
    if (m <= 1) {
        std::vector<Poly> basis;
        for (const auto& e : monomials) basis.push_back(Poly::monomial(d, e, 1.0));
        return basis;
    }
    const auto rows = multi_indices(d, m - 2);
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(static_cast<int>(rows.size()), static_cast<int>(monomials.size()));
    for (std::size_t c = 0; c < monomials.size(); ++c) {
        const Poly img = elliptic_operator(S, Poly::monomial(d, monomials[c], 1.0));
        for (std::size_t r = 0; r < rows.size(); ++r) L(static_cast<int>(r), static_cast<int>(c)) = img.coeff(rows[r]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(L);
    lu.setThreshold(1e-12);
    const Eigen::MatrixXd ker = lu.kernel();
    std::vector<Poly> basis;
    for (int c = 0; c < ker.cols(); ++c) {
        Poly p = Poly::zero(d);
        double scale = ker.col(c).cwiseAbs().maxCoeff();
        for (std::size_t r = 0; r < monomials.size(); ++r) {
            const double v = ker(static_cast<int>(r), c) / scale;
            if (std::abs(v) > 1e-13) p.terms[monomials[r]] = v;
        }
        basis.push_back(p);
    }
    return basis;
}

EuclidToolkit::EuclidToolkit(const Eigen::Matrix3d& abar) : abar_(abar) {
    S_ = 0.5 * (abar + abar.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(S_);
    if (es.eigenvalues().minCoeff() <= 0.0) throw std::invalid_argument("EuclidToolkit: abar not elliptic");
    Minv_ = S_.inverse();
    detS_ = S_.determinant();
    const double c = 1.0 / (4.0 * kPi * std::sqrt(detS_));
    G_.M = Minv_;
    G_.terms.push_back({Poly::constant(3, c), 1});
    K_.M = Minv_;
    K_.terms.push_back({Poly::constant(3, -0.5 * c), -1});
}

const MultipoleFn& EuclidToolkit::dG(const MIdx& alpha) const {
    auto it = dG_cache_.find(alpha);
    if (it != dG_cache_.end()) return it->second;
    MultipoleFn f = G_.derivative_multi(alpha);
    return dG_cache_.emplace(alpha, std::move(f)).first->second;
}

const MultipoleFn& EuclidToolkit::dK(const MIdx& alpha) const {
    auto it = dK_cache_.find(alpha);
    if (it != dK_cache_.end()) return it->second;
    MultipoleFn f = K_.derivative_multi(alpha);
    return dK_cache_.emplace(alpha, std::move(f)).first->second;
}

MultipoleFn EuclidToolkit::combo(const GCombo& c) const {
    MultipoleFn f;
    f.M = Minv_;
    for (const auto& [alpha, v] : c) {
        if (v == 0.0) continue;
        f = f + dG(alpha).scaled(v);
    }
    return f;
}

MultipoleFn EuclidToolkit::apply_operator(const MultipoleFn& f) const {
    MultipoleFn out;
    out.M = f.M;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            if (S_(a, b) != 0.0) out = out + f.derivative(a).derivative(b).scaled(-S_(a, b));
    return out.canonicalized();
}

std::vector<Poly> EuclidToolkit::W_basis(int m) const {
    auto it = W_cache_.find(m);
    if (it != W_cache_.end()) return it->second;
    auto basis = harmonic_polynomials(abar_, m, 3);
    W_cache_[m] = basis;
    return basis;
}

double pairing_h(const Poly& u, const GCombo& v) {
    double s = 0.0;
    for (const auto& [alpha, c] : v) {
        if (c == 0.0) continue;
        const double sign = (midx_degree(alpha) % 2 == 0) ? 1.0 : -1.0;
        s += c * sign * u.deriv_at_zero(alpha);
    }
    return s;
}

double surface_flux(const std::function<std::array<double, 3>(const std::array<double, 3>&)>& V, double R,
                    const SphereQuadrature& quad) {
    std::vector<double> mu, w;
    gauss_legendre(quad.polar, mu, w);
    double total = 0.0;
    for (int i = 0; i < quad.polar; ++i) {
        const double z = mu[static_cast<std::size_t>(i)];
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        double ring = 0.0;
        for (int j = 0; j < quad.azimuth; ++j) {
            const double phi = 2.0 * kPi * j / quad.azimuth;
            const std::array<double, 3> n{rho * std::cos(phi), rho * std::sin(phi), z};
            const std::array<double, 3> x{R * n[0], R * n[1], R * n[2]};
            const auto v = V(x);
            ring += n[0] * v[0] + n[1] * v[1] + n[2] * v[2];
        }
        total += w[static_cast<std::size_t>(i)] * ring * (2.0 * kPi / quad.azimuth);
    }
    return total * R * R;
}

double surface_pairing(const Poly& u, const MultipoleFn& v, const Eigen::Matrix3d& S, double R,
                       const SphereQuadrature& quad) {
    auto V = [&](const std::array<double, 3>& x) {
        const double uv = u.eval(x);
        const auto gu = u.grad_eval(x);
        const double vv = v.eval(x);
        const auto gv = v.grad(x);
        std::array<double, 3> out{0.0, 0.0, 0.0};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) out[i] += S(i, j) * (vv * gu[j] - uv * gv[j]);
        return out;
    };
    return surface_flux(V, R, quad);
}

Poly build_utilde(const Poly& uprime, const Tensor3& Csym, const EuclidToolkit& tk, const SphereQuadrature& quad) {
    int m = 0;
    if (!uprime.homogeneous(&m)) throw std::invalid_argument("build_utilde: u' must be homogeneous");
    if (m < 3) throw std::invalid_argument("build_utilde: requires degree m >= 3");
    if (Csym.norm() == 0.0) return Poly::zero(3);

    // right-hand side div(d_ij u' C_ij) = C_ijk d_ijk u'
    Poly rhs = Poly::zero(3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int kk = 0; kk < 3; ++kk) {
                const double c = Csym(i, j, kk);
                if (c == 0.0) continue;
                rhs = rhs + uprime.derivative(i).derivative(j).derivative(kk).scaled(c);
            }

    // particular solution on homogeneous degree m-1 coefficients
    const auto unknowns = multi_indices(3, m - 1);
    const auto rows = multi_indices(3, m - 3);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<int>(rows.size()), static_cast<int>(unknowns.size()));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<int>(rows.size()));
    for (std::size_t c = 0; c < unknowns.size(); ++c) {
        const Poly img = elliptic_operator(tk.S(), Poly::monomial(3, unknowns[c], 1.0));
        for (std::size_t r = 0; r < rows.size(); ++r) A(static_cast<int>(r), static_cast<int>(c)) = img.coeff(rows[r]);
    }
    for (std::size_t r = 0; r < rows.size(); ++r) b(static_cast<int>(r)) = rhs.coeff(rows[r]);
    const Eigen::VectorXd sol = A.colPivHouseholderQr().solve(b);
    if ((A * sol - b).norm() > 1e-9 * (1.0 + b.norm()))
        throw std::runtime_error("build_utilde: inconsistent linear system for (R7)");
    Poly ut = Poly::zero(3);
    for (std::size_t c = 0; c < unknowns.size(); ++c)
        if (std::abs(sol(static_cast<int>(c))) > 1e-14) ut.terms[unknowns[c]] = sol(static_cast<int>(c));

    // flux vector T_k = C_ijk d_ij u'
    std::array<Poly, 3> T{Poly::zero(3), Poly::zero(3), Poly::zero(3)};
    for (int kk = 0; kk < 3; ++kk)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double c = Csym(i, j, kk);
                if (c != 0.0) T[static_cast<std::size_t>(kk)] = T[static_cast<std::size_t>(kk)] + uprime.derivative(i).derivative(j).scaled(c);
            }

    auto flux_functional = [&](const Poly& cand, const MultipoleFn& vp) {
        auto V = [&](const std::array<double, 3>& x) {
            const double vv = vp.eval(x);
            const auto gv = vp.grad(x);
            const double uv = cand.eval(x);
            const auto gu = cand.grad_eval(x);
            std::array<double, 3> out{0.0, 0.0, 0.0};
            for (int a = 0; a < 3; ++a) {
                double flux_u = 0.0, flux_v = 0.0;
                for (int bb = 0; bb < 3; ++bb) {
                    flux_u += tk.S()(a, bb) * gu[bb];
                    flux_v += tk.S()(a, bb) * gv[bb];
                }
                out[a] = vv * (flux_u + T[static_cast<std::size_t>(a)].eval(x)) - uv * flux_v;
            }
            return out;
        };
        return surface_flux(V, 1.0, quad);
    };

    // fix the W_{m-1} ambiguity through the vanishing condition against Z_{m-1}
    const auto Wb = tk.W_basis(m - 1);
    const auto alphas = multi_indices(3, m - 1);
    Eigen::MatrixXd Msys = Eigen::MatrixXd::Zero(static_cast<int>(alphas.size()), static_cast<int>(Wb.size()));
    Eigen::VectorXd rhs2 = Eigen::VectorXd::Zero(static_cast<int>(alphas.size()));
    for (std::size_t r = 0; r < alphas.size(); ++r) {
        GCombo single;
        single[alphas[r]] = 1.0;
        for (std::size_t c = 0; c < Wb.size(); ++c) Msys(static_cast<int>(r), static_cast<int>(c)) = pairing_h(Wb[c], single);
        rhs2(static_cast<int>(r)) = -flux_functional(ut, tk.dG(alphas[r]));
    }
    const Eigen::VectorXd wcoef = Msys.colPivHouseholderQr().solve(rhs2);
    if ((Msys * wcoef - rhs2).norm() > 1e-7 * (1.0 + rhs2.norm()))
        throw std::runtime_error("build_utilde: inconsistent (R11) normalization system");
    for (std::size_t c = 0; c < Wb.size(); ++c) ut = ut + Wb[c].scaled(wcoef(static_cast<int>(c)));
    ut.prune();
    return ut;
}

MultipoleFn build_vtilde(const GCombo& vprime, const Tensor3& Cstar_sym, const EuclidToolkit& tk,
                         const SphereQuadrature& quad) {
    MultipoleFn zero;
    zero.M = tk.G().M;
    if (Cstar_sym.norm() == 0.0) return zero;
    int k = -1;
    for (const auto& [alpha, c] : vprime) {
        if (c == 0.0) continue;
        if (k < 0) k = midx_degree(alpha);
        else if (k != midx_degree(alpha)) throw std::invalid_argument("build_vtilde: v' must be homogeneous in |alpha|");
    }
    if (k < 1) throw std::invalid_argument("build_vtilde: requires |alpha| = k >= 1");

    // candidate from K-derivatives: C*_ijl d_l d_ij (d^alpha K)
    MultipoleFn v0;
    v0.M = tk.G().M;
    for (const auto& [alpha, c] : vprime) {
        if (c == 0.0) continue;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int l = 0; l < 3; ++l) {
                    const double cc = Cstar_sym(i, j, l);
                    if (cc == 0.0) continue;
                    MIdx beta = alpha;
                    beta[i] += 1;
                    beta[j] += 1;
                    beta[l] += 1;
                    v0 = v0 + tk.dK(beta).scaled(c * cc);
                }
    }

    const MultipoleFn vp_fn = tk.combo(vprime);
    // W_l = C*_ijl d_ij v'
    std::array<MultipoleFn, 3> W;
    for (int l = 0; l < 3; ++l) {
        W[static_cast<std::size_t>(l)].M = tk.G().M;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double cc = Cstar_sym(i, j, l);
                if (cc == 0.0) continue;
                MIdx ij{0, 0, 0};
                ij[i] += 1;
                ij[j] += 1;
                W[static_cast<std::size_t>(l)] = W[static_cast<std::size_t>(l)] + vp_fn.derivative_multi(ij).scaled(cc);
            }
    }

    auto lhs_flux = [&](const MultipoleFn& cand, const Poly& u) {
        auto V = [&](const std::array<double, 3>& x) {
            const double vv = cand.eval(x);
            const auto gv = cand.grad(x);
            const double uv = u.eval(x);
            const auto gu = u.grad_eval(x);
            std::array<double, 3> out{0.0, 0.0, 0.0};
            for (int a = 0; a < 3; ++a) {
                double flux_u = 0.0, flux_v = 0.0;
                for (int bb = 0; bb < 3; ++bb) {
                    flux_u += tk.S()(a, bb) * gu[bb];
                    flux_v += tk.S()(a, bb) * gv[bb];
                }
                out[a] = vv * flux_u - uv * (flux_v + W[static_cast<std::size_t>(a)].eval(x));
            }
            return out;
        };
        return surface_flux(V, 1.0, quad);
    };
    // extra term with the unstarred tensor C^sym = -C^{*,sym}
    auto extra_flux = [&](const Poly& u) {
        auto V = [&](const std::array<double, 3>& x) {
            const auto gv = vp_fn.grad(x);
            const auto gu = u.grad_eval(x);
            std::array<double, 3> out{0.0, 0.0, 0.0};
            for (int kk = 0; kk < 3; ++kk)
                for (int i = 0; i < 3; ++i)
                    for (int j = 0; j < 3; ++j) out[kk] += gv[i] * gu[j] * (-Cstar_sym(i, j, kk));
            return out;
        };
        return surface_flux(V, 1.0, quad);
    };

    const auto Wb = tk.W_basis(k + 1);
    const auto betas = multi_indices(3, k + 1);
    Eigen::MatrixXd Msys = Eigen::MatrixXd::Zero(static_cast<int>(Wb.size()), static_cast<int>(betas.size()));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<int>(Wb.size()));
    for (std::size_t r = 0; r < Wb.size(); ++r) {
        for (std::size_t c = 0; c < betas.size(); ++c) {
            GCombo single;
            single[betas[c]] = 1.0;
            Msys(static_cast<int>(r), static_cast<int>(c)) = pairing_h(Wb[r], single);
        }
        rhs(static_cast<int>(r)) = extra_flux(Wb[r]) - lhs_flux(v0, Wb[r]);
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(Msys);
    if (cod.rank() < static_cast<int>(Wb.size()))
        throw std::runtime_error("build_vtilde: singular adjustment system (basis bug)");
    const Eigen::VectorXd z = cod.solve(rhs);
    MultipoleFn vt = v0;
    for (std::size_t c = 0; c < betas.size(); ++c)
        if (std::abs(z(static_cast<int>(c))) > 1e-14) vt = vt + tk.dG(betas[c]).scaled(z(static_cast<int>(c)));
    return vt.canonicalized();
}

namespace {

double max_point_residual(const MultipoleFn& f, const MultipoleFn& ref, unsigned seed) {
    // relative deviation at pseudo-random points away from the origin
    std::uint64_t s = seed;
    auto next = [&s]() {
        s = s * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<double>((s >> 11) % 1000000) / 1000000.0;
    };
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        std::array<double, 3> x{0.3 + next(), -0.8 + 1.4 * next(), 0.5 + next()};
        const double fv = f.eval(x);
        const double rv = std::abs(ref.eval(x));
        worst = std::max(worst, std::abs(fv) / std::max(rv, 1e-12));
    }
    return worst;
}

} // namespace

std::vector<CheckRow> euclid_invariant_suite() {
    std::vector<CheckRow> rows;
    auto add = [&rows](const std::string& name, double value, double threshold) {
        rows.push_back({name, value, threshold, value <= threshold});
    };

    Eigen::Matrix3d A1 = Eigen::Matrix3d::Identity();
    Eigen::Matrix3d A2;
    A2 << 1.0, 0.15, 0.0, -0.15, 1.4, 0.1, 0.0, -0.1, 2.0; // skew part drops from S
    const std::array<Eigen::Matrix3d, 2> mats{A1, A2};
    SphereQuadrature hi{48, 96};

    // kernel residuals of harmonic_polynomials
    double worst_kernel = 0.0;
    for (const auto& A : mats) {
        const Eigen::MatrixXd S = 0.5 * (A + A.transpose());
        for (int m = 0; m <= 3; ++m)
            for (const auto& p : harmonic_polynomials(A, m, 3)) {
                Poly img = Poly::zero(3);
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b)
                        if (S(a, b) != 0.0) img = img + p.derivative(a).derivative(b).scaled(-S(a, b));
                worst_kernel = std::max(worst_kernel, img.max_abs_coeff());
            }
    }
    add("harmonic kernel residual (coefficientwise)", worst_kernel, 1e-10);

    // homogeneity of derivatives of G and K
    double worst_hom = 0.0;
    for (const auto& A : mats) {
        EuclidToolkit tk(A);
        for (const MIdx alpha : {MIdx{1, 0, 0}, MIdx{1, 1, 0}, MIdx{2, 0, 1}, MIdx{2, 2, 0}}) {
            const MultipoleFn f = tk.dG(alpha);
            const int h = f.homogeneity();
            for (double lam : {0.5, 2.0, 3.0}) {
                const std::array<double, 3> x{0.7, -0.4, 0.9};
                const std::array<double, 3> lx{lam * x[0], lam * x[1], lam * x[2]};
                const double lhs = f.eval(lx);
                const double rhs = std::pow(lam, h) * f.eval(x);
                worst_hom = std::max(worst_hom, std::abs(lhs - rhs) / std::max(std::abs(rhs), 1e-300));
            }
            const MultipoleFn fk = tk.dK(alpha);
            const int expected_k = -(3 - 4) - midx_degree(alpha);
            if (fk.homogeneity() != expected_k) worst_hom = std::max(worst_hom, 1.0);
        }
        // degree bookkeeping of dG: -(d-2)-|alpha|
        if (tk.dG({1, 1, 0}).homogeneity() != -3) worst_hom = std::max(worst_hom, 1.0);
    }
    add("homogeneity of d^a G / d^a K", worst_hom, 1e-12);

    // bi-Laplacian identity -div(S grad d^a K) = d^a G for |a| = 4
    double worst_r3 = 0.0;
    for (const auto& A : mats) {
        EuclidToolkit tk(A);
        for (const MIdx alpha : {MIdx{4, 0, 0}, MIdx{2, 2, 0}, MIdx{1, 1, 2}}) {
            const MultipoleFn lhs = tk.apply_operator(tk.dK(alpha));
            const MultipoleFn diff = lhs + tk.dG(alpha).scaled(-1.0);
            worst_r3 = std::max(worst_r3, max_point_residual(diff, tk.dG(alpha), 7));
        }
    }
    add("bi-Laplacian identity at sample points", worst_r3, 1e-8);

    // pairing: moment formula vs sphere quadrature
    double worst_pair = 0.0;
    for (const auto& A : mats) {
        EuclidToolkit tk(A);
        for (int m = 1; m <= 3; ++m) {
            const auto Wb = tk.W_basis(m);
            for (const auto& alpha : multi_indices(3, m)) {
                GCombo single;
                single[alpha] = 1.0;
                const MultipoleFn v = tk.dG(alpha);
                for (const auto& u : Wb) {
                    const double exact = pairing_h(u, single);
                    const double quad = surface_pairing(u, v, tk.S(), 1.3, hi);
                    worst_pair = std::max(worst_pair, std::abs(exact - quad));
                }
            }
        }
    }
    add("pairing moment formula vs quadrature", worst_pair, 1e-6);

    // vanishing for k > m
    double worst_o02 = 0.0;
    for (const auto& A : mats) {
        EuclidToolkit tk(A);
        const Poly one = Poly::constant(3, 1.0);
        worst_o02 = std::max(worst_o02, std::abs(surface_pairing(one, tk.dG({1, 1, 0}), tk.S(), 1.0, hi)));
        for (const auto& u : tk.W_basis(1))
            for (const auto& alpha : {MIdx{2, 0, 0}, MIdx{0, 1, 1}, MIdx{1, 1, 1}})
                worst_o02 = std::max(worst_o02, std::abs(surface_pairing(u, tk.dG(alpha), tk.S(), 1.0, hi)));
    }
    add("pairing vanishes for k > m", worst_o02, 1e-10);

    // synthetic tensor for the correction maps
    Tensor3 Cs(3);
    {
        int t = 0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int kk = 0; kk < 3; ++kk) Cs(i, j, kk) = 0.01 * std::sin(1.0 + 0.7 * ++t);
    }
    Cs = Cs.symmetrized();

    // (R11): vanishing flux condition, radius independence
    double worst_r11 = 0.0;
    for (const auto& A : mats) {
        EuclidToolkit tk(A);
        const auto W3 = tk.W_basis(3);
        const Poly up = W3.front();
        const Poly ut = build_utilde(up, Cs, tk, hi);
        std::array<Poly, 3> T{Poly::zero(3), Poly::zero(3), Poly::zero(3)};
        for (int kk = 0; kk < 3; ++kk)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    if (Cs(i, j, kk) != 0.0)
                        T[static_cast<std::size_t>(kk)] =
                            T[static_cast<std::size_t>(kk)] + up.derivative(i).derivative(j).scaled(Cs(i, j, kk));
        for (const auto& alpha : multi_indices(3, 2)) {
            const MultipoleFn v = tk.dG(alpha);
            for (double R : {1.0, 2.0}) {
                auto V = [&](const std::array<double, 3>& x) {
                    const double vv = v.eval(x);
                    const auto gv = v.grad(x);
                    const double uv = ut.eval(x);
                    const auto gu = ut.grad_eval(x);
                    std::array<double, 3> out{0.0, 0.0, 0.0};
                    for (int a = 0; a < 3; ++a) {
                        double fu = 0.0, fv = 0.0;
                        for (int b = 0; b < 3; ++b) {
                            fu += tk.S()(a, b) * gu[b];
                            fv += tk.S()(a, b) * gv[b];
                        }
                        out[a] = vv * (fu + T[static_cast<std::size_t>(a)].eval(x)) - uv * fv;
                    }
                    return out;
                };
                worst_r11 = std::max(worst_r11, std::abs(surface_flux(V, R, hi)));
            }
        }
    }
    add("(R11)-type flux condition at R in {1,2}", worst_r11, 1e-8);

    // (R1): flux matching for vtilde, radius independence, plus the defining
    // equation at sample points
    double worst_r1 = 0.0, worst_r2 = 0.0;
    for (const auto& A : mats) {
        EuclidToolkit tk(A);
        GCombo vp;
        vp[{1, 0, 0}] = 1.0;
        vp[{0, 1, 0}] = -0.5;
        const MultipoleFn vt = build_vtilde(vp, Cs, tk, hi);
        if (vt.homogeneity() != -(3 - 2) - 2) worst_r1 = std::max(worst_r1, 1.0);
        const MultipoleFn vpf = tk.combo(vp);
        // residual of -div(S grad vt) = div(d_ij v' C*_ij)
        MultipoleFn rhs;
        rhs.M = tk.G().M;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                for (int l = 0; l < 3; ++l)
                    if (Cs(i, j, l) != 0.0) {
                        MIdx ijl{0, 0, 0};
                        ijl[i] += 1;
                        ijl[j] += 1;
                        ijl[l] += 1;
                        rhs = rhs + vpf.derivative_multi(ijl).scaled(Cs(i, j, l));
                    }
        const MultipoleFn res = tk.apply_operator(vt) + rhs.scaled(-1.0);
        worst_r2 = std::max(worst_r2, max_point_residual(res, vpf.derivative(0), 11));
        // flux matching on W_2 at two radii
        std::array<MultipoleFn, 3> W;
        for (int l = 0; l < 3; ++l) {
            W[static_cast<std::size_t>(l)].M = tk.G().M;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    if (Cs(i, j, l) != 0.0) {
                        MIdx ij{0, 0, 0};
                        ij[i] += 1;
                        ij[j] += 1;
                        W[static_cast<std::size_t>(l)] =
                            W[static_cast<std::size_t>(l)] + vpf.derivative_multi(ij).scaled(Cs(i, j, l));
                    }
        }
        for (const auto& u : tk.W_basis(2)) {
            for (double R : {1.0, 2.0}) {
                auto V = [&](const std::array<double, 3>& x) {
                    const double vv = vt.eval(x);
                    const auto gv = vt.grad(x);
                    const double uv = u.eval(x);
                    const auto gu = u.grad_eval(x);
                    std::array<double, 3> out{0.0, 0.0, 0.0};
                    for (int a = 0; a < 3; ++a) {
                        double fu = 0.0, fv = 0.0;
                        for (int b = 0; b < 3; ++b) {
                            fu += tk.S()(a, b) * gu[b];
                            fv += tk.S()(a, b) * gv[b];
                        }
                        out[a] = vv * fu - uv * (fv + W[static_cast<std::size_t>(a)].eval(x));
                    }
                    return out;
                };
                auto Vextra = [&](const std::array<double, 3>& x) {
                    const auto gv = vpf.grad(x);
                    const auto gu = u.grad_eval(x);
                    std::array<double, 3> out{0.0, 0.0, 0.0};
                    for (int kk = 0; kk < 3; ++kk)
                        for (int i = 0; i < 3; ++i)
                            for (int j = 0; j < 3; ++j) out[kk] += gv[i] * gu[j] * (-Cs(i, j, kk));
                    return out;
                };
                worst_r1 = std::max(worst_r1, std::abs(surface_flux(V, R, hi) - surface_flux(Vextra, R, hi)));
            }
        }
    }
    add("(R1)-type flux matching at R in {1,2}", worst_r1, 1e-8);
    add("vtilde equation residual at sample points", worst_r2, 1e-8);

    // zero tensor => zero corrections, exactly
    {
        EuclidToolkit tk(A2);
        const Tensor3 zero(3);
        const Poly ut = build_utilde(tk.W_basis(3).front(), zero, tk, hi);
        GCombo vp;
        vp[{1, 0, 0}] = 1.0;
        const MultipoleFn vt = build_vtilde(vp, zero, tk, hi);
        add("C = 0 gives utilde = vtilde = 0", (ut.is_zero(0.0) && vt.empty()) ? 0.0 : 1.0, 0.0);
    }
    return rows;
}

} // namespace homlab
