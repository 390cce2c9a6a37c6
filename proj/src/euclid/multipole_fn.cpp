#include "multipole_fn.hpp"

#include <cmath>
#include <stdexcept>

namespace homlab {

namespace {

Poly mx_component(const Eigen::Matrix3d& M, int i) {
    Poly p = Poly::zero(3);
    for (int j = 0; j < 3; ++j)
        if (M(i, j) != 0.0) p = p + Poly::variable(3, j).scaled(M(i, j));
    return p;
}

Poly quadratic_form(const Eigen::Matrix3d& M) {
    Poly p = Poly::zero(3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (M(i, j) != 0.0) p = p + (Poly::variable(3, i) * Poly::variable(3, j)).scaled(M(i, j));
    return p;
}

} // namespace

double MultipoleFn::eval(const std::array<double, 3>& x) const {
    double r2 = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r2 += x[i] * M(i, j) * x[j];
    if (r2 <= 0.0) throw std::domain_error("MultipoleFn: evaluation at the singular point");
    double s = 0.0;
    for (const auto& t : terms) s += t.P.eval(x) * std::pow(r2, -0.5 * t.q);
    return s;
}

std::array<double, 3> MultipoleFn::grad(const std::array<double, 3>& x) const {
    std::array<double, 3> g{0.0, 0.0, 0.0};
    for (int l = 0; l < 3; ++l) g[l] = derivative(l).eval(x);
    return g;
}

MultipoleFn MultipoleFn::derivative(int axis) const {
    MultipoleFn out;
    out.M = M;
    for (const auto& t : terms) {
        Poly dp = t.P.derivative(axis);
        if (!dp.is_zero(0.0)) out.terms.push_back({dp, t.q});
        Poly tail = (t.P * mx_component(M, axis)).scaled(-static_cast<double>(t.q));
        if (!tail.is_zero(0.0)) out.terms.push_back({tail, t.q + 2});
    }
    return out.canonicalized();
}

MultipoleFn MultipoleFn::derivative_multi(const MIdx& alpha) const {
    MultipoleFn f = *this;
    for (int l = 0; l < 3; ++l)
        for (int r = 0; r < alpha[l]; ++r) f = f.derivative(l);
    return f;
}

MultipoleFn MultipoleFn::operator+(const MultipoleFn& o) const {
    if (!terms.empty() && !o.terms.empty() && (M - o.M).norm() > 1e-12 * (M.norm() + 1.0))
        throw std::invalid_argument("MultipoleFn: adding terms with different anisotropy");
    MultipoleFn out;
    out.M = terms.empty() ? o.M : M;
    out.terms = terms;
    for (const auto& t : o.terms) out.terms.push_back(t);
    return out.canonicalized();
}

MultipoleFn MultipoleFn::scaled(double c) const {
    MultipoleFn out;
    out.M = M;
    for (const auto& t : terms) {
        Poly p = t.P.scaled(c);
        if (!p.is_zero(0.0)) out.terms.push_back({p, t.q});
    }
    return out;
}

MultipoleFn MultipoleFn::canonicalized() const {
    MultipoleFn out;
    out.M = M;
    if (terms.empty()) return out;
    int qmax = terms.front().q;
    for (const auto& t : terms) qmax = std::max(qmax, t.q);
    const Poly r2 = quadratic_form(M);
    Poly acc = Poly::zero(3);
    for (const auto& t : terms) {
        const int gap = qmax - t.q;
        if (gap % 2 != 0) throw std::logic_error("MultipoleFn: mixed q parity");
        Poly p = t.P;
        for (int r = 0; r < gap / 2; ++r) p = p * r2;
        acc = acc + p;
    }
    acc.prune();
    if (!acc.is_zero(0.0)) out.terms.push_back({acc, qmax});
    return out;
}

bool MultipoleFn::is_zero(double eps) const {
    MultipoleFn c = canonicalized();
    if (c.terms.empty()) return true;
    // relative to the coefficient scale of the canonical polynomial
    return c.terms.front().P.is_zero(eps * std::max(1.0, c.terms.front().P.max_abs_coeff()));
}

int MultipoleFn::homogeneity() const {
    if (terms.empty()) throw std::logic_error("MultipoleFn: homogeneity of the zero function");
    int h = 0;
    bool first = true;
    for (const auto& t : terms) {
        int deg;
        if (!t.P.homogeneous(&deg)) throw std::logic_error("MultipoleFn: inhomogeneous polynomial factor");
        const int th = deg - t.q;
        if (first) {
            h = th;
            first = false;
        } else if (th != h) {
            throw std::logic_error("MultipoleFn: homogeneity mismatch across terms");
        }
    }
    return h;
}

} // namespace homlab
