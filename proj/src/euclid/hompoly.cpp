#include "hompoly.hpp"

#include <cmath>
#include <stdexcept>

namespace homlab {

int midx_degree(const MIdx& a) { return a[0] + a[1] + a[2]; }

double midx_factorial(const MIdx& a) {
    auto f = [](int n) {
        double r = 1.0;
        for (int i = 2; i <= n; ++i) r *= i;
        return r;
    };
    return f(a[0]) * f(a[1]) * f(a[2]);
}

std::vector<MIdx> multi_indices(int d, int degree) {
    std::vector<MIdx> out;
    if (d == 2) {
        for (int i = degree; i >= 0; --i) out.push_back({i, degree - i, 0});
    } else {
        for (int i = degree; i >= 0; --i)
            for (int j = degree - i; j >= 0; --j) out.push_back({i, j, degree - i - j});
    }
    return out;
}

Poly Poly::constant(int d, double c) {
    Poly p{d, {}};
    if (c != 0.0) p.terms[{0, 0, 0}] = c;
    return p;
}

Poly Poly::variable(int d, int axis) {
    MIdx e{0, 0, 0};
    e[axis] = 1;
    return monomial(d, e, 1.0);
}

Poly Poly::monomial(int d, const MIdx& e, double c) {
    Poly p{d, {}};
    if (c != 0.0) p.terms[e] = c;
    return p;
}

double Poly::eval(const std::array<double, 3>& x) const {
    double s = 0.0;
    for (const auto& [e, c] : terms) {
        double t = c;
        for (int l = 0; l < d; ++l)
            for (int r = 0; r < e[l]; ++r) t *= x[l];
        s += t;
    }
    return s;
}

std::array<double, 3> Poly::grad_eval(const std::array<double, 3>& x) const {
    std::array<double, 3> g{0.0, 0.0, 0.0};
    for (int l = 0; l < d; ++l) g[l] = derivative(l).eval(x);
    return g;
}

Poly Poly::derivative(int axis) const {
    Poly p{d, {}};
    for (const auto& [e, c] : terms) {
        if (e[axis] == 0) continue;
        MIdx en = e;
        en[axis] -= 1;
        p.terms[en] += c * e[axis];
    }
    p.prune(0.0);
    return p;
}

Poly Poly::derivative_multi(const MIdx& alpha) const {
    Poly p = *this;
    for (int l = 0; l < 3; ++l)
        for (int r = 0; r < alpha[l]; ++r) p = p.derivative(l);
    return p;
}

Poly Poly::operator+(const Poly& o) const {
    Poly p = *this;
    for (const auto& [e, c] : o.terms) p.terms[e] += c;
    p.prune(0.0);
    return p;
}

Poly Poly::operator-(const Poly& o) const { return *this + o.scaled(-1.0); }

Poly Poly::operator*(const Poly& o) const {
    Poly p{d, {}};
    for (const auto& [e1, c1] : terms)
        for (const auto& [e2, c2] : o.terms) {
            MIdx e{e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2]};
            p.terms[e] += c1 * c2;
        }
    p.prune(0.0);
    return p;
}

Poly Poly::scaled(double c) const {
    Poly p{d, {}};
    for (const auto& [e, v] : terms)
        if (c * v != 0.0) p.terms[e] = c * v;
    return p;
}

int Poly::degree() const {
    int m = -1;
    for (const auto& [e, c] : terms)
        if (c != 0.0) m = std::max(m, midx_degree(e));
    return m;
}

bool Poly::homogeneous(int* deg) const {
    int m = -1;
    for (const auto& [e, c] : terms) {
        if (c == 0.0) continue;
        if (m < 0) m = midx_degree(e);
        else if (m != midx_degree(e)) return false;
    }
    if (deg) *deg = m;
    return true;
}

Poly Poly::homogeneous_part(int m) const {
    Poly p{d, {}};
    for (const auto& [e, c] : terms)
        if (midx_degree(e) == m) p.terms[e] = c;
    return p;
}

double Poly::coeff(const MIdx& e) const {
    auto it = terms.find(e);
    return it == terms.end() ? 0.0 : it->second;
}

double Poly::deriv_at_zero(const MIdx& alpha) const { return midx_factorial(alpha) * coeff(alpha); }

double Poly::max_abs_coeff() const {
    double m = 0.0;
    for (const auto& [e, c] : terms) m = std::max(m, std::abs(c));
    return m;
}

void Poly::prune(double eps) {
    const double cut = eps * max_abs_coeff();
    for (auto it = terms.begin(); it != terms.end();) {
        if (std::abs(it->second) <= cut || it->second == 0.0) it = terms.erase(it);
        else ++it;
    }
}

bool Poly::is_zero(double eps) const {
    for (const auto& [e, c] : terms)
        if (std::abs(c) > eps) return false;
    return true;
}

} // namespace homlab
