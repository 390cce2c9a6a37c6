#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

namespace homlab {

/// Multi-index in up to three variables.
using MIdx = std::array<int, 3>;

int midx_degree(const MIdx& a);
double midx_factorial(const MIdx& a);
std::vector<MIdx> multi_indices(int d, int degree);

/// Sparse polynomial with double coefficients. Most uses are homogeneous
/// (elements of W_m^h), but mixed-degree support is allowed so projections
/// and Taylor manipulations stay closed.
struct Poly {
    int d = 3;
    std::map<MIdx, double> terms;

    static Poly zero(int d) { return Poly{d, {}}; }
    static Poly constant(int d, double c);
    static Poly variable(int d, int axis);
    static Poly monomial(int d, const MIdx& e, double c);

    double eval(const std::array<double, 3>& x) const;
    std::array<double, 3> grad_eval(const std::array<double, 3>& x) const;
    Poly derivative(int axis) const;
    Poly derivative_multi(const MIdx& alpha) const;

    Poly operator+(const Poly& o) const;
    Poly operator-(const Poly& o) const;
    Poly operator*(const Poly& o) const;
    Poly scaled(double c) const;

    int degree() const; // -1 for the zero polynomial
    bool homogeneous(int* deg = nullptr) const;
    Poly homogeneous_part(int m) const;

    double coeff(const MIdx& e) const;
    /// alpha-th derivative at the origin: alpha! * coeff(alpha).
    double deriv_at_zero(const MIdx& alpha) const;

    double max_abs_coeff() const;
    /// Drop terms below eps * max|coeff| (canonicalization epsilon).
    void prune(double eps = 1e-13);
    bool is_zero(double eps = 1e-13) const;
};

} // namespace homlab
