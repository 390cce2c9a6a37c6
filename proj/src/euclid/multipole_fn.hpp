#pragma once

#include "hompoly.hpp"

#include <Eigen/Dense>

namespace homlab {

/// Closed-form function family sum_t P_t(x) (x.Mx)^(-q_t/2) on R^3 \ {0},
/// closed under differentiation:
///   d_i [P r^(-q)] = (d_i P) r^(-q) - q P (Mx)_i r^(-q-2),  r^2 = x.Mx.
/// Houses G, K, their derivatives, and vtilde.
struct MultipoleFn {
    struct Term {
        Poly P;
        int q; // may be negative (K has q = -1)
    };

    Eigen::Matrix3d M = Eigen::Matrix3d::Identity();
    std::vector<Term> terms;

    bool empty() const { return terms.empty(); }

    double eval(const std::array<double, 3>& x) const;
    std::array<double, 3> grad(const std::array<double, 3>& x) const;

    MultipoleFn derivative(int axis) const;
    MultipoleFn derivative_multi(const MIdx& alpha) const;

    MultipoleFn operator+(const MultipoleFn& o) const;
    MultipoleFn scaled(double c) const;

    /// Common-q representative with combined polynomials; unique given the
    /// maximal q, so equality and zero tests are coefficientwise.
    MultipoleFn canonicalized() const;
    bool is_zero(double eps = 1e-12) const;

    /// Homogeneity degree deg(P) - q; throws if terms disagree.
    int homogeneity() const;
};

} // namespace homlab
