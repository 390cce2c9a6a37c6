#pragma once

#include "../correctors/correctors.hpp"
#include "multipole_fn.hpp"

#include <functional>
#include <map>

namespace homlab {

/// Finite combination sum_alpha c_alpha d^alpha G.
using GCombo = std::map<MIdx, double>;

/// Basis of abar-harmonic homogeneous polynomials of degree m (kernel of
/// -div(abar grad .) on degree-m homogeneous polynomials). Works for d = 2, 3.
std::vector<Poly> harmonic_polynomials(const Eigen::MatrixXd& abar, int m, int d);

/// Constant-coefficient toolkit for d = 3. Only sym(abar) enters G and K in
/// the scalar case, so the same objects serve abar and its transpose.
class EuclidToolkit {
public:
    explicit EuclidToolkit(const Eigen::Matrix3d& abar);

    const Eigen::Matrix3d& abar() const { return abar_; }
    const Eigen::Matrix3d& S() const { return S_; }

    /// G(x) = (4 pi)^-1 det(S)^-1/2 (x.S^-1 x)^-1/2
    const MultipoleFn& G() const { return G_; }
    /// K(x) = -(8 pi)^-1 det(S)^-1/2 (x.S^-1 x)^1/2, -div(S grad K) = G
    const MultipoleFn& K() const { return K_; }

    const MultipoleFn& dG(const MIdx& alpha) const;
    const MultipoleFn& dK(const MIdx& alpha) const;

    MultipoleFn combo(const GCombo& c) const;

    /// -div(S grad f), exact term rewriting.
    MultipoleFn apply_operator(const MultipoleFn& f) const;

    std::vector<Poly> W_basis(int m) const; // abar-harmonic, homogeneous degree m

private:
    Eigen::Matrix3d abar_, S_, Minv_;
    double detS_ = 1.0;
    MultipoleFn G_, K_;
    mutable std::map<MIdx, MultipoleFn> dG_cache_, dK_cache_;
    mutable std::map<int, std::vector<Poly>> W_cache_;
};

/// Moment-formula pairing (u, sum c_a d^a G)_h = sum c_a (-1)^|a| d^a u(0).
double pairing_h(const Poly& u, const GCombo& v);

struct SphereQuadrature {
    int polar = 24;    // Gauss-Legendre points in cos(theta)
    int azimuth = 48;  // uniform points in phi
};

/// Flux integral over the sphere of radius R of a vector field.
double surface_flux(const std::function<std::array<double, 3>(const std::array<double, 3>&)>& V, double R,
                    const SphereQuadrature& quad = {});

/// Surface realization of the pairing at radius R:
///   (u, v) = int_{|x|=R} nu . (v S grad u - u S grad v).
double surface_pairing(const Poly& u, const MultipoleFn& v, const Eigen::Matrix3d& S, double R,
                       const SphereQuadrature& quad = {});

/// Unique homogeneous degree-(m-1) polynomial with
///   -div(abar grad ut) = div(d_ij u' C^sym_ij)
/// normalized by the vanishing flux condition against every d^a G, |a|=m-1.
/// Requires m >= 3; returns zero when C^sym vanishes.
Poly build_utilde(const Poly& uprime, const Tensor3& Csym, const EuclidToolkit& tk,
                  const SphereQuadrature& quad = {});

/// Unique homogeneous degree -(d-2)-(k+1) correction for v' in Z_k^h:
/// K-derivative candidate plus the Z_{k+1}^h adjustment solving the flux
/// matching condition. `Cstar_sym` is the starred symmetrized tensor; the
/// unstarred one entering the right-hand side is its negative.
MultipoleFn build_vtilde(const GCombo& vprime, const Tensor3& Cstar_sym, const EuclidToolkit& tk,
                         const SphereQuadrature& quad = {});

struct CheckRow {
    std::string name;
    double value = 0.0; // measured defect
    double threshold = 0.0;
    bool pass = false;
};

/// The constant-coefficient invariant table: kernel residuals, homogeneity,
/// the bi-Laplacian identity, pairing-vs-quadrature agreement, vanishing for
/// k > m, flux-condition radius independence, and the zero-tensor branch.
std::vector<CheckRow> euclid_invariant_suite();

} // namespace homlab
