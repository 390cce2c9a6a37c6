#pragma once

#include "../euclid/euclid.hpp"

namespace homlab {

/// Second-order two-scale expansion of a polynomial (growing side):
///   (1 + phi_i d_i)(u_h + ut) + psi_ij d_ij u_h
/// evaluated nodewise on `target`; corrector values are looked up by torus
/// periodicity (target nodes must sit on the corrector lattice).
ScalarField expand(const Poly& u_h, const CorrectorSet& cs, const Poly& utilde, const Grid& target);

/// Dual expansion of a multipole combination (decaying side):
///   (1 + phi*_i d_i)(v_h + vt) + psi*_ij d_ij v_h
/// with nodes inside |x| < r_excl set to zero (the singular core).
ScalarField expand_dual(const GCombo& v_h, const EuclidToolkit& tk, const CorrectorSet& cs_star,
                        const MultipoleFn& vtilde, const Grid& target, double r_excl);

/// Residual flux of the expansion per
///   g = -( d_ij(u_h - u_h') C^sym_ij + (phi_i a - sigma_i) grad d_i ut
///          + (psi_ij a - Psi_ij) grad d_ij u_h ),
/// so that -div(a grad E u_h) = div g up to discretization order.
VectorField residual_flux(const Poly& u_h, const CoefficientField& a, const CorrectorSet& cs, const Poly& utilde,
                          const Grid& target);

struct HetPairing {
    double value = 0.0;      // at R_cut
    double value_alt = 0.0;  // cutoff shrunk by 1.5
    double variation = 0.0;  // |value - value_alt| / max |.|
};

/// Cutoff realization of (u, v) = -sum grad(eta) . (v a grad u - u a* grad v) h^d
/// with eta piecewise linear in radius, 1 on |x| < R_cut, 0 outside 2 R_cut.
HetPairing pairing_het(const ScalarField& u, const ScalarField& v, const CoefficientField& a, double R_cut);

/// RMS of -div(a grad((1 + phi_i d_i + psi_ij d_ij) u_h)) over the window
/// |x|_inf <= 0.4 period, evaluated on a lattice-aligned box around one
/// period (the polynomial is not periodic, so no wrap seam is allowed).
double harmonicity_residual_rms(const CoefficientField& a_torus, const CorrectorSet& cs, const Poly& u_h);

/// RMS of -div(a grad E u_h) - div(residual_flux) over the same window.
double expansion_consistency_rms(const CoefficientField& a_torus, const CorrectorSet& cs, const Poly& u_h,
                                 const Poly& utilde);

} // namespace homlab
