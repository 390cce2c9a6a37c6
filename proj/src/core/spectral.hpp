#pragma once

#include "field.hpp"

namespace homlab {

/// Exact spectral inversion of the discrete 2d+1-point Laplacian on the
/// torus: returns the mean-zero w with -div(grad w) = f. Throws unless the
/// source mean is below `mean_tol` relative to its norm.
ScalarField solve_poisson_fft(const ScalarField& f, double mean_tol = 1e-10);

/// Symbol of -div grad at integer frequency k: (4/h^2) sum_l sin^2(pi k_l / n).
double laplace_symbol(const Grid& g, const std::array<int, 3>& k);

/// Curl-type potential of a mean-zero edge field q with div q = 0:
/// solves  -Lap s_jk = D+_j q_k - D+_k q_j  spectrally, with s skew and
/// mean-zero. Components are face-centered, so the backward-difference
/// divergence (div s)_l = sum_k D-_k s_lk lands exactly on l-edges and
/// reproduces q up to the divergence defect of q.
SkewField curl_potential(const VectorField& q);

/// Backward-difference divergence of a face-centered skew field onto edges.
VectorField skew_divergence(const SkewField& s);

} // namespace homlab
