#pragma once

#include "field.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace homlab::kernels {

// OpenMP-parallel lattice kernels. Reductions use fixed-size blocks summed
// in index order, so results are bit-identical for any thread count.
// Serial counterparts for testing live in homlab::ref.

/// Forward-difference gradient onto edges; exact midpoint derivative for
/// quadratics. Box grids leave the trailing edge layer zero.
void gradient(const ScalarField& f, VectorField& out);
VectorField gradient(const ScalarField& f);

/// Backward-difference divergence, the exact negative adjoint of gradient
/// on the torus. On the box only interior nodes are written.
void divergence(const VectorField& F, ScalarField& out);
ScalarField divergence(const VectorField& F);

/// Average edge component l onto nodes: (F_l(x) + F_l(x - h e_l)) / 2.
void edge_to_node(const VectorField& F, int l, std::vector<double>& out);

/// Node values onto l-edges: (c(x) + c(x + h e_l)) / 2.
void node_to_edge(const Grid& g, const std::vector<double>& c, int l, std::vector<double>& out);

/// Euclidean magnitude of the node-interpolated vector field.
void vector_magnitude(const VectorField& F, std::vector<double>& out);

// BLAS-1 style helpers on raw arrays.
double dot(const std::vector<double>& a, const std::vector<double>& b);
double nrm2(const std::vector<double>& a);
void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y);
void xpay(const std::vector<double>& x, double beta, std::vector<double>& y); // y = x + beta*y
void scal(double alpha, std::vector<double>& x);
void copy(const std::vector<double>& x, std::vector<double>& y);
void fill(std::vector<double>& x, double value);
double mean(const std::vector<double>& a);
void subtract_mean(std::vector<double>& a);

/// Nodes with |x - center| < R (minimal image on the torus).
std::vector<std::size_t> ball_nodes(const Grid& g, const std::array<double, 3>& center, double R);
std::vector<std::size_t> annulus_nodes(const Grid& g, const std::array<double, 3>& center, double r_in, double r_out);

/// Mean of a scalar field over |x-center| < R. Throws if the region is empty.
double ball_mean(const ScalarField& f, double R, const std::array<double, 3>& center);
/// Componentwise mean of the node-interpolated vector field over the ball.
std::vector<double> ball_mean(const VectorField& F, double R, const std::array<double, 3>& center);

/// RMS of the node-interpolated |F| over r_in <= |x-center| < r_out.
double annulus_rms(const VectorField& F, double r_in, double r_out, const std::array<double, 3>& center);
double annulus_rms_scalar(const ScalarField& f, double r_in, double r_out, const std::array<double, 3>& center);

} // namespace homlab::kernels

namespace homlab::ref {

// Plain single-threaded reference implementations (index arithmetic via
// div/mod, no blocking) used to cross-check the parallel kernels.
void gradient(const ScalarField& f, VectorField& out);
void divergence(const VectorField& F, ScalarField& out);
double dot(const std::vector<double>& a, const std::vector<double>& b);

} // namespace homlab::ref
