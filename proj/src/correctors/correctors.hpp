#pragma once

#include "../core/spectral.hpp"
#include "../solver/solver.hpp"

#include <map>

namespace homlab {

/// Third-order tensor C[i][j][k] stored flat.
struct Tensor3 {
    int d = 0;
    std::vector<double> v;

    Tensor3() = default;
    explicit Tensor3(int d_) : d(d_), v(static_cast<std::size_t>(d_ * d_ * d_), 0.0) {}
    double& operator()(int i, int j, int k) { return v[static_cast<std::size_t>((i * d + j) * d + k)]; }
    double operator()(int i, int j, int k) const { return v[static_cast<std::size_t>((i * d + j) * d + k)]; }
    double norm() const {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    }
    Tensor3 symmetrized() const; // average over all 6 index permutations
};

struct CorrectorResiduals {
    std::vector<double> cell;          // per i: relative residual of the phi_i problem
    std::vector<double> sigma_div;     // per i: ||div sigma_i - q_i|| / ||q_i||
    std::vector<double> psi_cell;      // per (i,j)
    std::vector<double> Psi_div;       // per (i,j)
    double max() const;
};

/// The corrector hierarchy of one coefficient field on its torus.
struct CorrectorSet {
    Grid grid;
    int d = 0;
    std::vector<ScalarField> phi;   // d
    std::vector<SkewField> sigma;   // d
    std::vector<ScalarField> psi;   // d*d, index i*d+j
    std::vector<SkewField> Psi;     // d*d
    Eigen::MatrixXd abar;           // column i = cell-mean flux of e_i + grad phi_i
    Tensor3 C;                      // C(i,j,k) = mean k-component of the psi_ij flux
    CorrectorResiduals residuals;
    bool has_second_order = false;
    bool has_flux_potentials = false;

    const ScalarField& psi_at(int i, int j) const { return psi[static_cast<std::size_t>(i * d + j)]; }
    const SkewField& Psi_at(int i, int j) const { return Psi[static_cast<std::size_t>(i * d + j)]; }

    /// Periodic lookup of node values at a physical point that lies on the
    /// lattice of this torus (asserts alignment to within 1e-6 h).
    std::size_t wrap_index(const std::array<double, 3>& x) const;
};

struct CorrectorOptions {
    bool second_order = true;
    bool flux_potentials = true;
};

/// phi_i and abar from the periodic cell problems.
std::pair<std::vector<ScalarField>, Eigen::MatrixXd> first_order(const CoefficientField& a, const SolverConfig& cfg,
                                                                 std::vector<double>* residuals = nullptr);

/// Full pipeline: phi, sigma, abar, then (optionally) psi, C, Psi.
CorrectorSet compute_correctors(const CoefficientField& a, const SolverConfig& cfg,
                                const CorrectorOptions& opts = {});

/// Independent evaluation of C from the first-order correctors of a and a*:
/// cell average of e_j . (sigma_i grad phi*_k) - e_j . (sigma*_k grad phi_i).
Tensor3 cross_check_C(const CorrectorSet& plain, const CorrectorSet& starred);

/// Cell-average diagnostic built from the invariant-style integrand
/// e_j.((x_i+phi_i) a*(e_k+grad phi*_k) - (x_k+phi*_k) a(e_i+grad phi_i))
/// minus its homogenized counterpart, window-averaged over `periods`
/// periodic copies with a smooth radial weight. For periodic media the
/// result reproduces C.
Tensor3 cell_average_invariant(const CoefficientField& a, const CoefficientField& astar, const CorrectorSet& plain,
                               const CorrectorSet& starred, int periods = 6);

struct GrowthRow {
    double radius = 0.0;
    double first_order = 0.0;  // (1/R) RMS of (phi, sigma) over the ball
    double second_order = 0.0; // (1/R^2) RMS of recentered (psi, Psi)
};

struct GrowthReport {
    std::array<double, 3> center{};
    std::vector<GrowthRow> rows;
    double slope_first = 0.0;  // log-log fit of first_order vs radius
    double slope_second = 0.0;
    double r_star = 0.0; // smallest radius from which both normalized quantities stay <= 1
};

/// Ball statistics of the corrector hierarchy at dyadic radii; needs at
/// least 3 radii spanning >= 3 dyadic levels.
std::vector<GrowthReport> growth_diagnostics(const CorrectorSet& set, const std::vector<std::array<double, 3>>& centers,
                                             const std::vector<double>& radii);

} // namespace homlab
