#pragma once

#include "../core/field.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>

namespace homlab {

/// Matrix coefficient evaluated at a physical point.
using MatrixFn = std::function<Eigen::MatrixXd(const std::array<double, 3>&)>;

struct EllipticityReport {
    double lambda = 0.0;          // largest lambda for which (i01) holds on all samples
    double worst_second_branch = 0.0; // min over samples of lambda_min(sym(A) - A^T A)
    bool pass = false;
    std::array<double, 3> worst_point{};
    std::array<double, 3> worst_xi{};
};

/// Uniformly elliptic matrix coefficient sampled on a grid.
///
/// Diagonal entries are midpoint samples on the matching edges; off-diagonal
/// entries are node samples and enter the flux through symmetric two-point
/// averaging, which keeps -div(a grad .) exactly symmetric for pointwise
/// symmetric a.
struct CoefficientField {
    Grid grid;
    bool symmetric = true;
    bool periodic = true;
    bool has_offdiag = false;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    std::string kind;
    std::string rng_algorithm; // recorded for reproducibility metadata

    std::vector<std::vector<double>> diag; // d edge-sampled arrays
    MatrixField offd;                      // node samples, zero diagonal

    MatrixFn generator; // kept for resampling on refined grids

    EllipticityReport audit_report;

    Eigen::MatrixXd matrix_at_node(std::size_t idx) const;
};

class MediaError : public std::runtime_error {
public:
    explicit MediaError(const std::string& what) : std::runtime_error(what) {}
};

/// Audit (i01) on a matrix: exact eigenvalue checks plus a >= 64 direction
/// sphere sample. Returns the certified lambda (0 when the second branch
/// fails).
EllipticityReport audit_matrix(const Eigen::MatrixXd& A, int directions = 64);

/// Sample a coefficient from a matrix generator; audits every node and edge
/// midpoint and throws MediaError when (i01) fails.
CoefficientField sample_medium(const Grid& g, const MatrixFn& fn, const std::string& kind, bool symmetric,
                               bool periodic, std::uint64_t seed = 0);

CoefficientField constant_medium(const Grid& g, const Eigen::MatrixXd& A);

/// Periodic two-phase checkerboard: alpha in {1/contrast, 1} on sub-cells of
/// the period, contrast >= 1; values normalized so sup a = 1.
CoefficientField periodic_checkerboard(const Grid& g, double contrast, int cells_per_period);

/// i.i.d. per-cell two-valued scalar medium on the torus; value pick is a
/// pure function of (seed, cell index) via splitmix64.
CoefficientField random_checkerboard(const Grid& g, std::uint64_t seed, double value_low, double value_high,
                                     double cell_size);

/// Same as random_checkerboard but cells with |center| >= rho are drawn from
/// seed_outside instead (used by the locality experiment).
CoefficientField random_checkerboard_masked(const Grid& g, std::uint64_t seed_inside, std::uint64_t seed_outside,
                                            double rho, double value_low, double value_high, double cell_size);

/// Smooth periodic scalar medium a(x) = alpha(x) I with one Fourier mode per
/// axis; symmetric, infinitely smooth, ellipticity ratio ~ (base-amp)/(base+amp).
CoefficientField smooth_isotropic(const Grid& g, double base, double amplitude, double period);

/// Smooth symmetric matrix medium with genuinely varying off-diagonal
/// entries (exercises the averaging paths of the staggered operator).
CoefficientField smooth_anisotropic(const Grid& g, double base, double amplitude, double period);

/// a(x) = base(x) + amplitude * b(x) * J with J skew and b a smooth periodic
/// scalar that is not centrally symmetric, so that C^sym does not vanish.
CoefficientField skew_perturbation(const CoefficientField& base, double amplitude, const std::string& pattern);

CoefficientField transpose_medium(const CoefficientField& a);

/// splitmix64, the documented RNG behind seeded media.
std::uint64_t splitmix64(std::uint64_t x);

} // namespace homlab
