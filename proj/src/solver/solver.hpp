#pragma once

#include "../media/media.hpp"

#include <optional>

namespace homlab {

struct SolverConfig {
    double tol = 1e-10;   // relative residual on the divergence-form equation
    int max_iters = 20000;
    bool precond = true;  // Jacobi
    enum class Method { Auto, CG, BiCGStab } method = Method::Auto;

    void validate() const {
        if (!(tol > 0.0 && tol <= 1e-4)) throw std::invalid_argument("solver: tol must be in (0, 1e-4]");
        if (max_iters < 1) throw std::invalid_argument("solver: max_iters must be >= 1");
    }
};

struct SolveStats {
    int iters = 0;
    double rel_residual = 0.0;      // recursive residual at exit
    double true_rel_residual = 0.0; // recomputed from the returned iterate
    const char* method = "";
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double last_rel_residual)
        : std::runtime_error(what), last_rel_residual(last_rel_residual) {}
    double last_rel_residual;
};

/// The discrete operator u -> -div(a grad u) with edge-midpoint diagonal
/// samples and node-averaged off-diagonal entries. The transpose of apply()
/// equals the apply() of transpose_medium(a).
class DivFormOperator {
public:
    explicit DivFormOperator(const CoefficientField& a);

    const Grid& grid() const { return a_->grid; }

    /// r = -div(a grad u); box grids write interior nodes only.
    void apply(const std::vector<double>& u, std::vector<double>& r) const;

    /// out = a w for a staggered edge field w.
    void flux(const VectorField& w, VectorField& out) const;

    /// a e_i as an edge field.
    VectorField unit_flux(int i) const;

    std::vector<double> jacobi_diag() const;

private:
    const CoefficientField* a_;
};

/// Serial reference operator apply used to cross-check DivFormOperator.
void ref_apply_op(const CoefficientField& a, const std::vector<double>& u, std::vector<double>& r);

/// Mean-zero u on the torus with -div(a(grad u) + g) = 0 to relative
/// tolerance cfg.tol (measured against ||div g||).
ScalarField solve_cell(const CoefficientField& a, const VectorField& g, const SolverConfig& cfg,
                       SolveStats* stats = nullptr);

/// Dirichlet box problem -div(a grad v) = div g with v = 0 on the boundary
/// layer; g must vanish on the two outermost cell layers.
ScalarField solve_box_dirichlet(const CoefficientField& a, const VectorField& g, const SolverConfig& cfg,
                                SolveStats* stats = nullptr);

} // namespace homlab
