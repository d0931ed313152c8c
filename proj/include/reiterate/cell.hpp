#pragma once

#include "reiterate/elliptic.hpp"
#include "reiterate/grid.hpp"

#include <vector>

namespace reiterate {

/// Periodic cell problem at one frozen slow sample: the fast coefficient is
/// stored on the nodes of a periodic grid.
struct CellProblem {
  CellProblem(GridFunctiond coefficient, double tol = 1e-10, std::vector<double> frozen = {});

  template <typename Sampler>
  static CellProblem sample(const Grid& grid, Sampler&& sampler, double tol = 1e-10, std::vector<double> frozen = {}) {
    return CellProblem(GridFunctiond::matrix(grid, sampler), tol, std::move(frozen));
  }

  const Grid& grid() const { return coefficient.grid(); }
  int dim() const { return coefficient.dim(); }

  GridFunctiond coefficient;
  double tol;
  std::vector<double> frozen;  // slow arguments, recorded only
  double lambda_min = 0.0;     // nodal eigenvalue extremes
  double lambda_max = 0.0;
};

struct CorrectorSet {
  std::vector<GridFunctiond> chi;       // chi^j, zero mean
  std::vector<GridFunctiond> grad_chi;  // centered gradients
  /// sum_j (mean |grad chi^j|^2 + mean |chi^j|^2), face differences.
  double energy = 0.0;
  /// d (1 + 1/(4 pi^2)) / mu^4 with mu = min(lambda_min, 1/lambda_max).
  double energy_bound = 0.0;
  std::vector<double> residuals;
  std::vector<int> iterations;
};

/// Solves -div(A grad chi^j) = div(A e_j) with zero mean for j = 1..d.
CorrectorSet solve_corrector(const CellProblem& problem, const SolverOptions& options = {});

struct EffectiveTensor {
  Tensor value;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  bool in_range = true;  // spectrum within the nodal eigenvalue extremes
};

/// Mean of the discrete flux A(e_j + grad chi^j); exact discrete harmonic
/// mean in 1D.
EffectiveTensor effective_tensor(const CellProblem& problem, const CorrectorSet& correctors);

struct FluxMatrix {
  GridFunctiond B;                   // b_ij at component (i, j)
  double max_abs_mean = 0.0;         // max_ij |mean b_ij|
  double divergence_residual = 0.0;  // max_j l2 norm of sum_i d_i b_ij
};

/// B = A + A grad chi - Â, with the flux moved to nodes by face averaging.
FluxMatrix flux_matrix(const CellProblem& problem, const CorrectorSet& correctors, const EffectiveTensor& effective);

struct FluxData {
  GridFunctiond B;
  std::vector<GridFunctiond> f;    // f_ij at index i*d + j, Laplace potentials
  std::vector<GridFunctiond> phi;  // phi[k] matrix-valued, component (i, j) = phi_kij
  double max_abs_mean_phi = 0.0;
  /// max_ij l2 norm of sum_k d_k phi_kij - b_ij.
  double reconstruction_residual = 0.0;

  double at(int k, int i, int j, Index node) const { return phi[k].values()(node, i * B.dim() + j); }
};

/// Solves Laplace f_ij = b_ij with zero mean and sets
/// phi_kij = d_k f_ij - d_i f_kj, skew in (k, i) by construction. Throws
/// ValidationError if some b_ij has mean above `tol` relative to max|B|.
FluxData flux_correctors(const GridFunctiond& B, double tol = 1e-8);

}  // namespace reiterate
