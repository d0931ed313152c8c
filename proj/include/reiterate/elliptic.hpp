#pragma once

#include "reiterate/grid.hpp"

#include <vector>

namespace reiterate {

struct SolverOptions {
  enum class Method { automatic, cg, direct };
  double tol = 1e-10;
  int max_iterations = 100000;
  /// `automatic` uses the exact flux-integration solve in 1D and PCG in 2D.
  Method method = Method::automatic;
};

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  std::vector<double> residual_history;
};

struct SolveResult {
  GridFunctiond solution;
  SolveReport report;
};

/// Flux-form discretization of u -> -div(a grad u) on a structured grid.
///
/// The operator is `G^T K G`: `G` maps nodal values to axis differences on
/// faces plus the two averaged gradient components on each cell, `K` holds
/// face-harmonic means of the diagonal entries of `a` and cell means of the
/// off-diagonal entry. Face-harmonic averaging makes one-dimensional
/// laminates exact in the flux. The construction is symmetric and, when
/// every face coefficient exceeds the mean of the neighbouring cell
/// off-diagonals, positive definite modulo constants.
class EllipticOperator {
public:
  explicit EllipticOperator(const GridFunctiond& a);

  const Grid& grid() const { return grid_; }

  /// out = G^T K (G u + e) where `e` is a constant gradient added on every
  /// face and cell. With e = 0 this is the operator itself.
  void apply_affine(const Eigen::VectorXd& u, const Point& e, Eigen::VectorXd& out) const;
  void apply(const Eigen::VectorXd& u, Eigen::VectorXd& out) const;

  const Eigen::VectorXd& diagonal() const { return diag_; }

  /// Average of the discrete flux K (G u + e) over faces and cells.
  /// Periodic grids only.
  Point mean_flux(const Eigen::VectorXd& u, const Point& e) const;

  /// Flux K (G u + e) moved to nodes (average of the adjacent faces and
  /// cells). Periodic grids only; the node mean equals `mean_flux`.
  GridFunctiond nodal_flux(const Eigen::VectorXd& u, const Point& e) const;

  /// Discrete energy (G v, K G v) weighted by the cell volume.
  double energy(const Eigen::VectorXd& v) const;

  const std::vector<double>& face_coefficients(int axis) const { return face_[axis]; }

private:
  bool face_exists(Index node, int axis) const;
  bool cell_exists(Index node) const;

  Grid grid_;
  std::vector<double> face_[2];  // indexed by the lower node
  std::vector<double> cell_;     // off-diagonal mean, indexed by lower-left node
  bool has_offdiag_ = false;
  Eigen::VectorXd diag_;
};

/// Periodic problem -div(a grad u) = rhs on the torus with mean(u) = 0.
/// Throws ValidationError for non-SPD coefficients or an incompatible
/// right-hand side, SolverError when PCG stagnates.
SolveResult solve_periodic_elliptic(const GridFunctiond& a, const GridFunctiond& rhs,
                                    const SolverOptions& options = {});
SolveResult solve_periodic_elliptic(const EllipticOperator& op, const Eigen::VectorXd& rhs,
                                    const SolverOptions& options = {});

/// Box problem -div(a grad u) = rhs with u = boundary_values on boundary
/// nodes (interior entries of `boundary_values` are ignored).
SolveResult solve_box_dirichlet(const GridFunctiond& a, const GridFunctiond& rhs,
                                const GridFunctiond& boundary_values, const SolverOptions& options = {});
SolveResult solve_box_dirichlet(const EllipticOperator& op, const GridFunctiond& rhs,
                                const GridFunctiond& boundary_values, const SolverOptions& options = {});

}  // namespace reiterate
