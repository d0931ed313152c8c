#include "reiterate/cell.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace reiterate {

CellProblem::CellProblem(GridFunctiond a, double tolerance, std::vector<double> frozen_args)
    : coefficient(std::move(a)), tol(tolerance), frozen(std::move(frozen_args)) {
  if (!coefficient.grid().is_periodic()) throw ValidationError("cell problem: grid must be periodic");
  if (coefficient.shape() != Shape::matrix) throw ValidationError("cell problem: coefficient must be matrix-valued");
  lambda_min = INFINITY;
  lambda_max = -INFINITY;
  for (Index k = 0; k < coefficient.size(); ++k) {
    const auto [lo, hi] = eigen_range(coefficient.tensor(k));
    lambda_min = std::min(lambda_min, lo);
    lambda_max = std::max(lambda_max, hi);
  }
  if (!(lambda_min > 0.0)) throw ValidationError("cell problem: coefficient is not positive definite on the grid");
}

CorrectorSet solve_corrector(const CellProblem& problem, const SolverOptions& options) {
  const Grid& g = problem.grid();
  const int d = g.dim();
  const EllipticOperator op(problem.coefficient);
  SolverOptions opt = options;
  opt.tol = problem.tol;
  CorrectorSet out;
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(g.node_count()), rhs;
  for (int j = 0; j < d; ++j) {
    Point e = Point::Zero(d);
    e[j] = 1.0;
    op.apply_affine(zero, e, rhs);
    rhs = -rhs;
    SolveResult r = solve_periodic_elliptic(op, rhs, opt);
    out.residuals.push_back(r.report.relative_residual);
    out.iterations.push_back(r.report.iterations);
    const double gn = face_gradient_norm(r.solution);
    out.energy += gn * gn + std::pow(l2_norm(r.solution), 2);
    out.grad_chi.push_back(gradient(r.solution));
    out.chi.push_back(std::move(r.solution));
  }
  const double mu = std::min(problem.lambda_min, 1.0 / problem.lambda_max);
  out.energy_bound = d * (1.0 + 1.0 / (4.0 * std::numbers::pi * std::numbers::pi)) / std::pow(mu, 4);
  return out;
}

EffectiveTensor effective_tensor(const CellProblem& problem, const CorrectorSet& correctors) {
  const int d = problem.dim();
  if (static_cast<int>(correctors.chi.size()) != d || correctors.chi[0].grid() != problem.grid())
    throw ValidationError("effective_tensor: correctors were not solved on this cell problem");
  const EllipticOperator op(problem.coefficient);
  EffectiveTensor out;
  out.value = Tensor(d, d);
  for (int j = 0; j < d; ++j) {
    Point e = Point::Zero(d);
    e[j] = 1.0;
    const Point q = op.mean_flux(correctors.chi[j].component(0).matrix(), e);
    for (int i = 0; i < d; ++i) out.value(i, j) = q[i];
  }
  // Symmetric fields give a symmetric tensor up to solver tolerance.
  out.value = 0.5 * (out.value + out.value.transpose()).eval();
  const auto [lo, hi] = eigen_range(out.value);
  out.lambda_min = lo;
  out.lambda_max = hi;
  const double slack = 1e-8;
  out.in_range = lo >= problem.lambda_min * (1.0 - slack) && hi <= problem.lambda_max * (1.0 + slack);
  return out;
}

FluxMatrix flux_matrix(const CellProblem& problem, const CorrectorSet& correctors, const EffectiveTensor& effective) {
  const Grid& g = problem.grid();
  const int d = g.dim();
  const EllipticOperator op(problem.coefficient);
  FluxMatrix out{GridFunctiond(g, Shape::matrix), 0.0, 0.0};
  for (int j = 0; j < d; ++j) {
    Point e = Point::Zero(d);
    e[j] = 1.0;
    const GridFunctiond q = op.nodal_flux(correctors.chi[j].component(0).matrix(), e);
    for (int i = 0; i < d; ++i) out.B.component(i, j) = q.component(i) - effective.value(i, j);
  }
  const auto m = mean(out.B);
  out.max_abs_mean = m.abs().maxCoeff();
  const GridFunctiond div = row_divergence(out.B);
  for (int j = 0; j < d; ++j) out.divergence_residual = std::max(out.divergence_residual, l2_norm(div.scalar_component(j)));
  return out;
}

FluxData flux_correctors(const GridFunctiond& B, double tol) {
  const Grid& g = B.grid();
  if (!g.is_periodic()) throw ValidationError("flux_correctors: grid must be periodic");
  if (B.shape() != Shape::matrix) throw ValidationError("flux_correctors: B must be matrix-valued");
  const int d = g.dim();
  const double scale = std::max(1.0, B.values().abs().maxCoeff());
  const auto m = mean(B);
  for (int c = 0; c < d * d; ++c)
    if (std::abs(m[c]) > tol * scale)
      throw ValidationError("flux_correctors: b_" + std::to_string(c / d + 1) + std::to_string(c % d + 1) +
                            " has mean " + std::to_string(m[c]) + "; the Poisson problem is incompatible");

  FluxData out{B, {}, {}, 0.0, 0.0};
  const GridFunctiond identity = GridFunctiond::matrix(g, [d](const Point&) { return identity_tensor(d); });
  const EllipticOperator laplace(identity);
  SolverOptions opt;
  opt.tol = 1e-12;
  std::vector<GridFunctiond> grad_f;
  for (int c = 0; c < d * d; ++c) {
    Eigen::VectorXd rhs = -B.component(c).matrix();
    rhs.array() -= rhs.mean();
    SolveResult r = solve_periodic_elliptic(laplace, rhs, opt);
    grad_f.push_back(gradient(r.solution));
    out.f.push_back(std::move(r.solution));
  }
  for (int k = 0; k < d; ++k) {
    GridFunctiond phi(g, Shape::matrix);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        phi.component(i, j) = grad_f[i * d + j].component(k) - grad_f[k * d + j].component(i);
    out.max_abs_mean_phi = std::max(out.max_abs_mean_phi, mean(phi).abs().maxCoeff());
    out.phi.push_back(std::move(phi));
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      GridFunctiond res(g, Shape::scalar);
      res.component(0) = -B.component(i, j);
      for (int k = 0; k < d; ++k) {
        const GridFunctiond grad = gradient(out.phi[k].scalar_component(i * d + j));
        res.component(0) += grad.component(k);
      }
      out.reconstruction_residual = std::max(out.reconstruction_residual, l2_norm(res));
    }
  return out;
}

}  // namespace reiterate
