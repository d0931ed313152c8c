#include "reiterate/dirichlet.hpp"

#include <algorithm>
#include <cmath>

namespace reiterate {

SolveResult solve_with_coefficient(const BVP& bvp, const std::function<Tensor(const Point&)>& a) {
  const Grid g = bvp.grid();
  const GridFunctiond coef = GridFunctiond::matrix(g, a);
  const GridFunctiond rhs = GridFunctiond::scalar(g, bvp.F);
  const GridFunctiond bc = GridFunctiond::scalar(g, bvp.f);
  SolverOptions opt;
  opt.tol = bvp.tol;
  return solve_box_dirichlet(coef, rhs, bc, opt);
}

SolveResult solve_multiscale(const BVP& bvp, const CoefficientField& field, const ScaleLadder& ladder) {
  const Grid g = bvp.grid();
  const double finest = ladder.finest();
  for (int a = 0; a < g.dim(); ++a)
    if (g.spacing(a) > finest / 8.0 * (1.0 + 1e-12)) {
      const int need = static_cast<int>(std::ceil(8.0 * g.extent(a) / finest));
      throw ValidationError("solve_multiscale: spacing " + std::to_string(g.spacing(a)) + " does not resolve eps_n = " +
                            std::to_string(finest) + "; need h <= eps_n/8, i.e. at least " + std::to_string(need) +
                            " cells on axis " + std::to_string(a + 1));
    }
  return solve_with_coefficient(bvp, [&](const Point& x) { return evaluate_multiscale(field, ladder, x); });
}

SolveResult solve_homogenized(const BVP& bvp, const TensorField& effective) {
  if (effective.level() != 0) throw ValidationError("solve_homogenized: expected the level-0 tensor field");
  return solve_with_coefficient(bvp, [&](const Point& x) { return effective(x, nullptr); });
}

Cutoff build_cutoff(const Grid& grid, double eps) {
  if (grid.is_periodic()) throw ValidationError("build_cutoff: box grid required");
  for (int a = 0; a < grid.dim(); ++a)
    if (eps < 8.0 * grid.spacing(a))
      throw ValidationError("build_cutoff: eps = " + std::to_string(eps) + " needs spacing <= eps/8; refine the grid");
  Cutoff c{eps, GridFunctiond::scalar(grid, [&](const Point& x) {
              const double s = (grid.distance_to_boundary(x) - 3.0 * eps) / eps;
              if (s <= 0.0) return 0.0;
              if (s >= 1.0) return 1.0;
              return s * s * s * (s * (6.0 * s - 15.0) + 10.0);
            })};
  const GridFunctiond g = gradient(c.eta);
  for (Index k = 0; k < g.size(); ++k) c.measured_gradient = std::max(c.measured_gradient, std::sqrt(g.values().row(k).square().sum()));
  c.measured_gradient *= eps;
  return c;
}

Index BoundaryLayer::count() const { return std::count(mask.begin(), mask.end(), true); }

BoundaryLayer boundary_layer(const Grid& grid, double t) {
  if (grid.is_periodic()) throw ValidationError("boundary_layer: box grid required");
  BoundaryLayer b;
  b.t = t;
  b.mask.resize(grid.node_count());
  for (Index k = 0; k < grid.node_count(); ++k) b.mask[k] = grid.distance_to_boundary(grid.coord(k)) < t;
  return b;
}

TwoScaleApproximant two_scale_expansion(const GridFunctiond& u_eps, const GridFunctiond& u0,
                                        const CorrectorField& correctors, const ScaleLadder& ladder,
                                        const Mollifier& mollifier) {
  const Grid& g = u_eps.grid();
  if (u0.grid() != g) throw ValidationError("two_scale_expansion: u_eps and u0 live on different grids");
  if (correctors.empty() || correctors.dim() != g.dim())
    throw ValidationError("two_scale_expansion: correctors missing or of the wrong dimension");
  const int d = g.dim();
  const int n = ladder.size();
  const double eps = ladder.finest();

  TwoScaleApproximant out{eps, u_eps, u0, GridFunctiond(g, Shape::scalar), GridFunctiond(g, Shape::scalar), {}};
  const Cutoff cut = build_cutoff(g, eps);
  const GridFunctiond grad_u0 = gradient(u0);

  for (int j = 0; j < d; ++j) {
    const GridFunctiond part = smooth_nodes(
        [&](Index z, const Point& y) {
          const double weight = cut.eta(z) * grad_u0.values()(z, j);
          if (weight == 0.0) return 0.0;
          const Point x = g.coord(z);
          Point slow[kMaxScales];
          for (int k = 0; k + 1 < n; ++k) slow[k] = x / ladder.eps(k + 1);
          return weight * correctors(j, x, slow, y);
        },
        eps, g, mollifier);
    out.correction.component(0) += eps * part.component(0);
  }
  out.w.component(0) = u_eps.component(0) - u0.component(0) - out.correction.component(0);

  NormReport& r = out.norms;
  r.w_L2 = l2_norm(out.w);
  const double gw = face_gradient_norm(out.w);
  r.w_H1 = std::sqrt(r.w_L2 * r.w_L2 + gw * gw);
  GridFunctiond diff(g, Shape::scalar);
  diff.component(0) = u_eps.component(0) - u0.component(0);
  r.diff_L2 = l2_norm(diff);
  r.grad_u0 = l2_norm(grad_u0);
  const BoundaryLayer layer4 = boundary_layer(g, 4.0 * eps);
  r.grad_u0_layer = l2_norm(grad_u0, &layer4.mask);
  const BoundaryLayer layer3 = boundary_layer(g, 3.0 * eps);
  std::vector<bool> interior(layer3.mask.size());
  for (std::size_t k = 0; k < interior.size(); ++k) interior[k] = !layer3.mask[k];
  GridFunctiond hess(g, Shape::matrix);
  for (int j = 0; j < d; ++j) {
    const GridFunctiond gj = gradient(grad_u0.scalar_component(j));
    for (int i = 0; i < d; ++i) hess.component(i, j) = gj.component(i);
  }
  r.hess_u0_interior = l2_norm(hess, &interior);
  return out;
}

}  // namespace reiterate
