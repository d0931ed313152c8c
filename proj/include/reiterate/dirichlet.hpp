#pragma once

#include "reiterate/cascade.hpp"
#include "reiterate/coeff.hpp"
#include "reiterate/elliptic.hpp"
#include "reiterate/smoothing.hpp"

#include <functional>
#include <vector>

namespace reiterate {

using PointFunction = std::function<double(const Point&)>;

/// -div(A grad u) = F in a box, u = f on its boundary.
struct BVP {
  Point lower;
  Point upper;
  PointFunction F;
  PointFunction f;
  std::vector<int> cells;  // per axis
  double tol = 1e-10;

  Grid grid() const { return Grid::box(lower, upper, cells); }
};

/// Coefficient A(x, x/eps_1, ..., x/eps_n) at the nodes. Rejects grids with
/// h > eps_n / 8, naming the required cell count.
SolveResult solve_multiscale(const BVP& bvp, const CoefficientField& field, const ScaleLadder& ladder);
/// Coefficient Â(x) interpolated from the cascade.
SolveResult solve_homogenized(const BVP& bvp, const TensorField& effective);
SolveResult solve_with_coefficient(const BVP& bvp, const std::function<Tensor(const Point&)>& a);

/// eta = 0 where dist(x, boundary) <= 3 eps, 1 where dist >= 4 eps, quintic
/// smoothstep between, so |grad eta| <= 15/(8 eps).
struct Cutoff {
  double eps = 0.0;
  GridFunctiond eta;
  double gradient_bound = 15.0 / 8.0;  // C in |grad eta| <= C/eps
  double measured_gradient = 0.0;      // eps * max |grad eta| on the grid
};
/// Requires eps >= 8h.
Cutoff build_cutoff(const Grid& grid, double eps);

/// Nodes of {x : dist(x, boundary) < t}.
struct BoundaryLayer {
  double t = 0.0;
  std::vector<bool> mask;
  Index count() const;
};
BoundaryLayer boundary_layer(const Grid& grid, double t);

struct NormReport {
  double w_H1 = 0.0;
  double w_L2 = 0.0;
  double diff_L2 = 0.0;            // ||u_eps - u0||
  double grad_u0_layer = 0.0;      // ||grad u0|| on the 4 eps layer
  double hess_u0_interior = 0.0;   // ||grad^2 u0|| off the 3 eps layer
  double grad_u0 = 0.0;
};

/// w = u_eps - u0 - correction, stored nodewise.
struct TwoScaleApproximant {
  double eps = 0.0;  // finest scale
  GridFunctiond u_eps;
  GridFunctiond u0;
  GridFunctiond correction;
  GridFunctiond w;
  NormReport norms;
};

/// correction = eps_n S_{eps_n}(eta chi^j d_j u0) with the finest corrector
/// evaluated at (x, x/eps_1, ..., x/eps_{n-1}; x/eps_n).
TwoScaleApproximant two_scale_expansion(const GridFunctiond& u_eps, const GridFunctiond& u0,
                                        const CorrectorField& correctors, const ScaleLadder& ladder,
                                        const Mollifier& mollifier = Mollifier());

}  // namespace reiterate
