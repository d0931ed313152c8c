#pragma once

#include "reiterate/grid.hpp"

#include <functional>
#include <vector>

namespace reiterate {

/// Radial bump exp(-1/(1 - |2t|^2)) on |t| < 1/2, tabulated at `radial_nodes`
/// points and interpolated linearly. Discrete weights are renormalized to
/// unit mass on every grid they are laid on.
class Mollifier {
public:
  explicit Mollifier(int radial_nodes = 64);

  /// Tabulated profile at radius |t| (unit kernel, support radius 1/2).
  double profile(double t) const;

  struct Stencil {
    std::vector<std::array<int, 2>> offsets;  // node offsets per axis
    std::vector<double> weights;              // nonnegative, sum 1
  };
  /// Weights of phi_eps at node offsets of `grid`. Requires eps/2 >= 4h on
  /// every axis.
  Stencil stencil(const Grid& grid, double eps) const;

private:
  std::vector<double> table_;
};

/// g(z, y): slow argument z, fast argument y (period 1).
using TwoScaleSampler = std::function<double(const Point& z, const Point& y)>;

/// Same, with the slow argument given as a grid node (after reflection).
using NodeSampler = std::function<double(Index z_node, const Point& y)>;

/// S_eps(g)(x) = sum_z w(z - x) g(z, x/eps) over the kernel support. On box
/// grids nodes outside the box are reflected evenly across the boundary; on
/// periodic grids they wrap.
GridFunctiond smooth(const TwoScaleSampler& g, double eps, const Grid& grid, const Mollifier& m = Mollifier());
GridFunctiond smooth_nodes(const NodeSampler& g, double eps, const Grid& grid, const Mollifier& m = Mollifier());

/// ||S_eps(h^eps f)|| / (||f|| sup_x (mean_y |h(x, y)|^2)^{1/2}).
double measure_bound_L2(const TwoScaleSampler& h, const GridFunctiond& f, double eps, const Mollifier& m = Mollifier());

/// ||h^eps f - S_eps(h^eps f)|| / (eps (||grad_x h||_inf ||f|| + ||h||_inf ||grad f||)),
/// with the sup norms of h sampled. Returns 0 when the left side is at
/// round-off relative to sup|h| ||f||.
double measure_commutator(const TwoScaleSampler& h, const GridFunctiond& f, double eps,
                          const Mollifier& m = Mollifier());

}  // namespace reiterate
