#pragma once

#include "reiterate/types.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace reiterate {

using Index = std::int64_t;

enum class Topology : std::uint8_t { periodic = 0, box = 1 };

/// Uniform structured grid in dimension 1 or 2.
///
/// A periodic grid is the unit torus: axis k stores `n_k` nodes at
/// `i * h_k`, `h_k = 1 / n_k`, and node `n_k` is identified with node 0.
/// A box grid covers `[lower, upper]` with `n_k` cells per axis and stores
/// `n_k + 1` nodes including both endpoints. In both cases
/// `spacing(k) * cells(k) == extent(k)`.
///
/// Nodes are numbered row-major over `[axis0][axis1]` (axis 1 fastest).
class Grid {
public:
  static Grid periodic(int dim, int nodes_per_axis);
  static Grid periodic(const std::vector<int>& nodes_per_axis);
  static Grid box(const Point& lower, const Point& upper, int cells_per_axis);
  static Grid box(const Point& lower, const Point& upper, const std::vector<int>& cells);

  int dim() const { return dim_; }
  Topology topology() const { return topology_; }
  bool is_periodic() const { return topology_ == Topology::periodic; }

  int cells(int axis) const { return cells_[axis]; }
  int nodes(int axis) const { return is_periodic() ? cells_[axis] : cells_[axis] + 1; }
  Index node_count() const;
  double spacing(int axis) const { return (upper_[axis] - lower_[axis]) / cells_[axis]; }
  double extent(int axis) const { return upper_[axis] - lower_[axis]; }
  double cell_volume() const;
  const Point& lower() const { return lower_; }
  const Point& upper() const { return upper_; }

  std::array<int, 2> multi_index(Index node) const {
    if (dim_ == 1) return {static_cast<int>(node), 0};
    const int n1 = nodes(1);
    return {static_cast<int>(node / n1), static_cast<int>(node % n1)};
  }
  Index flat(int i0, int i1 = 0) const {
    return dim_ == 1 ? Index(i0) : Index(i0) * nodes(1) + i1;
  }
  Point coord(Index node) const;

  /// Neighbour along `axis` at `offset` steps; wraps on periodic grids and
  /// returns -1 when it leaves a box.
  Index neighbor(Index node, int axis, int offset) const;
  bool on_boundary(Index node) const;

  /// Exact distance to the boundary of a box (min over faces).
  double distance_to_boundary(const Point& x) const;

  /// Trapezoid weights on boxes, uniform cell volume on tori.
  double quadrature_weight(Index node) const;

  bool operator==(const Grid& other) const;
  bool operator!=(const Grid& other) const { return !(*this == other); }

private:
  Grid() = default;
  int dim_ = 1;
  Topology topology_ = Topology::periodic;
  std::array<int, 2> cells_{1, 1};
  Point lower_;
  Point upper_;
};

enum class Shape : std::uint8_t { scalar = 1, vector = 2, matrix = 3 };

inline int component_count(Shape shape, int dim) {
  switch (shape) {
    case Shape::scalar: return 1;
    case Shape::vector: return dim;
    case Shape::matrix: return dim * dim;
  }
  return 1;
}

/// Scalar, vector or matrix values on every node of a grid. Storage is one
/// contiguous column per component.
template <typename Scalar = double>
class GridFunction {
public:
  using Values = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  GridFunction(Grid grid, Shape shape)
      : grid_(std::move(grid)), shape_(shape),
        values_(Values::Zero(grid_.node_count(), component_count(shape, grid_.dim()))) {}

  GridFunction(Grid grid, Shape shape, Values values)
      : grid_(std::move(grid)), shape_(shape), values_(std::move(values)) {
    if (values_.rows() != grid_.node_count() ||
        values_.cols() != component_count(shape_, grid_.dim()))
      throw ValidationError("GridFunction: value count does not match node count x components");
  }

  template <typename F>
  static GridFunction scalar(const Grid& grid, F&& f) {
    GridFunction out(grid, Shape::scalar);
    for (Index k = 0; k < grid.node_count(); ++k) out.values_(k, 0) = f(grid.coord(k));
    return out;
  }

  template <typename F>
  static GridFunction matrix(const Grid& grid, F&& f) {
    GridFunction out(grid, Shape::matrix);
    for (Index k = 0; k < grid.node_count(); ++k) out.set_tensor(k, f(grid.coord(k)));
    return out;
  }

  const Grid& grid() const { return grid_; }
  Shape shape() const { return shape_; }
  int dim() const { return grid_.dim(); }
  int components() const { return static_cast<int>(values_.cols()); }
  Index size() const { return values_.rows(); }

  const Values& values() const { return values_; }
  Values& values() { return values_; }

  auto component(int k) const { return values_.col(k); }
  auto component(int k) { return values_.col(k); }
  auto component(int i, int j) const { return values_.col(i * dim() + j); }
  auto component(int i, int j) { return values_.col(i * dim() + j); }

  Scalar operator()(Index node) const { return values_(node, 0); }
  Scalar& operator()(Index node) { return values_(node, 0); }

  Tensor tensor(Index node) const {
    const int d = dim();
    Tensor t(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) t(i, j) = values_(node, i * d + j);
    return t;
  }
  void set_tensor(Index node, const Tensor& t) {
    const int d = dim();
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) values_(node, i * d + j) = t(i, j);
  }
  Point vector(Index node) const {
    Point p(components());
    for (int i = 0; i < components(); ++i) p[i] = values_(node, i);
    return p;
  }

  /// Single component viewed as its own scalar function.
  GridFunction scalar_component(int k) const {
    return GridFunction(grid_, Shape::scalar, values_.col(k));
  }

private:
  Grid grid_;
  Shape shape_;
  Values values_;
};

using GridFunctiond = GridFunction<double>;

namespace detail {

// Centered difference of column `col` along `axis` at `node`; second-order
// one-sided stencils at box faces.
template <typename Scalar>
Scalar axis_derivative(const GridFunction<Scalar>& f, int col, Index node, int axis) {
  const Grid& g = f.grid();
  const double h = g.spacing(axis);
  const auto& v = f.values();
  const Index prev = g.neighbor(node, axis, -1);
  const Index next = g.neighbor(node, axis, +1);
  if (prev >= 0 && next >= 0) return (v(next, col) - v(prev, col)) / (2.0 * h);
  if (prev < 0) {
    const Index next2 = g.neighbor(node, axis, +2);
    return (-3.0 * v(node, col) + 4.0 * v(next, col) - v(next2, col)) / (2.0 * h);
  }
  const Index prev2 = g.neighbor(node, axis, -2);
  return (3.0 * v(node, col) - 4.0 * v(prev, col) + v(prev2, col)) / (2.0 * h);
}

}  // namespace detail

/// Discrete gradient of a scalar function: centered differences, one-sided
/// second-order stencils on box boundaries.
template <typename Scalar>
GridFunction<Scalar> gradient(const GridFunction<Scalar>& f) {
  if (f.shape() != Shape::scalar) throw ValidationError("gradient: input must be scalar-valued");
  const Grid& g = f.grid();
  GridFunction<Scalar> out(g, Shape::vector);
  for (Index k = 0; k < g.node_count(); ++k)
    for (int a = 0; a < g.dim(); ++a) out.values()(k, a) = detail::axis_derivative(f, 0, k, a);
  return out;
}

/// Discrete divergence with the same stencils as `gradient`. On periodic
/// grids it is exactly minus the adjoint of `gradient`.
template <typename Scalar>
GridFunction<Scalar> divergence(const GridFunction<Scalar>& v) {
  if (v.shape() != Shape::vector) throw ValidationError("divergence: input must be vector-valued");
  const Grid& g = v.grid();
  GridFunction<Scalar> out(g, Shape::scalar);
  for (Index k = 0; k < g.node_count(); ++k) {
    Scalar s = 0;
    for (int a = 0; a < g.dim(); ++a) s += detail::axis_derivative(v, a, k, a);
    out.values()(k, 0) = s;
  }
  return out;
}

/// Row divergence of a matrix field, `(div B)_j = sum_i d_i b_ij`.
template <typename Scalar>
GridFunction<Scalar> row_divergence(const GridFunction<Scalar>& b) {
  if (b.shape() != Shape::matrix) throw ValidationError("row_divergence: input must be matrix-valued");
  const Grid& g = b.grid();
  const int d = g.dim();
  GridFunction<Scalar> out(g, Shape::vector);
  for (Index k = 0; k < g.node_count(); ++k)
    for (int j = 0; j < d; ++j) {
      Scalar s = 0;
      for (int i = 0; i < d; ++i) s += detail::axis_derivative(b, i * d + j, k, i);
      out.values()(k, j) = s;
    }
  return out;
}

/// Arithmetic node average per component.
template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> mean(const GridFunction<Scalar>& f) {
  return f.values().colwise().mean().transpose();
}

/// Discrete inner product summed over nodes and components, weighted by the
/// cell volume.
template <typename Scalar>
Scalar inner(const GridFunction<Scalar>& f, const GridFunction<Scalar>& g) {
  if (f.grid() != g.grid() || f.components() != g.components())
    throw ValidationError("inner: shape mismatch");
  return (f.values() * g.values()).sum() * f.grid().cell_volume();
}

/// Quadrature L2 norm (Euclidean over components), optionally restricted to a
/// node mask.
template <typename Scalar>
double l2_norm(const GridFunction<Scalar>& f, const std::vector<bool>* mask = nullptr) {
  const Grid& g = f.grid();
  double s = 0.0;
  for (Index k = 0; k < g.node_count(); ++k) {
    if (mask && !(*mask)[k]) continue;
    s += g.quadrature_weight(k) * f.values().row(k).square().sum();
  }
  return std::sqrt(s);
}

/// L2 norm of the gradient assembled from face differences, which are the
/// natural fluxes of the elliptic stencil. Scalar input only.
double face_gradient_norm(const GridFunctiond& f);

/// Node indices whose coordinates lie in the closed ball B(center, r);
/// distances wrap on periodic grids.
std::vector<Index> nodes_in_ball(const Grid& grid, const Point& center, double r);

/// Node indices inside the closed axis-aligned box [lo, hi].
std::vector<Index> nodes_in_box(const Grid& grid, const Point& lo, const Point& hi);

/// \f$(\sum_{B} |f|^p / \#B)^{1/p}\f$ over nodes in the ball, with |.| the
/// Euclidean norm over components. Throws when the ball holds fewer than 8
/// nodes.
template <typename Scalar>
double ball_average(const GridFunction<Scalar>& f, const Point& center, double r, double p) {
  const auto nodes = nodes_in_ball(f.grid(), center, r);
  if (nodes.size() < 8)
    throw ValidationError("ball_average: ball of radius " + std::to_string(r) +
                          " holds fewer than 8 nodes; refine the grid");
  double s = 0.0;
  for (Index k : nodes) s += std::pow(std::sqrt(double(f.values().row(k).square().sum())), p);
  return std::pow(s / double(nodes.size()), 1.0 / p);
}

/// Same average over an explicit node set.
template <typename Scalar>
double set_average(const GridFunction<Scalar>& f, const std::vector<Index>& nodes, double p) {
  if (nodes.size() < 8)
    throw ValidationError("set_average: region holds fewer than 8 nodes; refine the grid");
  double s = 0.0;
  for (Index k : nodes) s += std::pow(std::sqrt(double(f.values().row(k).square().sum())), p);
  return std::pow(s / double(nodes.size()), 1.0 / p);
}

/// Multilinear interpolation of column `col` at an arbitrary point; periodic
/// grids wrap, boxes clamp to the domain.
double interpolate(const GridFunctiond& f, int col, const Point& x);

}  // namespace reiterate
