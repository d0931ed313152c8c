#include "reiterate/smoothing.hpp"

#include <algorithm>
#include <cmath>

namespace reiterate {

Mollifier::Mollifier(int radial_nodes) {
  if (radial_nodes < 2) throw ValidationError("Mollifier: at least two radial nodes required");
  table_.resize(radial_nodes);
  for (int i = 0; i < radial_nodes; ++i) {
    const double t = 0.5 * i / (radial_nodes - 1);
    const double s = 1.0 - 4.0 * t * t;
    table_[i] = s > 0.0 ? std::exp(-1.0 / s) : 0.0;
  }
}

double Mollifier::profile(double t) const {
  t = std::abs(t);
  if (t >= 0.5) return 0.0;
  const double u = t / 0.5 * (table_.size() - 1);
  const std::size_t i = std::min(static_cast<std::size_t>(u), table_.size() - 2);
  const double w = u - i;
  return (1.0 - w) * table_[i] + w * table_[i + 1];
}

Mollifier::Stencil Mollifier::stencil(const Grid& grid, double eps) const {
  const int d = grid.dim();
  for (int a = 0; a < d; ++a)
    if (eps / 2.0 < 4.0 * grid.spacing(a))
      throw ValidationError("smoothing: eps = " + std::to_string(eps) + " is too small for spacing " +
                            std::to_string(grid.spacing(a)) + "; need eps >= 8h, refine the grid");
  Stencil st;
  int reach[2] = {0, 0};
  for (int a = 0; a < d; ++a) reach[a] = static_cast<int>(std::ceil(0.5 * eps / grid.spacing(a)));
  double mass = 0.0;
  for (int i = -reach[0]; i <= reach[0]; ++i)
    for (int j = (d == 2 ? -reach[1] : 0); j <= (d == 2 ? reach[1] : 0); ++j) {
      double r2 = std::pow(i * grid.spacing(0), 2);
      if (d == 2) r2 += std::pow(j * grid.spacing(1), 2);
      const double w = profile(std::sqrt(r2) / eps);
      if (w <= 0.0) continue;
      st.offsets.push_back({i, j});
      st.weights.push_back(w);
      mass += w;
    }
  for (auto& w : st.weights) w /= mass;
  return st;
}

namespace {

// Node index reached from `i` by `offset` steps on an axis with `n` stored
// nodes: wrap on tori, even reflection on boxes.
int shift_index(int i, int offset, int n, bool periodic) {
  int k = i + offset;
  if (periodic) {
    k %= n;
    return k < 0 ? k + n : k;
  }
  const int last = n - 1;
  // Reflection about the end nodes; the stencil reach is far below the
  // box width, so one fold suffices.
  if (k < 0) k = -k;
  if (k > last) k = 2 * last - k;
  return std::clamp(k, 0, last);
}

}  // namespace

GridFunctiond smooth_nodes(const NodeSampler& g, double eps, const Grid& grid, const Mollifier& m) {
  const Mollifier::Stencil st = m.stencil(grid, eps);
  const int d = grid.dim();
  const bool per = grid.is_periodic();
  GridFunctiond out(grid, Shape::scalar);
  for (Index node = 0; node < grid.node_count(); ++node) {
    const auto mi = grid.multi_index(node);
    const Point y = grid.coord(node) / eps;
    double s = 0.0;
    for (std::size_t o = 0; o < st.weights.size(); ++o) {
      const int i0 = shift_index(mi[0], st.offsets[o][0], grid.nodes(0), per);
      const int i1 = d == 2 ? shift_index(mi[1], st.offsets[o][1], grid.nodes(1), per) : 0;
      s += st.weights[o] * g(grid.flat(i0, i1), y);
    }
    out(node) = s;
  }
  return out;
}

GridFunctiond smooth(const TwoScaleSampler& g, double eps, const Grid& grid, const Mollifier& m) {
  return smooth_nodes([&](Index z, const Point& y) { return g(grid.coord(z), y); }, eps, grid, m);
}

namespace {

// Grid of fast arguments for sampled means and sups over one period.
std::vector<Point> fast_samples(int d, int per_axis) {
  std::vector<Point> ys;
  for (int i = 0; i < per_axis; ++i)
    for (int j = 0; j < (d == 2 ? per_axis : 1); ++j) {
      Point y(d);
      y[0] = (i + 0.5) / per_axis;
      if (d == 2) y[1] = (j + 0.5) / per_axis;
      ys.push_back(y);
    }
  return ys;
}

}  // namespace

double measure_bound_L2(const TwoScaleSampler& h, const GridFunctiond& f, double eps, const Mollifier& m) {
  const Grid& grid = f.grid();
  const double fn = l2_norm(f);
  if (fn == 0.0) return 0.0;
  const GridFunctiond s = smooth_nodes([&](Index z, const Point& y) { return h(grid.coord(z), y) * f(z); }, eps, grid, m);
  const auto ys = fast_samples(grid.dim(), grid.dim() == 1 ? 256 : 32);
  double sup = 0.0;
  for (Index node = 0; node < grid.node_count(); ++node) {
    const Point x = grid.coord(node);
    double acc = 0.0;
    for (const auto& y : ys) acc += std::pow(h(x, y), 2);
    sup = std::max(sup, std::sqrt(acc / ys.size()));
  }
  if (sup == 0.0) return 0.0;
  return l2_norm(s) / (fn * sup);
}

double measure_commutator(const TwoScaleSampler& h, const GridFunctiond& f, double eps, const Mollifier& m) {
  const Grid& grid = f.grid();
  const int d = grid.dim();
  const GridFunctiond s = smooth_nodes([&](Index z, const Point& y) { return h(grid.coord(z), y) * f(z); }, eps, grid, m);
  GridFunctiond diff(grid, Shape::scalar);
  for (Index node = 0; node < grid.node_count(); ++node) {
    const Point x = grid.coord(node);
    diff(node) = h(x, x / eps) * f(node) - s(node);
  }
  const double lhs = l2_norm(diff);

  const auto ys = fast_samples(d, d == 1 ? 128 : 16);
  const Index stride = std::max<Index>(1, grid.node_count() / 512);
  double hsup = 0.0, gsup = 0.0;
  const double delta = 1e-6;
  for (Index node = 0; node < grid.node_count(); node += stride) {
    const Point x = grid.coord(node);
    for (const auto& y : ys) {
      hsup = std::max(hsup, std::abs(h(x, y)));
      double g2 = 0.0;
      for (int a = 0; a < d; ++a) {
        Point xp = x, xm = x;
        xp[a] += delta;
        xm[a] -= delta;
        g2 += std::pow((h(xp, y) - h(xm, y)) / (2 * delta), 2);
      }
      gsup = std::max(gsup, std::sqrt(g2));
    }
  }
  // round-off of the unit-mass quadrature counts as zero
  const double fn = l2_norm(f);
  if (lhs <= 1e-13 * hsup * fn) return 0.0;
  const double denom = eps * (gsup * fn + hsup * l2_norm(gradient(f)));
  return denom > 0.0 ? lhs / denom : INFINITY;
}

}  // namespace reiterate
