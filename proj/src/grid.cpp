#include "reiterate/grid.hpp"

#include <algorithm>
#include <limits>

namespace reiterate {

Grid Grid::periodic(int dim, int nodes_per_axis) {
  return periodic(std::vector<int>(dim, nodes_per_axis));
}

Grid Grid::periodic(const std::vector<int>& nodes_per_axis) {
  const int d = static_cast<int>(nodes_per_axis.size());
  if (d < 1 || d > 2) throw ValidationError("Grid: dimension must be 1 or 2");
  Grid g;
  g.dim_ = d;
  g.topology_ = Topology::periodic;
  g.lower_ = Point::Zero(d);
  g.upper_ = Point::Ones(d);
  for (int a = 0; a < d; ++a) {
    if (nodes_per_axis[a] < 4) throw ValidationError("Grid: periodic axes need at least 4 nodes");
    g.cells_[a] = nodes_per_axis[a];
  }
  return g;
}

Grid Grid::box(const Point& lower, const Point& upper, int cells_per_axis) {
  return box(lower, upper, std::vector<int>(lower.size(), cells_per_axis));
}

Grid Grid::box(const Point& lower, const Point& upper, const std::vector<int>& cells) {
  const int d = static_cast<int>(lower.size());
  if (d < 1 || d > 2 || upper.size() != d || static_cast<int>(cells.size()) != d)
    throw ValidationError("Grid: box corners and cell counts must share dimension 1 or 2");
  Grid g;
  g.dim_ = d;
  g.topology_ = Topology::box;
  g.lower_ = lower;
  g.upper_ = upper;
  for (int a = 0; a < d; ++a) {
    if (!(upper[a] > lower[a])) throw ValidationError("Grid: box upper corner must exceed lower corner");
    if (cells[a] < 2) throw ValidationError("Grid: box axes need at least 2 cells");
    g.cells_[a] = cells[a];
  }
  return g;
}

Index Grid::node_count() const {
  Index n = 1;
  for (int a = 0; a < dim_; ++a) n *= nodes(a);
  return n;
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dim_; ++a) v *= spacing(a);
  return v;
}

Point Grid::coord(Index node) const {
  const auto idx = multi_index(node);
  Point x(dim_);
  for (int a = 0; a < dim_; ++a) x[a] = lower_[a] + idx[a] * spacing(a);
  return x;
}

Index Grid::neighbor(Index node, int axis, int offset) const {
  auto idx = multi_index(node);
  const int n = nodes(axis);
  int i = idx[axis] + offset;
  if (is_periodic()) {
    i %= n;
    if (i < 0) i += n;
  } else if (i < 0 || i >= n) {
    return -1;
  }
  idx[axis] = i;
  return flat(idx[0], idx[1]);
}

bool Grid::on_boundary(Index node) const {
  if (is_periodic()) return false;
  const auto idx = multi_index(node);
  for (int a = 0; a < dim_; ++a)
    if (idx[a] == 0 || idx[a] == nodes(a) - 1) return true;
  return false;
}

double Grid::distance_to_boundary(const Point& x) const {
  double dist = std::numeric_limits<double>::infinity();
  for (int a = 0; a < dim_; ++a) dist = std::min({dist, x[a] - lower_[a], upper_[a] - x[a]});
  return std::max(dist, 0.0);
}

double Grid::quadrature_weight(Index node) const {
  double w = cell_volume();
  if (is_periodic()) return w;
  const auto idx = multi_index(node);
  for (int a = 0; a < dim_; ++a)
    if (idx[a] == 0 || idx[a] == nodes(a) - 1) w *= 0.5;
  return w;
}

bool Grid::operator==(const Grid& o) const {
  if (dim_ != o.dim_ || topology_ != o.topology_) return false;
  for (int a = 0; a < dim_; ++a)
    if (cells_[a] != o.cells_[a] || lower_[a] != o.lower_[a] || upper_[a] != o.upper_[a]) return false;
  return true;
}

double face_gradient_norm(const GridFunctiond& f) {
  if (f.shape() != Shape::scalar) throw ValidationError("face_gradient_norm: scalar input required");
  const Grid& g = f.grid();
  const int d = g.dim();
  double s = 0.0;
  for (Index k = 0; k < g.node_count(); ++k) {
    for (int a = 0; a < d; ++a) {
      const Index next = g.neighbor(k, a, +1);
      if (next < 0) continue;
      const double du = (f(next) - f(k)) / g.spacing(a);
      // Face weight: h^d, halved along the transverse boundary rows.
      double w = g.cell_volume();
      if (!g.is_periodic()) {
        const auto idx = g.multi_index(k);
        for (int b = 0; b < d; ++b)
          if (b != a && (idx[b] == 0 || idx[b] == g.nodes(b) - 1)) w *= 0.5;
      }
      s += w * du * du;
    }
  }
  return std::sqrt(s);
}

namespace {

void axis_range(const Grid& g, int a, double c, double r, int& lo, int& hi) {
  const double h = g.spacing(a);
  lo = static_cast<int>(std::floor((c - r - g.lower()[a]) / h - 1e-9));
  hi = static_cast<int>(std::ceil((c + r - g.lower()[a]) / h + 1e-9));
  if (!g.is_periodic()) {
    lo = std::max(lo, 0);
    hi = std::min(hi, g.nodes(a) - 1);
  } else if (hi - lo + 1 > g.nodes(a)) {
    lo = 0;
    hi = g.nodes(a) - 1;
  }
}

int wrap(int i, int n) {
  i %= n;
  return i < 0 ? i + n : i;
}

}  // namespace

std::vector<Index> nodes_in_ball(const Grid& g, const Point& center, double r) {
  const int d = g.dim();
  std::array<int, 2> lo{0, 0}, hi{0, 0};
  for (int a = 0; a < d; ++a) axis_range(g, a, center[a], r, lo[a], hi[a]);
  std::vector<Index> out;
  const double r2 = r * r * (1.0 + 1e-12);
  const bool full0 = g.is_periodic() && hi[0] - lo[0] + 1 == g.nodes(0);
  const bool full1 = d == 2 && g.is_periodic() && hi[1] - lo[1] + 1 == g.nodes(1);
  auto periodic_delta = [&](int a, int i, bool full) {
    double dx = g.lower()[a] + i * g.spacing(a) - center[a];
    if (full) dx -= std::round(dx / g.extent(a)) * g.extent(a);
    return dx;
  };
  for (int i0 = lo[0]; i0 <= hi[0]; ++i0) {
    const double dx0 = periodic_delta(0, i0, full0);
    if (d == 1) {
      if (dx0 * dx0 <= r2) out.push_back(g.is_periodic() ? wrap(i0, g.nodes(0)) : i0);
      continue;
    }
    for (int i1 = lo[1]; i1 <= hi[1]; ++i1) {
      const double dx1 = periodic_delta(1, i1, full1);
      if (dx0 * dx0 + dx1 * dx1 > r2) continue;
      const int j0 = g.is_periodic() ? wrap(i0, g.nodes(0)) : i0;
      const int j1 = g.is_periodic() ? wrap(i1, g.nodes(1)) : i1;
      out.push_back(g.flat(j0, j1));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Index> nodes_in_box(const Grid& g, const Point& lo, const Point& hi) {
  std::vector<Index> out;
  const double tol = 1e-9;
  for (Index k = 0; k < g.node_count(); ++k) {
    const Point x = g.coord(k);
    bool inside = true;
    for (int a = 0; a < g.dim(); ++a)
      if (x[a] < lo[a] - tol * g.spacing(a) || x[a] > hi[a] + tol * g.spacing(a)) inside = false;
    if (inside) out.push_back(k);
  }
  return out;
}

double interpolate(const GridFunctiond& f, int col, const Point& x) {
  const Grid& g = f.grid();
  const int d = g.dim();
  std::array<int, 2> i0{0, 0}, i1{0, 0};
  std::array<double, 2> t{0.0, 0.0};
  for (int a = 0; a < d; ++a) {
    const double h = g.spacing(a);
    double s = (x[a] - g.lower()[a]) / h;
    if (g.is_periodic()) {
      const int n = g.nodes(a);
      const double fl = std::floor(s);
      t[a] = s - fl;
      i0[a] = wrap(static_cast<int>(fl), n);
      i1[a] = wrap(i0[a] + 1, n);
    } else {
      s = std::clamp(s, 0.0, double(g.cells(a)));
      int base = std::min(static_cast<int>(std::floor(s)), g.cells(a) - 1);
      t[a] = s - base;
      i0[a] = base;
      i1[a] = base + 1;
    }
  }
  const auto& v = f.values();
  if (d == 1) return (1.0 - t[0]) * v(i0[0], col) + t[0] * v(i1[0], col);
  return (1.0 - t[0]) * ((1.0 - t[1]) * v(g.flat(i0[0], i0[1]), col) + t[1] * v(g.flat(i0[0], i1[1]), col)) +
         t[0] * ((1.0 - t[1]) * v(g.flat(i1[0], i0[1]), col) + t[1] * v(g.flat(i1[0], i1[1]), col));
}

}  // namespace reiterate
