#include "reiterate/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace reiterate {

namespace {

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

}  // namespace

EllipticOperator::EllipticOperator(const GridFunctiond& a) : grid_(a.grid()) {
  if (a.shape() != Shape::matrix) throw ValidationError("elliptic operator: coefficient must be matrix-valued");
  const Grid& g = grid_;
  const int d = g.dim();
  const Index n = g.node_count();
  for (Index k = 0; k < n; ++k) {
    const Tensor t = a.tensor(k);
    if (!t.allFinite()) throw ValidationError("elliptic operator: non-finite coefficient");
    if (d == 2) {
      const double scale = std::max(std::abs(t(0, 0)), std::abs(t(1, 1)));
      if (std::abs(t(0, 1) - t(1, 0)) > 1e-12 * scale)
        throw ValidationError("elliptic operator: coefficient is not symmetric");
      if (t(0, 1) != 0.0) has_offdiag_ = true;
    }
    if (eigen_range(t).first <= 0.0)
      throw ValidationError("elliptic operator: coefficient is not positive definite at node " + std::to_string(k));
  }
  for (int ax = 0; ax < d; ++ax) {
    face_[ax].assign(n, 0.0);
    for (Index k = 0; k < n; ++k) {
      const Index m = g.neighbor(k, ax, +1);
      if (m < 0) continue;
      face_[ax][k] = harmonic(a.values()(k, ax * d + ax), a.values()(m, ax * d + ax));
    }
  }
  if (has_offdiag_) {
    cell_.assign(n, 0.0);
    for (Index k = 0; k < n; ++k) {
      if (!cell_exists(k)) continue;
      const Index k10 = g.neighbor(k, 0, 1), k01 = g.neighbor(k, 1, 1), k11 = g.neighbor(k10, 1, 1);
      cell_[k] = 0.25 * (a.values()(k, 1) + a.values()(k10, 1) + a.values()(k01, 1) + a.values()(k11, 1));
    }
    // Face coefficients must dominate the adjacent cell off-diagonals for
    // the discrete energy to stay coercive.
    for (int ax = 0; ax < 2; ++ax) {
      const int other = 1 - ax;
      for (Index k = 0; k < n; ++k) {
        if (!face_exists(k, ax)) continue;
        double c_sum = 0.0;
        if (cell_exists(k)) c_sum += std::abs(cell_[k]);
        const Index below = g.neighbor(k, other, -1);
        if (below >= 0 && cell_exists(below)) c_sum += std::abs(cell_[below]);
        if (!(face_[ax][k] > 0.5 * c_sum))
          throw ValidationError(
              "elliptic operator: off-diagonal coefficient too large for the flux stencil "
              "(face coefficient must exceed the mean adjacent |a12|)");
      }
    }
  }

  diag_ = Eigen::VectorXd::Zero(n);
  for (int ax = 0; ax < d; ++ax) {
    const double h2 = g.spacing(ax) * g.spacing(ax);
    for (Index k = 0; k < n; ++k) {
      if (!face_exists(k, ax)) continue;
      const Index m = g.neighbor(k, ax, +1);
      diag_[k] += face_[ax][k] / h2;
      diag_[m] += face_[ax][k] / h2;
    }
  }
  if (has_offdiag_) {
    const double w = 1.0 / (2.0 * g.spacing(0) * g.spacing(1));
    for (Index k = 0; k < n; ++k) {
      if (!cell_exists(k)) continue;
      const Index k10 = g.neighbor(k, 0, 1), k01 = g.neighbor(k, 1, 1), k11 = g.neighbor(k10, 1, 1);
      diag_[k] += cell_[k] * w;
      diag_[k11] += cell_[k] * w;
      diag_[k10] -= cell_[k] * w;
      diag_[k01] -= cell_[k] * w;
    }
  }
}

bool EllipticOperator::face_exists(Index node, int axis) const {
  return grid_.neighbor(node, axis, +1) >= 0;
}

bool EllipticOperator::cell_exists(Index node) const {
  if (grid_.dim() < 2) return false;
  return grid_.neighbor(node, 0, 1) >= 0 && grid_.neighbor(node, 1, 1) >= 0;
}

void EllipticOperator::apply_affine(const Eigen::VectorXd& u, const Point& e, Eigen::VectorXd& out) const {
  const Grid& g = grid_;
  const int d = g.dim();
  const Index n = g.node_count();
  out.setZero(n);
  if (d == 1) {
    const double h = g.spacing(0);
    const auto& f = face_[0];
    const Index last = g.is_periodic() ? n : n - 1;
    for (Index k = 0; k < last; ++k) {
      const Index m = (k + 1 == n) ? 0 : k + 1;
      const double q = f[k] * ((u[m] - u[k]) / h + e[0]) / h;
      out[k] -= q;
      out[m] += q;
    }
    return;
  }
  const int n0 = g.nodes(0), n1 = g.nodes(1);
  const double hx = g.spacing(0), hy = g.spacing(1);
  const bool per = g.is_periodic();
  const int last0 = per ? n0 : n0 - 1;
  const int last1 = per ? n1 : n1 - 1;
  // x faces
  for (int i0 = 0; i0 < last0; ++i0) {
    const int j0 = (i0 + 1 == n0) ? 0 : i0 + 1;
    const Index row = Index(i0) * n1, nrow = Index(j0) * n1;
    for (int i1 = 0; i1 < n1; ++i1) {
      const Index k = row + i1, m = nrow + i1;
      const double q = face_[0][k] * ((u[m] - u[k]) / hx + e[0]) / hx;
      out[k] -= q;
      out[m] += q;
    }
  }
  // y faces
  for (int i0 = 0; i0 < n0; ++i0) {
    const Index row = Index(i0) * n1;
    for (int i1 = 0; i1 < last1; ++i1) {
      const Index k = row + i1, m = row + ((i1 + 1 == n1) ? 0 : i1 + 1);
      const double q = face_[1][k] * ((u[m] - u[k]) / hy + e[1]) / hy;
      out[k] -= q;
      out[m] += q;
    }
  }
  if (!has_offdiag_) return;
  for (int i0 = 0; i0 < last0; ++i0) {
    const int j0 = (i0 + 1 == n0) ? 0 : i0 + 1;
    for (int i1 = 0; i1 < last1; ++i1) {
      const int j1 = (i1 + 1 == n1) ? 0 : i1 + 1;
      const Index k00 = Index(i0) * n1 + i1, k10 = Index(j0) * n1 + i1;
      const Index k01 = Index(i0) * n1 + j1, k11 = Index(j0) * n1 + j1;
      const double c = cell_[k00];
      const double gx = (u[k10] + u[k11] - u[k00] - u[k01]) / (2.0 * hx) + e[0];
      const double gy = (u[k01] + u[k11] - u[k00] - u[k10]) / (2.0 * hy) + e[1];
      const double cx = c * gy / (2.0 * hx), cy = c * gx / (2.0 * hy);
      out[k00] += -cx - cy;
      out[k10] += cx - cy;
      out[k01] += -cx + cy;
      out[k11] += cx + cy;
    }
  }
}

void EllipticOperator::apply(const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
  apply_affine(u, Point::Zero(grid_.dim()), out);
}

Point EllipticOperator::mean_flux(const Eigen::VectorXd& u, const Point& e) const {
  if (!grid_.is_periodic()) throw ValidationError("mean_flux: periodic grids only");
  const GridFunctiond flux = nodal_flux(u, e);
  return mean(flux).matrix();
}

GridFunctiond EllipticOperator::nodal_flux(const Eigen::VectorXd& u, const Point& e) const {
  if (!grid_.is_periodic()) throw ValidationError("nodal_flux: periodic grids only");
  const Grid& g = grid_;
  const int d = g.dim();
  const Index n = g.node_count();
  GridFunctiond out(g, Shape::vector);
  for (int ax = 0; ax < d; ++ax) {
    const double h = g.spacing(ax);
    for (Index k = 0; k < n; ++k) {
      const Index m = g.neighbor(k, ax, +1);
      const double q = face_[ax][k] * ((u[m] - u[k]) / h + e[ax]);
      out.values()(k, ax) += 0.5 * q;
      out.values()(m, ax) += 0.5 * q;
    }
  }
  if (has_offdiag_) {
    for (Index k = 0; k < n; ++k) {
      const Index k10 = g.neighbor(k, 0, 1), k01 = g.neighbor(k, 1, 1), k11 = g.neighbor(k10, 1, 1);
      const double c = cell_[k];
      const double gx = (u[k10] + u[k11] - u[k] - u[k01]) / (2.0 * g.spacing(0)) + e[0];
      const double gy = (u[k01] + u[k11] - u[k] - u[k10]) / (2.0 * g.spacing(1)) + e[1];
      for (Index corner : {k, k10, k01, k11}) {
        out.values()(corner, 0) += 0.25 * c * gy;
        out.values()(corner, 1) += 0.25 * c * gx;
      }
    }
  }
  return out;
}

double EllipticOperator::energy(const Eigen::VectorXd& v) const {
  Eigen::VectorXd lv;
  apply(v, lv);
  return v.dot(lv) * grid_.cell_volume();
}

namespace {

void project_mean(Eigen::VectorXd& v) { v.array() -= v.mean(); }

std::string history_summary(const std::vector<double>& hist) {
  std::ostringstream s;
  s << "residual history (relative, every 100th):";
  for (std::size_t i = 0; i < hist.size(); i += 100) s << ' ' << hist[i];
  if (!hist.empty()) s << " ... " << hist.back();
  return s.str();
}

// Jacobi-preconditioned CG. `free` marks unknown entries (nullptr: all);
// `periodic` projects constants out of every residual and search direction.
SolveReport pcg(const EllipticOperator& op, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                const std::vector<char>* free, bool periodic, const SolverOptions& opt) {
  const Index n = b.size();
  SolveReport rep;
  Eigen::VectorXd inv_diag = op.diagonal().cwiseInverse();
  if (free)
    for (Index k = 0; k < n; ++k)
      if (!(*free)[k]) inv_diag[k] = 0.0;
  auto mask = [&](Eigen::VectorXd& v) {
    if (free)
      for (Index k = 0; k < n; ++k)
        if (!(*free)[k]) v[k] = 0.0;
  };
  const double bnorm = b.norm();
  x.setZero(n);
  if (bnorm == 0.0) return rep;
  Eigen::VectorXd r = b, z(n), p(n), q(n);
  auto precondition = [&]() {
    z = inv_diag.cwiseProduct(r);
    if (periodic) project_mean(z);
  };
  precondition();
  p = z;
  double rz = r.dot(z);
  double rel = 1.0;
  rep.residual_history.push_back(rel);
  for (int it = 1; it <= opt.max_iterations; ++it) {
    op.apply(p, q);
    mask(q);
    if (periodic) project_mean(q);
    const double pq = p.dot(q);
    if (!(pq > 0.0)) break;
    const double alpha = rz / pq;
    x += alpha * p;
    r -= alpha * q;
    rel = r.norm() / bnorm;
    rep.residual_history.push_back(rel);
    rep.iterations = it;
    if (rel <= opt.tol) {
      rep.relative_residual = rel;
      return rep;
    }
    precondition();
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  rep.relative_residual = rel;
  throw SolverError("PCG did not reach tolerance " + std::to_string(opt.tol) + " after " +
                        std::to_string(rep.iterations) + " iterations; " + history_summary(rep.residual_history),
                    rep.residual_history);
}

// Exact 1D periodic solve by integrating the flux: q_k = c - h S_k with
// S the running sum of the right-hand side, c fixed by periodicity of u.
Eigen::VectorXd direct_periodic_1d(const EllipticOperator& op, const Eigen::VectorXd& rhs) {
  const Index n = rhs.size();
  const double h = op.grid().spacing(0);
  const auto& k = op.face_coefficients(0);
  Eigen::VectorXd s(n);
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) s[i] = (acc += rhs[i]);
  double num = 0.0, den = 0.0;
  for (Index i = 0; i < n; ++i) {
    num += s[i] / k[i];
    den += 1.0 / k[i];
  }
  const double c = h * num / den;
  Eigen::VectorXd u(n);
  u[0] = 0.0;
  for (Index i = 0; i + 1 < n; ++i) u[i + 1] = u[i] + h * (c - h * s[i]) / k[i];
  project_mean(u);
  return u;
}

// Exact 1D Dirichlet solve: flux on face i is q_0 - h * sum_{m=1..i} F_m.
Eigen::VectorXd direct_box_1d(const EllipticOperator& op, const Eigen::VectorXd& rhs, double left, double right) {
  const Index nn = rhs.size();
  const Index faces = nn - 1;
  const double h = op.grid().spacing(0);
  const auto& k = op.face_coefficients(0);
  Eigen::VectorXd s(faces);
  double acc = 0.0;
  for (Index i = 0; i < faces; ++i) {
    if (i > 0) acc += rhs[i];
    s[i] = acc;
  }
  double num = right - left, den = 0.0;
  for (Index i = 0; i < faces; ++i) {
    num += h * h * s[i] / k[i];
    den += h / k[i];
  }
  const double q0 = num / den;
  Eigen::VectorXd u(nn);
  u[0] = left;
  for (Index i = 0; i < faces; ++i) u[i + 1] = u[i] + h * (q0 - h * s[i]) / k[i];
  u[nn - 1] = right;
  return u;
}

bool use_direct(const Grid& g, const SolverOptions& opt) {
  if (opt.method == SolverOptions::Method::direct) {
    if (g.dim() != 1) throw ValidationError("direct solve is available in 1D only");
    return true;
  }
  return opt.method == SolverOptions::Method::automatic && g.dim() == 1;
}

}  // namespace

SolveResult solve_periodic_elliptic(const GridFunctiond& a, const GridFunctiond& rhs, const SolverOptions& options) {
  if (!a.grid().is_periodic()) throw ValidationError("solve_periodic_elliptic: grid must be periodic");
  if (rhs.grid() != a.grid() || rhs.shape() != Shape::scalar)
    throw ValidationError("solve_periodic_elliptic: rhs must be scalar on the coefficient grid");
  return solve_periodic_elliptic(EllipticOperator(a), rhs.component(0).matrix(), options);
}

SolveResult solve_periodic_elliptic(const EllipticOperator& op, const Eigen::VectorXd& rhs_in,
                                    const SolverOptions& options) {
  const Grid& g = op.grid();
  if (!g.is_periodic()) throw ValidationError("solve_periodic_elliptic: grid must be periodic");
  const double rms = rhs_in.norm() / std::sqrt(double(rhs_in.size()));
  const double m = rhs_in.mean();
  if (std::abs(m) > options.tol * std::max(rms, 1e-300) && std::abs(m) > 1e-300)
    throw ValidationError("solve_periodic_elliptic: right-hand side has nonzero mean " + std::to_string(m) +
                          " (compatibility condition violated)");
  Eigen::VectorXd rhs = rhs_in;
  project_mean(rhs);

  SolveResult res{GridFunctiond(g, Shape::scalar), {}};
  Eigen::VectorXd u;
  if (use_direct(g, options)) {
    u = rhs.norm() == 0.0 ? Eigen::VectorXd::Zero(rhs.size()) : direct_periodic_1d(op, rhs);
  } else {
    res.report = pcg(op, rhs, u, nullptr, true, options);
    project_mean(u);
  }
  Eigen::VectorXd lu;
  op.apply(u, lu);
  const double bn = rhs.norm();
  res.report.relative_residual = bn > 0 ? (lu - rhs).norm() / bn : (lu - rhs).norm();
  res.solution.component(0) = u.array();
  return res;
}

SolveResult solve_box_dirichlet(const GridFunctiond& a, const GridFunctiond& rhs, const GridFunctiond& bc,
                                const SolverOptions& options) {
  return solve_box_dirichlet(EllipticOperator(a), rhs, bc, options);
}

SolveResult solve_box_dirichlet(const EllipticOperator& op, const GridFunctiond& rhs, const GridFunctiond& bc,
                                const SolverOptions& options) {
  const Grid& g = op.grid();
  if (g.is_periodic()) throw ValidationError("solve_box_dirichlet: grid must be a box");
  if (rhs.grid() != g || bc.grid() != g || rhs.shape() != Shape::scalar || bc.shape() != Shape::scalar)
    throw ValidationError("solve_box_dirichlet: rhs and boundary values must be scalar on the coefficient grid");
  const Index n = g.node_count();
  std::vector<char> free(n, 1);
  Eigen::VectorXd ub = Eigen::VectorXd::Zero(n);
  for (Index k = 0; k < n; ++k)
    if (g.on_boundary(k)) {
      free[k] = 0;
      ub[k] = bc(k);
    }

  SolveResult res{GridFunctiond(g, Shape::scalar), {}};
  Eigen::VectorXd u;
  Eigen::VectorXd b(n);
  {
    Eigen::VectorXd lub;
    op.apply(ub, lub);
    for (Index k = 0; k < n; ++k) b[k] = free[k] ? rhs(k) - lub[k] : 0.0;
  }
  if (use_direct(g, options)) {
    u = direct_box_1d(op, rhs.component(0).matrix(), bc(0), bc(n - 1));
  } else {
    Eigen::VectorXd x;
    res.report = pcg(op, b, x, &free, false, options);
    u = ub + x;
  }
  Eigen::VectorXd lu;
  op.apply(u, lu);
  double rn = 0.0, bn = 0.0;
  for (Index k = 0; k < n; ++k)
    if (free[k]) {
      rn += std::pow(lu[k] - rhs(k), 2);
      bn += std::pow(b[k], 2);
    }
  res.report.relative_residual = bn > 0 ? std::sqrt(rn / bn) : std::sqrt(rn);
  res.solution.component(0) = u.array();
  return res;
}

}  // namespace reiterate
