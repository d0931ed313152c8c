#include "reiterate/probes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace reiterate {

LogFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i)
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  LogFit fit;
  fit.points = static_cast<int>(lx.size());
  if (lx.size() < 2) return fit;
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

namespace {

GridFunctiond sample(const Grid& g, const PointFunction& f) { return GridFunctiond::scalar(g, f); }

void require_inside(const Grid& g, const Point& lo, const Point& hi, const std::string& what) {
  for (int a = 0; a < g.dim(); ++a) {
    const double slack = 1e-9 * g.spacing(a);
    if (lo[a] < g.lower()[a] - slack || hi[a] > g.upper()[a] + slack)
      throw ValidationError(what + " leaves the grid on axis " + std::to_string(a + 1));
  }
}

void require_ball_inside(const Grid& g, const Point& c, double r, const std::string& what) {
  if (g.is_periodic()) return;
  require_inside(g, c - Point::Constant(g.dim(), r), c + Point::Constant(g.dim(), r), what);
}

std::vector<Index> ball(const Grid& g, const Point& c, double r) {
  auto nodes = nodes_in_ball(g, c, r);
  if (nodes.size() < 8)
    throw ValidationError("ball of radius " + std::to_string(r) + " holds " + std::to_string(nodes.size()) +
                          " nodes; at least 8 are needed, refine the grid");
  return nodes;
}

// Golden-section minimum of a convex function on [a, b].
template <typename F>
double golden_min(F&& f, double a, double b, double* arg) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
    if (fc <= fd) {
      b = d, d = c, fd = fc;
      c = b - phi * (b - a), fc = f(c);
    } else {
      a = c, c = d, fc = fd;
      d = a + phi * (b - a), fd = f(d);
    }
  }
  double best = 0.5 * (a + b), fbest = f(best);
  for (double e : {0.0, 1.0})
    if (const double fe = f(e); fe < fbest) best = e, fbest = fe;
  *arg = best;
  return fbest;
}

}  // namespace

// ---------------------------------------------------------------- rate sweep

RateReport rate_sweep(const CoefficientField& field, const std::vector<double>& lambda,
                      const std::vector<double>& eps_list, const BVP& bvp, const CascadeResult& cascade,
                      const RateOptions& options) {
  const int d = field.dim();
  if (static_cast<int>(lambda.size()) != field.scales())
    throw ValidationError("rate_sweep: the ladder law has " + std::to_string(lambda.size()) +
                          " exponents but the field has " + std::to_string(field.scales()) + " fast slots");
  const int per = options.cells_per_finest > 0 ? options.cells_per_finest : (d == 1 ? 256 : 16);
  if (per < 8) throw ValidationError("rate_sweep: cells_per_finest must be at least 8");

  RateReport rep;
  rep.lambda = lambda;
  std::vector<double> xs, ys, ws;
  for (double eps : eps_list) {
    const ScaleLadder ladder = ScaleLadder::power_law(eps, lambda);
    BVP b = bvp;
    b.cells.assign(d, 0);
    Index nodes = 1;
    for (int a = 0; a < d; ++a) {
      b.cells[a] = static_cast<int>(std::ceil(per * (bvp.upper[a] - bvp.lower[a]) / ladder.finest() - 1e-9));
      nodes *= b.cells[a] + 1;
    }
    if (nodes > options.max_nodes) {
      rep.warnings.push_back("eps = " + std::to_string(eps) + " dropped: " + std::to_string(nodes) +
                             " nodes exceed the limit of " + std::to_string(options.max_nodes));
      continue;
    }
    const SolveResult ue = solve_multiscale(b, field, ladder);
    const SolveResult u0 = solve_homogenized(b, cascade.effective());
    RateRow row;
    row.eps = eps;
    row.scales = ladder.scales();
    row.rate_expr = ladder.rate_expression();
    row.cells = b.cells;
    row.iterations = ue.report.iterations + u0.report.iterations;
    GridFunctiond diff = ue.solution;
    diff.values() -= u0.solution.values();
    row.l2_error = l2_norm(diff);
    if (options.two_scale) row.norms = two_scale_expansion(ue.solution, u0.solution, cascade.finest, ladder).norms;
    xs.push_back(row.rate_expr);
    ys.push_back(row.l2_error);
    ws.push_back(row.norms.w_H1);
    row.slope_so_far = fit_power_law(xs, ys).slope;
    rep.rows.push_back(std::move(row));
  }
  rep.fit = fit_power_law(xs, ys);
  if (options.two_scale) rep.w_h1_fit = fit_power_law(xs, ws);
  return rep;
}

// ------------------------------------------------------- interior approximation

ApproxReport approximate_by_homogenized(const GridFunctiond& u_eps, const TensorField& effective,
                                        const PointFunction& F, const Point& center, double r, double eps1,
                                        double rho, double tol) {
  const Grid& g = u_eps.grid();
  const int d = g.dim();
  if (g.is_periodic()) throw ValidationError("approximate_by_homogenized: box grid required");
  if (eps1 > r) throw ValidationError("approximate_by_homogenized: eps_1 must not exceed r");
  require_ball_inside(g, center, 2.0 * r, "approximate_by_homogenized: B_2r");

  // Subgrid of the concentric box of half-width 3r/2, aligned with nodes.
  std::array<int, 2> first{0, 0};
  std::vector<int> cells(d);
  Point lo(d), hi(d);
  for (int a = 0; a < d; ++a) {
    const double h = g.spacing(a);
    const double i0 = (center[a] - 1.5 * r - g.lower()[a]) / h;
    const double i1 = (center[a] + 1.5 * r - g.lower()[a]) / h;
    if (std::abs(i0 - std::round(i0)) > 1e-6 || std::abs(i1 - std::round(i1)) > 1e-6)
      throw ValidationError("approximate_by_homogenized: the 3r/2 box does not fall on grid nodes on axis " +
                            std::to_string(a + 1));
    first[a] = static_cast<int>(std::round(i0));
    cells[a] = static_cast<int>(std::round(i1)) - first[a];
    if (cells[a] < 16) throw ValidationError("approximate_by_homogenized: r is under-resolved (fewer than 16 cells)");
    lo[a] = g.lower()[a] + first[a] * h;
    hi[a] = g.lower()[a] + (first[a] + cells[a]) * h;
  }
  const Grid sub = Grid::box(lo, hi, cells);
  auto parent = [&](Index k) {
    const auto mi = sub.multi_index(k);
    return g.flat(mi[0] + first[0], d == 2 ? mi[1] + first[1] : 0);
  };
  GridFunctiond trace(sub, Shape::scalar);
  for (Index k = 0; k < sub.node_count(); ++k) trace(k) = u_eps(parent(k));
  const GridFunctiond coef = GridFunctiond::matrix(sub, [&](const Point& x) { return effective(x, nullptr); });
  SolverOptions opt;
  opt.tol = tol;
  const SolveResult u0 = solve_box_dirichlet(coef, sample(sub, F), trace, opt);

  ApproxReport rep;
  rep.r = r;
  rep.subgrid_nodes = sub.node_count();
  rep.iterations = u0.report.iterations;
  const auto inner_nodes = ball(sub, center, r);
  double s = 0.0;
  for (Index k : inner_nodes) s += std::pow(u_eps(parent(k)) - u0.solution(k), 2);
  rep.discrepancy = std::sqrt(s / inner_nodes.size());

  const auto outer = ball(g, center, 2.0 * r);
  const GridFunctiond Fg = sample(g, F);
  rep.rhs_shape = std::pow(eps1 / r, rho) * (set_average(u_eps, outer, 2.0) + r * r * set_average(Fg, outer, 2.0));
  rep.ratio = rep.rhs_shape > 0.0 ? rep.discrepancy / rep.rhs_shape : (rep.discrepancy > 0.0 ? INFINITY : 0.0);
  return rep;
}

// ---------------------------------------------------------- excess functionals

double excess_exponent(double theta, int d, double p, std::optional<double> alpha) {
  if (!(p > d)) throw ValidationError("excess: p must exceed the dimension");
  if (!(theta > 0.0 && theta <= 1.0)) throw ValidationError("excess: theta must lie in (0, 1]");
  double v = std::min(theta, 1.0 - d / p);
  if (alpha) {
    if (!(*alpha > 0.0 && *alpha < 1.0)) throw ValidationError("excess: alpha must lie in (0, 1)");
    v = std::min(v, *alpha);
  }
  return v;
}

double excess_H(const GridFunctiond& u, const GridFunctiond& F, const std::vector<Index>& nodes, double r,
                double vartheta, double p, AffineFit* fit) {
  const Grid& g = u.grid();
  const int d = g.dim();
  const double n = static_cast<double>(nodes.size());
  double ubar = 0.0;
  Point xbar = Point::Zero(d);
  for (Index k : nodes) ubar += u(k), xbar += g.coord(k);
  ubar /= n;
  xbar /= n;
  Point cov = Point::Zero(d);
  Tensor sig = Tensor::Zero(d, d);
  double var = 0.0;
  for (Index k : nodes) {
    const Point dx = g.coord(k) - xbar;
    const double du = u(k) - ubar;
    var += du * du;
    cov += du * dx;
    sig += dx * dx.transpose();
  }
  var /= n;
  cov /= n;
  sig /= n;
  const Point gstar = sig.ldlt().solve(cov);
  // |u - ubar - s g*.(x - xbar)|^2 averages to var - k (2s - s^2) with k = g*.cov.
  const double kk = gstar.dot(cov);
  const double pen = std::pow(r, 1.0 + vartheta) * gstar.norm();
  auto J = [&](double s) { return std::sqrt(std::max(0.0, var - kk * (2.0 * s - s * s))) + pen * s; };
  double s = 0.0;
  const double best = golden_min(J, 0.0, 1.0, &s);
  if (fit) {
    fit->gradient = s * gstar;
    fit->value = ubar;
    fit->residual = std::sqrt(std::max(0.0, var - kk * (2.0 * s - s * s)));
    fit->scale = s;
  }
  return best / r + r * set_average(F, nodes, p);
}

double excess_Phi(const GridFunctiond& u, const GridFunctiond& F, const std::vector<Index>& nodes, double r) {
  double ubar = 0.0;
  for (Index k : nodes) ubar += u(k);
  ubar /= nodes.size();
  double var = 0.0;
  for (Index k : nodes) var += (u(k) - ubar) * (u(k) - ubar);
  return std::sqrt(var / nodes.size()) / r + r * set_average(F, nodes, 2.0);
}

ExcessReport excess_functionals(const GridFunctiond& u, const PointFunction& F, const Point& center,
                                const std::vector<double>& radii, double p, double theta, const GridFunctiond* u0) {
  const Grid& g = u.grid();
  if (u0 && u0->grid() != g) throw ValidationError("excess_functionals: u0 lives on a different grid");
  ExcessReport rep;
  rep.center = center;
  rep.p = p;
  rep.theta = theta;
  rep.vartheta = excess_exponent(theta, g.dim(), p);
  const GridFunctiond Fg = sample(g, F);
  for (double r : radii) {
    for (int a = 0; a < g.dim(); ++a)
      if (r < 8.0 * g.spacing(a) * (1.0 - 1e-12))
        throw ValidationError("excess_functionals: radius " + std::to_string(r) + " is below 8h");
    require_ball_inside(g, center, r, "excess_functionals: ball");
    const auto nodes = ball(g, center, r);
    ExcessRow row;
    row.r = r;
    row.nodes = static_cast<Index>(nodes.size());
    row.H = excess_H(u, Fg, nodes, r, rep.vartheta, p, &row.fit);
    row.h = row.fit.gradient.norm();
    row.Phi = excess_Phi(u, Fg, nodes, r);
    if (u0) row.G = excess_H(*u0, Fg, nodes, r, rep.vartheta, p);
    rep.rows.push_back(row);
  }
  return rep;
}

std::vector<double> dyadic_radii(double R, double floor, const Grid& grid) {
  double lo = floor;
  for (int a = 0; a < grid.dim(); ++a) lo = std::max(lo, 8.0 * grid.spacing(a));
  std::vector<double> out;
  for (double r = R; r >= lo * (1.0 - 1e-12); r *= 0.5) out.push_back(r);
  return out;
}

// ------------------------------------------------------------ t calibration

CalibrationResult calibrate_t(const std::vector<CalibrationCase>& corpus, double theta, double p) {
  if (corpus.empty()) throw ValidationError("calibrate_t: empty corpus");
  CalibrationResult res;
  res.candidates = {1.0 / 16, 1.0 / 32, 1.0 / 64};
  for (double t : res.candidates) {
    double worst = 0.0;
    std::string where = "none";
    for (const auto& c : corpus) {
      const Grid& g = c.u0.grid();
      const double v = excess_exponent(theta, g.dim(), p);
      const GridFunctiond Fg = sample(g, c.F);
      for (double r : c.radii) {
        const auto small = nodes_in_ball(g, c.center, t * r);
        if (small.size() < 8) continue;
        const double Gr = excess_H(c.u0, Fg, ball(g, c.center, r), r, v, p);
        if (Gr <= 0.0) continue;
        const double q = excess_H(c.u0, Fg, small, t * r, v, p) / Gr;
        if (q > worst) {
          worst = q;
          where = c.name + " at r = " + std::to_string(r);
        }
      }
    }
    res.worst_ratio.push_back(worst);
    res.worst_case.push_back(where);
    if (!res.found && worst <= 0.5) {
      res.found = true;
      res.t = t;
    }
  }
  return res;
}

std::vector<CalibrationCase> default_calibration_corpus(const Point& lower, const Point& upper, const Point& center,
                                                        int cells) {
  const int d = static_cast<int>(lower.size());
  const Grid g = Grid::box(lower, upper, cells);
  double R = std::numeric_limits<double>::infinity();
  for (int a = 0; a < d; ++a) R = std::min({R, center[a] - lower[a], upper[a] - center[a]});
  const std::vector<double> radii = dyadic_radii(R, 0.0, g);
  const PointFunction zero = [](const Point&) { return 0.0; };
  const PointFunction minus_one = [](const Point&) { return -1.0; };
  const PointFunction one = [](const Point&) { return 1.0; };

  std::vector<CalibrationCase> corpus;
  corpus.push_back({"affine", GridFunctiond::scalar(g, [](const Point& x) { return 1.0 + x.sum(); }), zero, center,
                    radii});
  // -div(grad u) = -1 with u = |x - c|^2 / (2d).
  corpus.push_back({"quadratic",
                    GridFunctiond::scalar(g, [&](const Point& x) { return (x - center).squaredNorm() / (2.0 * d); }),
                    minus_one, center, radii});
  BVP b{lower, upper, one, zero, std::vector<int>(d, cells), 1e-12};
  const SolveResult mod = solve_with_coefficient(b, [&](const Point& x) {
    return Tensor((2.0 + 0.5 * std::sin(2.0 * M_PI * x[0])) * Tensor::Identity(d, d));
  });
  corpus.push_back({"slow-modulated", mod.solution, one, center, radii});
  return corpus;
}

// ------------------------------------------------------------ step-down check

std::vector<StepDownRow> step_down_rows(const GridFunctiond& u, const PointFunction& F, const Point& center,
                                        double eps1, const std::vector<double>& radii, double t, double p,
                                        double vartheta) {
  const Grid& g = u.grid();
  const GridFunctiond Fg = sample(g, F);
  std::vector<StepDownRow> rows;
  for (double r : radii) {
    require_ball_inside(g, center, 2.0 * r, "step_down_rows: B_2r");
    StepDownRow row;
    row.eps1 = eps1;
    row.r = r;
    row.H_tr = excess_H(u, Fg, ball(g, center, t * r), t * r, vartheta, p);
    row.H_r = excess_H(u, Fg, ball(g, center, r), r, vartheta, p);
    row.Phi_2r = excess_Phi(u, Fg, ball(g, center, 2.0 * r), 2.0 * r);
    const double gap = std::max(0.0, row.H_tr - 0.5 * row.H_r);
    row.excess = gap > 0.0 ? gap / row.Phi_2r : 0.0;
    rows.push_back(row);
  }
  return rows;
}

StepDownFit fit_step_down(const std::vector<StepDownRow>& rows, double t) {
  StepDownFit fit;
  fit.t = t;
  fit.rows = rows;
  std::map<double, std::vector<const StepDownRow*>> groups;
  for (const auto& r : rows) groups[r.eps1].push_back(&r);

  double sxy = 0.0, sxx = 0.0;
  for (const auto& [e, members] : groups) {
    std::vector<double> lx, ly;
    for (const auto* m : members)
      if (m->excess > 0.0) {
        lx.push_back(std::log(m->eps1 / m->r));
        ly.push_back(std::log(m->excess));
      }
    if (lx.size() < 2) continue;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
    mx /= lx.size();
    my /= lx.size();
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxx += (lx[i] - mx) * (lx[i] - mx);
      sxy += (lx[i] - mx) * (ly[i] - my);
    }
  }
  fit.rho = sxx > 0.0 ? sxy / sxx : 1.0;

  bool any = false;
  for (auto it = groups.rbegin(); it != groups.rend(); ++it) {
    double c = 0.0;
    for (const auto* m : it->second) c = std::max(c, m->excess / std::pow(m->eps1 / m->r, fit.rho));
    any = any || c > 0.0;
    fit.eps1.push_back(it->first);
    fit.C.push_back(c);
  }
  if (!any) {
    fit.stable = true;
  } else {
    const auto [mn, mx] = std::minmax_element(fit.C.begin(), fit.C.end());
    fit.stable = *mx <= 2.0 * *mn;
  }
  return fit;
}

// --------------------------------------------------------------- certificates

Certificate lipschitz_certificate(const GridFunctiond& u, const PointFunction& F, double eps_n, const Point& center,
                                  double R, double p) {
  const Grid& g = u.grid();
  require_ball_inside(g, center, R, "lipschitz_certificate: B_R");
  const GridFunctiond grad = gradient(u);
  const GridFunctiond Fg = sample(g, F);
  const auto big = ball(g, center, R);
  Certificate c;
  c.R = R;
  c.rhs = set_average(grad, big, 2.0) + R * set_average(Fg, big, p);
  for (double r : dyadic_radii(R, eps_n, g)) {
    CertificateRow row;
    row.r = r;
    row.lhs = set_average(grad, ball(g, center, r), 2.0);
    row.ratio = row.lhs == 0.0 ? 0.0 : row.lhs / c.rhs;
    c.value = std::max(c.value, row.ratio);
    c.rows.push_back(row);
  }
  if (c.rows.empty()) throw ValidationError("lipschitz_certificate: no radius in [max(eps_n, 8h), R]");
  return c;
}

double c1alpha_norm(const std::vector<double>& s, const std::vector<double>& f, double R, double alpha) {
  if (s.size() != f.size() || s.empty()) throw ValidationError("c1alpha_norm: sample mismatch");
  double sup = 0.0;
  for (double v : f) sup = std::max(sup, std::abs(v));
  if (s.size() < 3) return sup;
  const std::size_t n = s.size();
  std::vector<double> df(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1, b = i + 1 == n ? n - 1 : i + 1;
    df[i] = (f[b] - f[a]) / (s[b] - s[a]);
  }
  double dsup = 0.0, hold = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dsup = std::max(dsup, std::abs(df[i]));
    for (std::size_t j = i + 1; j < n; ++j)
      hold = std::max(hold, std::abs(df[i] - df[j]) / std::pow(std::abs(s[i] - s[j]), alpha));
  }
  return sup + R * dsup + std::pow(R, 1.0 + alpha) * hold;
}

Certificate boundary_lipschitz_flat(const GridFunctiond& u, const PointFunction& F, const PointFunction& f,
                                    double eps_n, const Point& anchor, double R, double p, double alpha) {
  const Grid& g = u.grid();
  if (g.is_periodic()) throw ValidationError("boundary_lipschitz_flat: box grid required");
  const int d = g.dim();
  const int n_axis = d - 1;
  const double hn = g.spacing(n_axis);
  double sign = 0.0;
  if (std::abs(anchor[n_axis] - g.lower()[n_axis]) < 1e-9 * hn) sign = 1.0;
  else if (std::abs(anchor[n_axis] - g.upper()[n_axis]) < 1e-9 * hn) sign = -1.0;
  else throw ValidationError("boundary_lipschitz_flat: the anchor must lie on the lower or upper x_d face");

  auto cylinder = [&](double r) {
    Point lo = anchor, hi = anchor;
    if (d == 2) lo[0] -= r, hi[0] += r;
    (sign > 0 ? hi : lo)[n_axis] += sign * r;
    require_inside(g, lo, hi, "boundary_lipschitz_flat: Z_r");
    auto nodes = nodes_in_box(g, lo, hi);
    if (nodes.size() < 8) throw ValidationError("boundary_lipschitz_flat: Z_r holds fewer than 8 nodes");
    return nodes;
  };

  const GridFunctiond grad = gradient(u);
  const GridFunctiond Fg = sample(g, F);
  const auto big = cylinder(R);
  std::vector<double> s, fv;
  for (Index k = 0; k < g.node_count(); ++k) {
    const Point x = g.coord(k);
    if (std::abs(x[n_axis] - anchor[n_axis]) > 1e-9 * hn) continue;
    if (d == 2 && std::abs(x[0] - anchor[0]) > R * (1.0 + 1e-12)) continue;
    s.push_back(d == 2 ? x[0] - anchor[0] : 0.0);
    fv.push_back(f(x));
  }
  Certificate c;
  c.R = R;
  c.rhs = set_average(grad, big, 2.0) + c1alpha_norm(s, fv, R, alpha) / R + R * set_average(Fg, big, p);
  for (double r : dyadic_radii(R, eps_n, g)) {
    CertificateRow row;
    row.r = r;
    row.lhs = set_average(grad, cylinder(r), 2.0);
    row.ratio = row.lhs == 0.0 ? 0.0 : row.lhs / c.rhs;
    c.value = std::max(c.value, row.ratio);
    c.rows.push_back(row);
  }
  if (c.rows.empty()) throw ValidationError("boundary_lipschitz_flat: no radius in [max(eps_n, 8h), R]");
  return c;
}

}  // namespace reiterate
