#include "support.hpp"

#include "reiterate/dirichlet.hpp"

#include <doctest.h>

using namespace testing;

namespace {

BVP unit_load_1d(int cells) { return BVP{pt(0), pt(1), one, zero, {cells}}; }

// u(x) = int_0^x (c - t) / A(t) dt with c fixing u(1) = 0; composite Simpson
// on m panels per grid cell.
std::vector<double> quadrature_oracle(const std::function<double(double)>& A, int cells) {
  const int m = 16;
  const double h = 1.0 / cells;
  auto simpson = [&](const std::function<double(double)>& g, double a, double b) {
    const double dh = (b - a) / (2 * m);
    double s = g(a) + g(b);
    for (int i = 1; i < 2 * m; ++i) s += (i % 2 ? 4 : 2) * g(a + i * dh);
    return s * dh / 3;
  };
  double I0 = 0.0, I1 = 0.0;
  std::vector<double> p0(cells + 1, 0.0), p1(cells + 1, 0.0);
  for (int i = 0; i < cells; ++i) {
    I0 += simpson([&](double t) { return 1 / A(t); }, i * h, (i + 1) * h);
    I1 += simpson([&](double t) { return t / A(t); }, i * h, (i + 1) * h);
    p0[i + 1] = I0;
    p1[i + 1] = I1;
  }
  const double c = I1 / I0;
  std::vector<double> u(cells + 1);
  for (int i = 0; i <= cells; ++i) u[i] = c * p0[i] - p1[i];
  return u;
}

double max_diff(const GridFunctiond& f, const std::vector<double>& u) {
  double e = 0.0;
  for (Index k = 0; k < f.size(); ++k) e = std::max(e, std::abs(f(k) - u[k]));
  return e;
}

}  // namespace

TEST_CASE("identity coefficient with unit load") {
  const auto res = solve_multiscale(unit_load_1d(256), field("constant(1)", 1, 1), ScaleLadder({1.0 / 8}));
  double err = 0.0;
  for (Index k = 0; k < res.solution.size(); ++k) {
    const double x = res.solution.grid().coord(k)[0];
    err = std::max(err, std::abs(res.solution(k) - x * (1 - x) / 2));
  }
  CHECK(err <= 1e-12);
}

TEST_CASE("oscillating 1D coefficient matches the quadrature oracle") {
  const double eps = 1.0 / 8;
  const auto f = field("laminate(2+sin(2*pi*t))", 1, 1);
  std::vector<double> errs;
  for (int cells : {256, 512}) {
    const auto res = solve_multiscale(unit_load_1d(cells), f, ScaleLadder({eps}));
    errs.push_back(max_diff(res.solution, quadrature_oracle([&](double t) { return 2 + std::sin(2 * pi * t / eps); }, cells)));
  }
  CHECK(errs[0] <= 1e-4);
  CHECK(errs[0] / errs[1] >= 3.5);
}

TEST_CASE("affine boundary data gives the affine solution") {
  const BVP b{pt(0, 0), pt(1, 2), zero, [](const Point& x) { return 1 + 2 * x[0] - x[1]; }, {16, 32}};
  const auto res = solve_multiscale(b, field("constant(1)", 2, 1), ScaleLadder({0.5}));
  double err = 0.0;
  for (Index k = 0; k < res.solution.size(); ++k) err = std::max(err, std::abs(res.solution(k) - b.f(b.grid().coord(k))));
  CHECK(err <= 1e-9);
}

TEST_CASE("under-resolved multiscale solves are rejected") {
  const auto f = field("laminate(2+sin(2*pi*t))", 1, 1);
  CHECK_THROWS_AS(solve_multiscale(unit_load_1d(100), f, ScaleLadder({1.0 / 16})), ValidationError);
  CHECK_NOTHROW(solve_multiscale(unit_load_1d(128), f, ScaleLadder({1.0 / 16})));
}

TEST_CASE("homogenized solve with the harmonic mean") {
  CorrectorCache cache;
  const auto cr = homogenize_all(field("laminate(2+sin(2*pi*t))", 1, 1), CascadeConfig{}, cache);
  const auto res = solve_homogenized(unit_load_1d(128), cr.effective());
  double err = 0.0;
  for (Index k = 0; k < res.solution.size(); ++k) {
    const double x = res.solution.grid().coord(k)[0];
    err = std::max(err, std::abs(res.solution(k) - x * (1 - x) / (2 * std::sqrt(3.0))));
  }
  CHECK(err <= 1e-10);
}

TEST_CASE("homogenized solve with a slowly varying tensor") {
  CorrectorCache cache;
  CascadeConfig cfg;
  cfg.x_samples = 64;
  const auto cr = homogenize_all(field("modulated(laminate(2+sin(2*pi*t)),2,1,1)", 1, 1), cfg, cache);
  const int cells = 256;
  const auto res = solve_homogenized(unit_load_1d(cells), cr.effective());
  const auto u = quadrature_oracle([](double t) { return std::sqrt(3.0) * (2 + std::sin(2 * pi * t)); }, cells);
  CHECK(max_diff(res.solution, u) <= 1e-3 * *std::max_element(u.begin(), u.end()));
}

TEST_CASE("comparison principle for nonnegative data") {
  const BVP b{pt(0, 0), pt(1, 1), [](const Point& x) { return x[0] * x[1]; },
              [](const Point& x) { return std::pow(std::sin(3 * x[0]), 2); }, {64, 64}};
  const auto res = solve_multiscale(b, field("checkerboard(1,4,4)", 2, 1), ScaleLadder({0.25}));
  CHECK(res.solution.values().minCoeff() >= -1e-10);
}

TEST_CASE("energy is controlled by the load") {
  const auto f = field("laminate(2+sin(2*pi*t))", 1, 1);
  const auto res = solve_multiscale(unit_load_1d(1024), f, ScaleLadder({1.0 / 16}));
  const auto& u = res.solution;
  const auto F = GridFunctiond::scalar(u.grid(), one);
  const double lhs = f.metadata().lambda_min * std::pow(face_gradient_norm(u), 2);
  CHECK(lhs <= l2_norm(F) * l2_norm(u) * (1 + 1e-8));
}

TEST_CASE("cutoff support and gradient") {
  const Grid g = Grid::box(pt(0, 0), pt(1, 1), 256);
  const double eps = 1.0 / 32;
  const Cutoff c = build_cutoff(g, eps);
  bool support = true;
  for (Index k = 0; k < g.node_count(); ++k) {
    const double dist = g.distance_to_boundary(g.coord(k)), eta = c.eta(k);
    support = support && eta >= 0.0 && eta <= 1.0;
    if (dist <= 3 * eps) support = support && eta == 0.0;
    if (dist >= 4 * eps) support = support && eta == 1.0;
  }
  CHECK(support);
  CHECK(c.measured_gradient <= c.gradient_bound);
  CHECK(c.gradient_bound < 2.0);

  const Cutoff wide = build_cutoff(Grid::box(pt(0), pt(1), 256), 1.0 / 6);
  CHECK(max_abs(wide.eta.values()) == 0.0);
  CHECK_THROWS_AS(build_cutoff(Grid::box(pt(0), pt(1), 64), 1.0 / 16), ValidationError);
}

TEST_CASE("boundary layers are monotone from empty to full") {
  const Grid g = Grid::box(pt(0, 0), pt(2, 1), std::vector<int>{64, 32});
  CHECK(boundary_layer(g, 0.0).count() == 0);
  CHECK(boundary_layer(g, std::sqrt(5.0)).count() == g.node_count());
  Index prev = 0;
  bool nested = true;
  auto inner = boundary_layer(g, 0.05);
  for (double t : {0.1, 0.2, 0.4}) {
    const BoundaryLayer L = boundary_layer(g, t);
    CHECK(L.count() >= prev);
    for (Index k = 0; k < g.node_count(); ++k) nested = nested && (!inner.mask[k] || L.mask[k]);
    prev = L.count();
    inner = L;
  }
  CHECK(nested);
}

TEST_CASE("boundary-layer norms scale like the square root of the width") {
  const Grid g = Grid::box(pt(0, 0), pt(1, 1), 256);
  const auto v = GridFunctiond::scalar(g, [](const Point& x) { return 1 + x[0] * x[0] + std::sin(3 * x[1]); });
  const double L2 = l2_norm(v), H1 = std::sqrt(L2 * L2 + std::pow(face_gradient_norm(v), 2));
  std::vector<double> ratios;
  for (int k = 2; k <= 6; ++k) {
    const double t = std::ldexp(1.0, -k);
    const auto L = boundary_layer(g, t);
    ratios.push_back(l2_norm(v, &L.mask) / (std::sqrt(t) * std::sqrt(L2 * H1)));
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  CHECK(*hi <= 2 * *lo);
}

TEST_CASE("constant coefficients leave no two-scale remainder") {
  CorrectorCache cache;
  const auto f = field("constant(2)", 1, 1);
  const auto cr = homogenize_all(f, CascadeConfig{}, cache);
  const ScaleLadder lad({1.0 / 8});
  const auto b = unit_load_1d(512);
  const auto ue = solve_multiscale(b, f, lad).solution, u0 = solve_homogenized(b, cr.effective()).solution;
  const auto ts = two_scale_expansion(ue, u0, cr.finest, lad);
  CHECK(ts.norms.w_H1 <= 1e-9);
  CHECK(max_abs(ts.correction.values()) <= 1e-12);
}

TEST_CASE("two-scale fields satisfy the defining identity nodewise") {
  CorrectorCache cache;
  const auto f = field("laminate(2+sin(2*pi*t))", 1, 1);
  const auto cr = homogenize_all(f, CascadeConfig{}, cache);
  const ScaleLadder lad({1.0 / 16});
  const auto b = unit_load_1d(4096);
  const auto ue = solve_multiscale(b, f, lad).solution, u0 = solve_homogenized(b, cr.effective()).solution;
  const auto ts = two_scale_expansion(ue, u0, cr.finest, lad);
  CHECK((ts.w.values() == ts.u_eps.values() - ts.u0.values() - ts.correction.values()).all());
  CHECK(ts.norms.w_H1 < ts.norms.grad_u0);
  CHECK(ts.norms.grad_u0_layer <= ts.norms.grad_u0);
  CHECK(ts.norms.diff_L2 > 0.0);
}
