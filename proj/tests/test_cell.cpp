#include "support.hpp"

#include "reiterate/cell.hpp"

#include <doctest.h>

using namespace testing;

namespace {

CellProblem sample_field(const CoefficientField& f, int n, const Point& x = Point()) {
  const Grid g = Grid::periodic(f.dim(), n);
  const Point xs = x.size() ? x : Point::Zero(f.dim());
  return CellProblem::sample(g, [&](const Point& y) { return f(xs, &y); });
}

double sine(double t) { return 2 + std::sin(2 * pi * t); }

// Analytic f_ij = c_ij s(y) with s = sin(2 pi y1) cos(4 pi y2), so b_ij = -20 pi^2 f_ij.
const double c_coef[4] = {1.0, -0.5, 0.25, 2.0};
double s_fun(const Point& y) { return std::sin(2 * pi * y[0]) * std::cos(4 * pi * y[1]); }
double s_grad(const Point& y, int k) {
  return k == 0 ? 2 * pi * std::cos(2 * pi * y[0]) * std::cos(4 * pi * y[1])
                : -4 * pi * std::sin(2 * pi * y[0]) * std::sin(4 * pi * y[1]);
}

double phi_error(int n) {
  const Grid g = Grid::periodic(2, n);
  const auto B = GridFunctiond::matrix(g, [](const Point& y) {
    Tensor t(2, 2);
    for (int c = 0; c < 4; ++c) t(c / 2, c % 2) = -20 * pi * pi * c_coef[c] * s_fun(y);
    return t;
  });
  const FluxData fd = flux_correctors(B);
  double err = 0.0;
  for (Index node = 0; node < g.node_count(); ++node) {
    const Point y = g.coord(node);
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          const double exact = c_coef[i * 2 + j] * s_grad(y, k) - c_coef[k * 2 + j] * s_grad(y, i);
          err = std::max(err, std::abs(fd.at(k, i, j, node) - exact));
        }
  }
  return err;
}

}  // namespace

TEST_CASE("constant coefficients need no corrector") {
  const auto f = field("constant(2,0.5,3)", 2, 1);
  const auto P = sample_field(f, 16);
  const auto C = solve_corrector(P);
  for (const auto& chi : C.chi) CHECK(max_abs(chi.values()) <= 1e-12);
  const auto E = effective_tensor(P, C);
  Tensor M(2, 2);
  M << 2, 0.5, 0.5, 3;
  CHECK((E.value - M).norm() <= 1e-12);
  const auto B = flux_matrix(P, C, E);
  CHECK(max_abs(B.B.values()) <= 1e-12);
}

TEST_CASE("1D corrector derivative matches the harmonic-mean oracle") {
  double prev = 0.0;
  for (int n : {256, 512}) {
    const auto P = sample_field(field("laminate(2+sin(2*pi*t))", 1, 1), n);
    const auto C = solve_corrector(P);
    const double ahat = std::sqrt(3.0);
    double err = 0.0;
    for (Index k = 0; k < P.grid().node_count(); ++k) {
      const double y = P.grid().coord(k)[0];
      err = std::max(err, std::abs(C.grad_chi[0].values()(k, 0) - (ahat / sine(y) - 1)));
    }
    CHECK(std::abs(mean(C.chi[0])[0]) <= 1e-14);
    if (prev > 0.0) CHECK(prev / err >= 3.5);
    prev = err;
  }
}

TEST_CASE("2D laminate reduces to the 1D corrector") {
  const int n = 64;
  const auto f2 = field("matrix(2+sin(2*pi*y1_1),0,2+sin(2*pi*y1_1))", 2, 1);
  const auto C2 = solve_corrector(sample_field(f2, n));
  const auto C1 = solve_corrector(sample_field(field("laminate(2+sin(2*pi*t))", 1, 1), n));
  const Grid& g = C2.chi[0].grid();
  double across = 0.0, oracle = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      across = std::max(across, std::abs(C2.chi[0](g.flat(i, j)) - C2.chi[0](g.flat(i, 0))));
      oracle = std::max(oracle, std::abs(C2.chi[0](g.flat(i, j)) - C1.chi[0](i)));
    }
  CHECK(across <= 1e-8);
  CHECK(oracle <= 1e-8);
  CHECK(max_abs(C2.chi[1].values()) <= 1e-10);
}

TEST_CASE("1D effective coefficient is the harmonic mean") {
  const auto P = sample_field(field("laminate(2+sin(2*pi*t))", 1, 1), 4096);
  const auto E = effective_tensor(P, solve_corrector(P));
  CHECK(std::abs(E.value(0, 0) - std::sqrt(3.0)) <= 1e-6);
  CHECK(E.in_range);

  // exact at any resolution against the discrete quadrature of 1/a on faces
  const auto Pc = sample_field(field("laminate(1.5+cos(2*pi*t)^2)", 1, 1), 37);
  const auto& a = Pc.coefficient;
  double inv = 0.0;
  for (Index k = 0; k < a.size(); ++k) {
    const double l = a.values()(k, 0), r = a.values()((k + 1) % a.size(), 0);
    inv += 0.5 * (1 / l + 1 / r);
  }
  CHECK(effective_tensor(Pc, solve_corrector(Pc)).value(0, 0) ==
        doctest::Approx(double(a.size()) / inv).epsilon(1e-10));
}

TEST_CASE("effective tensors of a smooth field converge at second order") {
  const auto f = field("matrix(2+sin(2*pi*y1_1)*cos(2*pi*y1_2),0.3*sin(2*pi*(y1_1+y1_2)),2+0.5*cos(2*pi*y1_1))", 2, 1);
  std::vector<Tensor> A;
  for (int n : {16, 32, 64}) {
    const auto P = sample_field(f, n);
    const auto E = effective_tensor(P, solve_corrector(P));
    CHECK(E.in_range);
    CHECK(E.value(0, 1) == doctest::Approx(E.value(1, 0)));
    A.push_back(E.value);
  }
  const double d1 = (A[1] - A[0]).norm(), d2 = (A[2] - A[1]).norm();
  CHECK(d1 / d2 >= 3.0);
}

TEST_CASE("effective spectrum lies within the coefficient bounds") {
  const auto f = field("checkerboard(1,4,8)", 2, 1);
  const auto P = sample_field(f, 64);
  const auto E = effective_tensor(P, solve_corrector(P));
  CHECK(E.lambda_min >= 1.0);
  CHECK(E.lambda_max <= 4.0);
  CHECK(E.lambda_min >= f.metadata().mu);
  CHECK(E.lambda_max <= 1.0 / f.metadata().mu);
}

TEST_CASE("corrector energy respects its bound") {
  const auto P = sample_field(field("checkerboard(1,4,8)", 2, 1), 32);
  const auto C = solve_corrector(P);
  CHECK(C.energy <= C.energy_bound);
  for (double r : C.residuals) CHECK(r <= 1e-9);
}

TEST_CASE("1D flux is constant") {
  const auto P = sample_field(field("laminate(2+sin(2*pi*t))", 1, 1), 512);
  const auto C = solve_corrector(P);
  const auto B = flux_matrix(P, C, effective_tensor(P, C));
  CHECK(max_abs(B.B.values()) <= 1e-10);
  const auto fd = flux_correctors(B.B);
  CHECK(max_abs(fd.phi[0].values()) == 0.0);
}

TEST_CASE("checkerboard flux matrix is mean-free with small divergence") {
  std::vector<double> res;
  for (int n : {32, 64}) {
    const auto P = sample_field(field("checkerboard(1,4,4)", 2, 1), n);
    const auto C = solve_corrector(P);
    const auto B = flux_matrix(P, C, effective_tensor(P, C));
    CHECK(B.max_abs_mean <= 1e-8);
    CHECK(B.divergence_residual <= 10.0 / n);
    res.push_back(B.divergence_residual);
  }
  CHECK(res[1] < res[0]);
}

TEST_CASE("flux correctors of zero are zero") {
  const GridFunctiond B(Grid::periodic(2, 16), Shape::matrix);
  const auto fd = flux_correctors(B);
  for (const auto& p : fd.phi) CHECK(max_abs(p.values()) == 0.0);
}

TEST_CASE("flux correctors are skew and mean-free") {
  const auto P = sample_field(field("checkerboard(1,4,4)", 2, 1), 32);
  const auto C = solve_corrector(P);
  const auto fd = flux_correctors(flux_matrix(P, C, effective_tensor(P, C)).B);
  bool skew = true;
  for (Index node = 0; node < P.grid().node_count(); ++node)
    for (int k = 0; k < 2; ++k)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) skew = skew && fd.at(k, i, j, node) == -fd.at(i, k, j, node);
  CHECK(skew);
  CHECK(fd.max_abs_mean_phi <= 1e-12);
}

TEST_CASE("flux correctors match an analytic potential") {
  const double e1 = phi_error(32), e2 = phi_error(64);
  CHECK(e2 <= 0.05);
  CHECK(e1 / e2 >= 3.5);
}

TEST_CASE("flux correctors reject a flux with nonzero mean") {
  const Grid g = Grid::periodic(2, 16);
  auto B = GridFunctiond::matrix(g, [](const Point&) { return identity_tensor(2); });
  CHECK_THROWS_AS(flux_correctors(B), ValidationError);
}
