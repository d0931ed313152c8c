#include "support.hpp"

#include <doctest.h>

using namespace testing;

namespace {

double sine_factor(double t) { return 2 + std::sin(2 * pi * t); }

}  // namespace

TEST_CASE("coefficient text round trips") {
  for (const char* text : {"constant(1)", "laminate(2+sin(2*pi*t),2+sin(2*pi*t))", "checkerboard(1,4,50)",
                           "modulated(laminate(2+sin(2*pi*t)),2,1,1)", "sum(constant(1),constant(0.5,0,2))"}) {
    const auto s = CoefficientSpec::parse(text);
    CHECK(CoefficientSpec::parse(s.serialize()) == s);
  }
  CHECK_THROWS_AS(CoefficientSpec::parse("laminate(2+sin(2*pi*t)"), ValidationError);
  CHECK_THROWS_AS(CoefficientSpec::parse("nonsense(1)"), ValidationError);
}

TEST_CASE("identity field is the identity everywhere") {
  const auto f = field("constant(1)", 2, 1);
  const auto lad = ScaleLadder({0.1});
  for (double a : {0.0, 0.37, 0.9}) CHECK((evaluate_multiscale(f, lad, pt(a, 1 - a)) - identity_tensor(2)).norm() == 0.0);
  CHECK(f.metadata().mu == 1.0);
  CHECK(f.metadata().holder_L == 0.0);
}

TEST_CASE("multiscale evaluation substitutes x / eps") {
  const auto f = field("laminate(2+sin(2*pi*t))", 1, 1);
  CHECK(evaluate_multiscale(f, ScaleLadder({1.0 / 8}), pt(1.0 / 32))(0, 0) == doctest::Approx(3.0).epsilon(1e-14));

  const auto p = field("laminate(2+sin(2*pi*t),2+cos(2*pi*t))", 1, 2);
  const ScaleLadder lad({0.25, 1.0 / 16});
  for (double x : {0.013, 0.2, 0.77}) {
    const double expect = sine_factor(4 * x) * (2 + std::cos(2 * pi * 16 * x));
    CHECK(evaluate_multiscale(p, lad, pt(x))(0, 0) == doctest::Approx(expect).epsilon(1e-13));
  }
}

TEST_CASE("laminate constants") {
  const auto f = field("laminate(2+sin(2*pi*t))", 1, 1);
  CHECK(f.metadata().mu == doctest::Approx(1.0 / 3));
  CHECK(f.metadata().lambda_min == doctest::Approx(1.0));
  CHECK(f.metadata().lambda_max == doctest::Approx(3.0));
}

TEST_CASE("checkerboard spectrum stays between the phases") {
  for (double s : {1.0, 4.0, 50.0}) {
    const auto f = field("checkerboard(1,4," + std::to_string(s) + ")", 2, 1);
    const FieldCheck c = check_field(f, 4000, 11);
    CHECK(c.ok());
    CHECK(c.min_eigenvalue >= 1.0 - 1e-12);
    CHECK(c.max_eigenvalue <= 4.0 + 1e-12);
  }
}

TEST_CASE("sampled checks pass on every built-in family") {
  for (const auto& [text, d, n] : std::vector<std::tuple<std::string, int, int>>{
           {"constant(2,0.5,3)", 2, 1},
           {"laminate(2+sin(2*pi*t),1.5+cos(2*pi*t))", 1, 2},
           {"modulated(laminate(2+sin(2*pi*t)),2,1,1)", 1, 1},
           {"matrix(2+sin(2*pi*y1_1)*cos(2*pi*y1_2),0.3*sin(2*pi*(y1_1+y1_2)),2+0.5*cos(2*pi*y1_1))", 2, 1},
           {"product(checkerboard(1,4,3),laminate(1.5+0.5*sin(2*pi*t)))", 2, 2}}) {
    CAPTURE(text);
    const FieldCheck c = check_field(field(text, d, n), 2000, 5);
    CHECK(c.elliptic);
    CHECK(c.periodic);
    CHECK(c.symmetric);
    CHECK(c.holder);
    CHECK(c.worst_periodicity <= 1e-12);
    CHECK(c.samples == 2000);
  }
}

TEST_CASE("checks are reproducible from the seed") {
  const auto f = field("modulated(laminate(2+sin(2*pi*t)),2,1,1)", 1, 1);
  const FieldCheck a = check_field(f, 500, 42), b = check_field(f, 500, 42);
  CHECK(a.worst_holder_ratio == b.worst_holder_ratio);
  CHECK(a.min_eigenvalue == b.min_eigenvalue);
}

TEST_CASE("ellipticity violations are rejected") {
  CHECK_THROWS_AS(field("constant(-1)", 1, 1), ValidationError);
  CHECK_THROWS_AS(field("laminate(sin(2*pi*t))", 1, 1), ValidationError);
  CHECK_THROWS_AS(field("checkerboard(1,4,2)", 1, 1), ValidationError);
}

TEST_CASE("dummy slots add no dependence") {
  const auto f = field("laminate(2+sin(2*pi*t))", 1, 3);
  CHECK(f.scales() == 3);
  CHECK(f.depends_on_slot(1));
  CHECK_FALSE(f.depends_on_slot(2));
  CHECK_FALSE(f.depends_on_slot(3));
  CHECK_FALSE(f.depends_on_x());
  CHECK(field("constant(1)", 1, 1).hash() != field("constant(2)", 1, 1).hash());
}

TEST_CASE("ladders enforce ordering") {
  CHECK_THROWS_AS(ScaleLadder({0.1, 0.2}), ValidationError);
  CHECK_THROWS_AS(ScaleLadder({1.5}), ValidationError);
  CHECK_THROWS_AS(ScaleLadder(std::vector<double>{}), ValidationError);
  const auto lad = ScaleLadder::power_law(0.25, {1, 2});
  CHECK(lad.eps(2) == 0.0625);
  CHECK(lad.rate_expression() == doctest::Approx(0.5));
}

TEST_CASE("power ladders sit on the separation boundary") {
  const auto lad = ScaleLadder::power_law(1.0 / 16, {1, 2, 3}, 1);
  const SeparationReport r = check_separation(lad);
  CHECK(r.satisfied);
  REQUIRE(r.slacks.size() == 2);
  for (double s : r.slacks) CHECK(std::abs(s) <= 1e-12);
}

TEST_CASE("logarithmically close scales fail separation") {
  const double eps = 1e-3;
  const ScaleLadder lad({eps, eps / (std::abs(std::log(eps)) + 1)}, 1);
  const SeparationReport r = check_separation(lad);
  CHECK_FALSE(r.satisfied);
  CHECK(r.worst_k == 1);
  CHECK(r.slack < 0);
}

TEST_CASE("minimal separation exponent") {
  const auto lad = ScaleLadder::power_law(1.0 / 32, {1, 2, 4});
  CHECK(minimal_separation_exponent(lad) == 1);
  CHECK(check_separation(ScaleLadder::power_law(1.0 / 32, {1, 2, 4}, 2)).satisfied);
  CHECK(check_separation(ScaleLadder({0.5}, 1)).worst_k == 0);
}
