#include "support.hpp"

#include "reiterate/cascade.hpp"
#include "reiterate/grid_io.hpp"

#include <doctest.h>

#include <fstream>

using namespace testing;

namespace {

double sine(double t) { return 2 + std::sin(2 * pi * t); }

const char* kProduct = "laminate(2+sin(2*pi*t),2+sin(2*pi*t))";

}  // namespace

TEST_CASE("constant fields pass through every level") {
  Tensor M(2, 2);
  M << 2, 0.5, 0.5, 3;
  CorrectorCache cache;
  CascadeConfig cfg;
  cfg.cell_nodes = 16;
  const auto res = homogenize_all(field("constant(2,0.5,3)", 2, 2), cfg, cache);
  REQUIRE(res.levels.size() == 2);
  for (const auto& lvl : res.levels)
    for (Index s = 0; s < lvl->sample_count(); ++s) CHECK((lvl->value(s) - M).norm() <= 1e-12);
  CHECK(res.effective().is_constant());
}

TEST_CASE("one descent of the product field scales the slow factor by sqrt 3") {
  CorrectorCache cache;
  CascadeConfig cfg;
  const auto f = field(kProduct, 1, 2);
  const TensorField A1 = descend(as_level(f), f.hash(), cfg, cache);
  CHECK(A1.level() == 1);
  double err = 0.0;
  for (Index s = 0; s < A1.sample_count(); ++s)
    err = std::max(err, std::abs(A1.value(s)(0, 0) - std::sqrt(3.0) * sine(A1.slot_coord(s, 1)[0])));
  CHECK(err <= 1e-4);
}

TEST_CASE("two descents of the product field give 3") {
  CorrectorCache cache;
  const auto res = homogenize_all(field(kProduct, 1, 2), CascadeConfig{}, cache);
  CHECK(res.effective().level() == 0);
  CHECK(res.effective().is_constant());
  CHECK(std::abs(res.effective().value(0)(0, 0) - 3.0) <= 1e-4);
  REQUIRE(res.stats.size() == 2);
  CHECK(res.stats[0].max_residual <= 1e-9);
}

TEST_CASE("the slow factor passes through the cell average") {
  CorrectorCache cache;
  CascadeConfig cfg;
  cfg.x_samples = 16;
  const auto res = homogenize_all(field("modulated(laminate(2+sin(2*pi*t)),2,1,1)", 1, 1), cfg, cache);
  const TensorField& A0 = res.effective();
  REQUIRE(A0.slots()[0].active);
  double err = 0.0;
  for (Index s = 0; s < A0.sample_count(); ++s)
    err = std::max(err, std::abs(A0.value(s)(0, 0) - std::sqrt(3.0) * sine(A0.slot_coord(s, 0)[0])));
  CHECK(err <= 1e-4);
}

TEST_CASE("dummy slots do not change the result") {
  CorrectorCache cache;
  CascadeConfig cfg;
  const double one = homogenize_all(field("laminate(2+sin(2*pi*t))", 1, 1), cfg, cache).effective().value(0)(0, 0);
  const double padded =
      homogenize_all(field("laminate(1,2+sin(2*pi*t))", 1, 2), cfg, cache).effective().value(0)(0, 0);
  const double three =
      homogenize_all(field("laminate(2+sin(2*pi*t))", 1, 3), cfg, cache).effective().value(0)(0, 0);
  CHECK(std::abs(one - padded) <= 1e-10);
  CHECK(std::abs(one - three) <= 1e-10);
}

TEST_CASE("tensor fields interpolate periodically in fast slots") {
  CorrectorCache cache;
  CascadeConfig cfg;
  cfg.cell_nodes = 64;
  const auto res = homogenize_all(field(kProduct, 1, 2), cfg, cache);
  const TensorField& A1 = *res.levels[1];
  const Point x = Point::Zero(1);
  for (double y : {0.1, 0.37, 0.999}) {
    const Point a = pt(y), b = pt(y + 1), c = pt(y - 2);
    CHECK(A1(x, &a)(0, 0) == doctest::Approx(A1(x, &b)(0, 0)));
    CHECK(A1(x, &a)(0, 0) == doctest::Approx(A1(x, &c)(0, 0)));
  }
}

TEST_CASE("spectrum containment at every level") {
  CorrectorCache cache;
  CascadeConfig cfg;
  cfg.cell_nodes = 32;
  const auto f = field("product(checkerboard(1,4,3),laminate(1.5+0.5*sin(2*pi*t)))", 2, 2);
  const auto res = homogenize_all(f, cfg, cache);
  for (const auto& lvl : res.levels) {
    CHECK(lvl->lambda_min() >= f.metadata().mu - 1e-12);
    CHECK(lvl->lambda_max() <= 1.0 / f.metadata().mu + 1e-12);
  }
}

TEST_CASE("Hoelder quotients") {
  CorrectorCache cache;
  CascadeConfig cfg;
  cfg.cell_nodes = 16;
  const auto c = homogenize_all(field("constant(2)", 1, 2), cfg, cache);
  CHECK(c.levels[1]->slots()[1].active == false);

  std::vector<double> constants;
  for (int n : {64, 128}) {
    CascadeConfig cn;
    cn.cell_nodes = n;
    const auto res = homogenize_all(field(kProduct, 1, 2), cn, cache);
    const HolderReport h = holder_check(*res.levels[1], 1.0);
    // A_1 = sqrt 3 (2 + sin 2 pi y) has Lipschitz constant 2 pi sqrt 3
    CHECK(h.constant <= 2 * pi * std::sqrt(3.0) * 1.01);
    constants.push_back(h.constant);
  }
  CHECK(constants[1] / constants[0] == doctest::Approx(1.0).epsilon(0.05));

  TensorField flat(1, 1, {SlotSampling{}, SlotSampling{true, Grid::periodic(1, 16)}});
  for (Index s = 0; s < flat.sample_count(); ++s) flat.set_value(s, identity_tensor(1));
  CHECK(holder_check(flat, 1.0).constant == 0.0);
  TensorField coarse(1, 1, {SlotSampling{}, SlotSampling{true, Grid::periodic(1, 4)}});
  CHECK_THROWS_AS(holder_check(coarse, 1.0), ValidationError);
}

TEST_CASE("refining slow samples changes the effective field little") {
  CorrectorCache cache;
  const auto f = field("modulated(laminate(2+sin(2*pi*t)),2,1,1)", 1, 1);
  std::vector<std::shared_ptr<const TensorField>> A;
  for (int xs : {8, 16, 32}) {
    CascadeConfig cfg;
    cfg.cell_nodes = 64;
    cfg.x_samples = xs;
    A.push_back(homogenize_all(f, cfg, cache).levels[0]);
  }
  auto diff = [](const TensorField& a, const TensorField& b) {
    double e = 0.0;
    for (int i = 0; i <= 200; ++i) {
      const Point x = pt(i / 200.0);
      e = std::max(e, std::abs(a(x, nullptr)(0, 0) - b(x, nullptr)(0, 0)));
    }
    return e;
  };
  const double d1 = diff(*A[0], *A[1]), d2 = diff(*A[1], *A[2]);
  CHECK(d2 < d1);
  CHECK(d1 / d2 >= 2.0);
}

TEST_CASE("cache put then get is bit-identical") {
  const TempDir tmp("cache");
  CorrectorCache cache(tmp.path);
  const Grid g = Grid::periodic(1, 32);
  CachePayload p{Tensor::Constant(1, 1, std::sqrt(3.0)), GridFunctiond(g, Shape::vector), {}, 0.0, 0};
  for (Index k = 0; k < g.node_count(); ++k) p.correctors.values()(k, 0) = std::sin(0.1 * double(k)) / 3;
  p.frozen = {0.25};
  p.residual = 1e-12;
  p.iterations = 7;
  const CacheKey key{0xabcdef, 1, "level=1;frozen=0.25"};

  CHECK_FALSE(cache.get(key, g).has_value());
  cache.put(key, p);
  CHECK(std::filesystem::exists(cache.bin_path(key)));
  CHECK(std::filesystem::exists(cache.json_path(key)));
  const auto back = cache.get(key, g);
  REQUIRE(back.has_value());
  CHECK(back->effective(0, 0) == p.effective(0, 0));
  CHECK((back->correctors.values() == p.correctors.values()).all());
  CHECK(back->frozen == p.frozen);
  CHECK(back->iterations == 7);
  CHECK(cache.hits() == 1);
  CHECK(cache.misses() == 1);

  // same hash bucket, different sample text: never served
  CacheKey other = key;
  other.sample = "level=1;frozen=0.5";
  CHECK_FALSE(cache.get(other, g).has_value());
}

TEST_CASE("corrupt cache entries are evicted") {
  const TempDir tmp("corrupt");
  CorrectorCache cache(tmp.path);
  const Grid g = Grid::periodic(1, 16);
  const CachePayload p{Tensor::Constant(1, 1, 2.0), GridFunctiond(g, Shape::vector), {}, 0.0, 0};
  const CacheKey key{1, 1, "x"};
  cache.put(key, p);
  {
    std::ofstream out(cache.bin_path(key), std::ios::binary | std::ios::trunc);
    out << "garbage";
  }
  CHECK_FALSE(cache.get(key, g).has_value());
  CHECK(cache.evictions() == 1);
  CHECK_FALSE(std::filesystem::exists(cache.json_path(key)));
  CHECK(CorrectorCache::clean(tmp.path / "missing") == 0);
}

TEST_CASE("a second cascade is served from the cache") {
  const TempDir tmp("rerun");
  CascadeConfig cfg;
  cfg.cell_nodes = 64;
  const auto f = field(kProduct, 1, 2);
  CorrectorCache first(tmp.path);
  const auto a = homogenize_all(f, cfg, first);
  CHECK(a.hits == 0);
  CorrectorCache second(tmp.path);
  const auto b = homogenize_all(f, cfg, second);
  CHECK(second.hit_rate() >= 0.9);
  CHECK(a.effective().value(0)(0, 0) == b.effective().value(0)(0, 0));
  for (Index s = 0; s < a.levels[1]->sample_count(); ++s)
    CHECK(a.levels[1]->value(s)(0, 0) == b.levels[1]->value(s)(0, 0));
}

TEST_CASE("parallel descent matches the serial one") {
  CorrectorCache cache;
  CascadeConfig serial;
  serial.cell_nodes = 32;
  CascadeConfig par = serial;
  par.jobs = 4;
  const auto f = field(kProduct, 1, 2);
  const auto a = homogenize_all(f, serial, cache), b = homogenize_all(f, par, cache);
  for (Index s = 0; s < a.levels[1]->sample_count(); ++s)
    CHECK(a.levels[1]->value(s)(0, 0) == b.levels[1]->value(s)(0, 0));
}

TEST_CASE("cascade summary is JSON with every level") {
  CorrectorCache cache;
  CascadeConfig cfg;
  cfg.cell_nodes = 32;
  const auto f = field(kProduct, 1, 2);
  const auto text = cascade_summary_json(homogenize_all(f, cfg, cache), f);
  CHECK(text.find("\"levels\"") != std::string::npos);
  CHECK(text.find(hex64(f.hash())) != std::string::npos);
}
