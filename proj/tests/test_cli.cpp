#include "support.hpp"

#include "reiterate/config.hpp"
#include "reiterate/grid_io.hpp"
#include "reiterate/runner.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

using namespace testing;
namespace fs = std::filesystem;

namespace {

const char* kMinimal =
    "dimension = 1\n"
    "coefficient = constant(1)\n"
    "ladder.scales = 0.125\n";

const char* kProduct =
    "dimension = 1\n"
    "coefficient = laminate(2+sin(2*pi*t), 2+sin(2*pi*t))\n"
    "ladder.lambda = 1, 2\n"
    "ladder.eps = 2^-3, 2^-4\n"
    "cell.nodes = 64\n";

const char* kSineRate =
    "# n = 1 sine laminate, unit load\n"
    "dimension = 1\n"
    "coefficient = laminate(2+sin(2*pi*t))\n"
    "ladder.lambda = 1\n"
    "ladder.eps = 2^-4, 2^-5, 2^-6, 2^-7, 2^-8\n"
    "bvp.F = 1\n"
    "bvp.f = 0\n"
    "probe.two_scale = true\n";

struct Run {
  int status;
  std::string log;
  std::string err;
};

Run run_in(const fs::path& dir, const std::string& sub, const std::string& config,
           std::optional<fs::path> cache = std::nullopt) {
  const fs::path cfg = dir / "run.cfg";
  write_file_atomic(cfg, config);
  RunOptions opt;
  opt.subcommand = sub;
  opt.config = cfg;
  opt.out = dir / "out";
  opt.cache = cache ? *cache : dir / "cache";
  std::ostringstream log, err;
  const int status = run(opt, log, err);
  return {status, log.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  const auto bytes = read_file(p);
  REQUIRE(bytes.has_value());
  return std::string(bytes->begin(), bytes->end());
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "out" / "manifest.json")); }

std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto end = text.find("\r\n", pos);
    REQUIRE(end != std::string::npos);
    out.push_back(text.substr(pos, end - pos));
    pos = end + 2;
  }
  return out;
}

int shell(const std::string& cmd) {
  const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("a minimal config parses") {
  const auto c = parse_config_text(kMinimal);
  CHECK(c.dimension == 1);
  CHECK(c.scales == std::vector<double>{0.125});
  CHECK(c.resolved_p() == 2.0);
  CHECK(c.ladders().size() == 1);
  CHECK(c.cells_for(c.ladders()[0]) == std::vector<int>{2048});
  CHECK(c.feasibility.size() == 1);
  CHECK(c.feasibility[0].feasible);
  CHECK(c.F_at(pt(0.3)) == 1.0);
  CHECK(c.f_at(pt(0.3)) == 0.0);
}

TEST_CASE("misordered scales are rejected with the ladder invariant") {
  try {
    parse_config_text("dimension = 1\ncoefficient = laminate(2+sin(2*pi*t), 2+sin(2*pi*t))\nladder.scales = 0.01, 0.1\n");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE(e.errors().size() == 1);
    CHECK(e.errors()[0].find("ScaleLadder") != std::string::npos);
  }
}

TEST_CASE("load expressions are parsed") {
  const auto c = parse_config_text(std::string(kMinimal) + "bvp.F = sin(2*pi*x1)\n");
  CHECK(c.F_at(pt(0.25)) == doctest::Approx(1.0));
}

TEST_CASE("every schema error is reported with its key") {
  try {
    parse_config_text(
        "dimension = 3\n"
        "coefficient = constant(1)\n"
        "ladder.scales = 0.1\n"
        "colour = blue\n"
        "seed = 1\n"
        "seed = 2\n"
        "no equals sign\n");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    const std::string all = e.what();
    CHECK(all.find("dimension") != std::string::npos);
    CHECK(all.find("unknown key 'colour'") != std::string::npos);
    CHECK(all.find("duplicate key 'seed'") != std::string::npos);
    CHECK(all.find("line 7") != std::string::npos);
    CHECK(e.errors().size() >= 4);
  }
  CHECK_THROWS_AS(parse_config_text("dimension = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(std::string(kMinimal) + "ladder.eps = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(std::string(kMinimal) + "probe.p = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(fs::path("/nonexistent/run.cfg")), ValidationError);
}

TEST_CASE("separation is checked when N is given") {
  const std::string base =
      "dimension = 1\ncoefficient = laminate(2+sin(2*pi*t), 2+sin(2*pi*t))\nladder.N = 1\n";
  CHECK_NOTHROW(parse_config_text(base + "ladder.lambda = 1, 2\nladder.eps = 1/16\n"));
  CHECK_THROWS_AS(parse_config_text(base + "ladder.scales = 0.001, 0.000126\n"), ConfigError);
}

TEST_CASE("oversized sweep points are flagged as infeasible") {
  const auto c = parse_config_text(
      "dimension = 2\ncoefficient = checkerboard(1,4,2)\nladder.lambda = 1\nladder.eps = 1/4, 1/512\n");
  REQUIRE(c.feasibility.size() == 2);
  CHECK(c.feasibility[0].feasible);
  CHECK_FALSE(c.feasibility[1].feasible);
  CHECK(c.feasibility[1].memory_mb > 0.0);
  CHECK(c.warnings.size() == 1);
}

TEST_CASE("config hash ignores comments and key order") {
  const auto a = parse_config_text("dimension = 1\ncoefficient = constant(1)\nladder.scales = 0.125\n");
  const auto b = parse_config_text("# same\nladder.scales = 1/8\ncoefficient = constant(1)\ndimension = 1\n");
  CHECK(a.canonical.find("dimension") < a.canonical.find("ladder"));
  CHECK(parse_config_text(a.canonical).hash == a.hash);
  CHECK(b.scales == a.scales);
}

TEST_CASE("CSV formatting") {
  CHECK(csv_number(0.1) == "0.10000000000000001");
  CHECK(csv_number(NAN).empty());
  CsvTable t({"eps", "err"});
  t.add({0.5, NAN});
  t.add({0.25, 1.0 / 3});
  CHECK(t.str() == "eps,err\r\n0.5,\r\n0.25,0.33333333333333331\r\n");
}

TEST_CASE("cache directory precedence") {
  ::unsetenv("REITERATE_CACHE");
  CHECK(resolve_cache_dir(std::nullopt, "", "o") == fs::path("o") / "cache");
  CHECK(resolve_cache_dir(std::nullopt, "cfg", "o") == fs::path("cfg"));
  ::setenv("REITERATE_CACHE", "env", 1);
  CHECK(resolve_cache_dir(std::nullopt, "cfg", "o") == fs::path("env"));
  CHECK(resolve_cache_dir(fs::path("flag"), "cfg", "o") == fs::path("flag"));
  ::unsetenv("REITERATE_CACHE");
}

TEST_CASE("cascade on the product field prints 3") {
  const TempDir tmp("cascade");
  const Run r = run_in(tmp.path, "cascade", kProduct);
  REQUIRE(r.status == exit_ok);
  CHECK(r.log.find("A_hat(1,1) = 3.000 +- ") != std::string::npos);
  CHECK(fs::exists(tmp.path / "out" / "cascade.json"));
  CHECK(fs::exists(tmp.path / "out" / "effective.csv"));
  const auto m = manifest(tmp.path);
  CHECK(m["status"] == 0);
  CHECK(m["version"] == kToolkitVersion);
  CHECK(m["stages"].size() >= 1);
}

TEST_CASE("second cascade run hits the cache") {
  const TempDir tmp("hits");
  REQUIRE(run_in(tmp.path, "cascade", kProduct).status == exit_ok);
  CHECK(manifest(tmp.path)["cache"]["hits"] == 0);
  const Run again = run_in(tmp.path, "cascade", kProduct);
  REQUIRE(again.status == exit_ok);
  CHECK(manifest(tmp.path)["cache"]["hit_rate"].get<double>() >= 0.9);
  CHECK(again.log.find("hit rate") != std::string::npos);
}

TEST_CASE("rate writes one row per sweep value and is reproducible") {
  const TempDir a("rate-a"), b("rate-b");
  const Run ra = run_in(a.path, "rate", kSineRate);
  REQUIRE(ra.status == exit_ok);
  CHECK(ra.log.find("fitted slope") != std::string::npos);
  const auto rate = slurp(a.path / "out" / "rate.csv");
  const auto lines = csv_lines(rate);
  REQUIRE(lines.size() == 6);
  CHECK(lines[0] == "eps,eps_rate_expr,l2_error,slope_so_far");
  CHECK(fs::exists(a.path / "out" / "norms.csv"));

  REQUIRE(run_in(b.path, "rate", kSineRate).status == exit_ok);
  CHECK(slurp(b.path / "out" / "rate.csv") == rate);
  CHECK(slurp(b.path / "out" / "norms.csv") == slurp(a.path / "out" / "norms.csv"));
}

TEST_CASE("cell, solve, excess, certify and approx runs") {
  const std::string sine =
      "dimension = 1\ncoefficient = laminate(2+sin(2*pi*t))\nladder.lambda = 1\n";
  SUBCASE("cell") {
    const TempDir tmp("cell");
    REQUIRE(run_in(tmp.path, "cell", sine + "ladder.eps = 1/8\ncell.nodes = 128\n").status == exit_ok);
    const auto chi = read_grid_function(tmp.path / "out" / "corrector.rhgf");
    CHECK(chi.grid().nodes(0) == 128);
    CHECK(fs::exists(tmp.path / "out" / "cell.json"));
  }
  SUBCASE("solve") {
    const TempDir tmp("solve");
    REQUIRE(run_in(tmp.path, "solve", sine + "ladder.eps = 1/16\n").status == exit_ok);
    for (const char* f : {"u_eps.rhgf", "u0.rhgf", "w.rhgf", "norms.csv", "manifest.json"})
      CHECK(fs::exists(tmp.path / "out" / f));
  }
  SUBCASE("excess") {
    const TempDir tmp("excess");
    const Run r = run_in(tmp.path, "excess",
                         sine + "ladder.eps = 2^-6, 2^-7\ndomain.lower = -1\ndomain.upper = 1\nprobe.center = 0\n"
                                "probe.radius = 0.5\nbvp.f = x1\n");
    REQUIRE(r.status == exit_ok);
    CHECK(r.log.find("calibrated t = 1/16") != std::string::npos);
    const auto header = csv_lines(slurp(tmp.path / "out" / "excess.csv"))[0];
    CHECK(header == "r,H,Phi,G,h");
    CHECK(csv_lines(slurp(tmp.path / "out" / "step_down.csv"))[0] == "eps,r,H_tr,H_r,Phi_2r,excess");
    CHECK(manifest(tmp.path).contains("calibration"));
  }
  SUBCASE("certify") {
    const TempDir tmp("certify");
    REQUIRE(run_in(tmp.path, "certify", sine + "ladder.eps = 2^-3, 2^-4\nbvp.f = 2*x1\n").status == exit_ok);
    const auto lines = csv_lines(slurp(tmp.path / "out" / "certificate.csv"));
    CHECK(lines.size() == 3);
    CHECK(lines[0] == "eps,certificate");
  }
  SUBCASE("boundary certify") {
    const TempDir tmp("bcertify");
    const Run r = run_in(tmp.path, "certify",
                         "dimension = 2\ncoefficient = constant(1)\nladder.scales = 1/4\nprobe.kind = boundary\n"
                         "bvp.F = 0\nbvp.f = 1 + 2*x1 + 3*x2\n");
    REQUIRE(r.status == exit_ok);
    const auto lines = csv_lines(slurp(tmp.path / "out" / "certificate.csv"));
    REQUIRE(lines.size() == 2);
    CHECK(std::stod(lines[1].substr(lines[1].find(',') + 1)) <= 1.1);
  }
  SUBCASE("approx") {
    const TempDir tmp("approx");
    REQUIRE(run_in(tmp.path, "approx", sine + "ladder.eps = 2^-5, 2^-6\n").status == exit_ok);
    CHECK(csv_lines(slurp(tmp.path / "out" / "approx.csv")).size() == 3);
  }
}

TEST_CASE("validation failures exit with status 2 and still leave no output") {
  const TempDir tmp("invalid");
  const Run r = run_in(tmp.path, "rate", "dimension = 1\n");
  CHECK(r.status == exit_validation);
  CHECK(r.err.find("coefficient") != std::string::npos);
  CHECK_FALSE(fs::exists(tmp.path / "out" / "manifest.json"));

  RunOptions opt;
  opt.subcommand = "nonsense";
  std::ostringstream log, err;
  CHECK(run(opt, log, err) == exit_validation);
  opt.subcommand = "rate";
  CHECK(run(opt, log, err) == exit_validation);
}

TEST_CASE("stage failures are recorded in the manifest") {
  const TempDir tmp("stagefail");
  // approx needs B_2r inside the domain; r = 0.4 around the centre does not fit
  const Run r = run_in(tmp.path, "approx",
                       "dimension = 1\ncoefficient = laminate(2+sin(2*pi*t))\nladder.scales = 1/32\nprobe.r = 0.4\n");
  CHECK(r.status == exit_validation);
  const auto m = manifest(tmp.path);
  CHECK(m["status"] == exit_validation);
  CHECK(m.contains("error"));
}

TEST_CASE("clean-cache is idempotent") {
  const TempDir tmp("clean");
  REQUIRE(run_in(tmp.path, "cascade", kProduct).status == exit_ok);
  CHECK(fs::exists(tmp.path / "cache"));
  RunOptions opt;
  opt.subcommand = "clean-cache";
  opt.cache = tmp.path / "cache";
  std::ostringstream log, err;
  CHECK(run(opt, log, err) == exit_ok);
  CHECK_FALSE(fs::exists(tmp.path / "cache"));
  CHECK(run(opt, log, err) == exit_ok);
  CHECK(log.str().find("removed 0 file(s)") != std::string::npos);
}

TEST_CASE("command-line front end") {
  const TempDir tmp("exe");
  const std::string exe = REITERATE_CLI;
  write_file_atomic(tmp.path / "p.cfg", kProduct);
  const std::string args = " --config " + (tmp.path / "p.cfg").string() + " --out " + (tmp.path / "o").string() +
                           " --cache " + (tmp.path / "c").string();
  CHECK(shell(exe + " cascade" + args + " --jobs 2") == 0);
  CHECK(fs::exists(tmp.path / "o" / "cascade.json"));
  CHECK(shell(exe + " clean-cache --cache " + (tmp.path / "c").string()) == 0);
  CHECK(shell(exe + " clean-cache --cache " + (tmp.path / "c").string()) == 0);
  CHECK(shell(exe + " cascade --config " + (tmp.path / "missing.cfg").string()) == 2);
  CHECK(shell(exe + " cascade" + args + " --jobs 0") == 2);
  CHECK(shell(exe + " frobnicate") == 2);
  CHECK(shell(exe) == 2);
}
