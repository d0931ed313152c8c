#include "reiterate/config.hpp"

#include "reiterate/grid_io.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

namespace reiterate {

namespace {

std::string join_lines(const std::vector<std::string>& errors) {
  std::string s = "invalid config:";
  for (const auto& e : errors) s += "\n  " + e;
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Splits on commas outside parentheses.
std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

// Numbers may be written as constant expressions such as 2^-4 or 1/16.
double number(const std::string& key, const std::string& s) {
  Expression e;
  try {
    e = Expression::parse(s, {});
  } catch (const ValidationError& err) {
    throw ValidationError(key + ": expected a number, got '" + s + "' (" + err.what() + ")");
  }
  const double v = e(nullptr);
  if (!std::isfinite(v)) throw ValidationError(key + ": '" + s + "' is not finite");
  return v;
}

std::vector<double> numbers(const std::string& key, const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    if (item.empty()) throw ValidationError(key + ": empty entry in comma list '" + s + "'");
    out.push_back(number(key, item));
  }
  return out;
}

int integer(const std::string& key, const std::string& s, int lo) {
  const double v = number(key, s);
  if (v != std::floor(v) || v < lo || v > 1e9)
    throw ValidationError(key + ": expected an integer >= " + std::to_string(lo) + ", got '" + s + "'");
  return static_cast<int>(v);
}

bool boolean(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ValidationError(key + ": expected true or false, got '" + s + "'");
}

Point point(const std::string& key, const std::string& s, int d) {
  const auto v = numbers(key, s);
  if (static_cast<int>(v.size()) != d)
    throw ValidationError(key + ": expected " + std::to_string(d) + " comma-separated numbers, got '" + s + "'");
  return Eigen::Map<const Point>(v.data(), d);
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "dimension",       "coefficient",     "ladder.lambda",   "ladder.eps",         "ladder.scales",
      "ladder.N",        "domain.lower",    "domain.upper",    "resolution.cells_per_finest",
      "resolution.max_nodes", "cell.nodes", "cell.samples",    "cell.x_samples",     "cell.frozen",
      "bvp.F",           "bvp.f",           "probe.kind",      "probe.center",       "probe.anchor",
      "probe.radius",    "probe.r",         "probe.p",         "probe.theta",        "probe.alpha",
      "probe.rho",       "probe.two_scale", "tolerance.cell",  "tolerance.solve",    "seed",
      "output",          "cache"};
  return keys;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : ValidationError(join_lines(errors)), errors_(std::move(errors)) {}

std::vector<ScaleLadder> ExperimentConfig::ladders() const {
  std::vector<ScaleLadder> out;
  if (!scales.empty()) {
    out.emplace_back(scales, separation);
    return out;
  }
  for (double e : eps) out.push_back(ScaleLadder::power_law(e, lambda, separation));
  return out;
}

std::vector<int> ExperimentConfig::cells_for(const ScaleLadder& ladder) const {
  const int per = cells_per_finest > 0 ? cells_per_finest : (dimension == 1 ? 256 : 16);
  std::vector<int> cells(dimension);
  for (int a = 0; a < dimension; ++a)
    cells[a] = static_cast<int>(std::ceil(per * (upper[a] - lower[a]) / ladder.finest() - 1e-9));
  return cells;
}

double ExperimentConfig::F_at(const Point& x) const {
  double v[2] = {x[0], dimension == 2 ? x[1] : 0.0};
  return F(v);
}

double ExperimentConfig::f_at(const Point& x) const {
  double v[2] = {x[0], dimension == 2 ? x[1] : 0.0};
  return f(v);
}

ExperimentConfig parse_config_text(const std::string& text) {
  std::vector<std::string> errors;
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(lineno) + ": expected 'key = value', got '" + line + "'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      errors.push_back("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
      continue;
    }
    if (kv.count(key)) {
      errors.push_back("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
      continue;
    }
    if (value.empty()) {
      errors.push_back(key + ": empty value");
      continue;
    }
    kv[key] = value;
  }

  ExperimentConfig c;
  // Each reader records its own error and leaves the default in place.
  auto read = [&](const std::string& key, const std::function<void(const std::string&)>& apply) {
    const auto it = kv.find(key);
    if (it == kv.end()) return;
    try {
      apply(it->second);
    } catch (const ValidationError& e) {
      errors.push_back(e.what());
    }
  };
  auto require = [&](const std::string& key) {
    if (!kv.count(key)) errors.push_back(key + ": required key missing");
  };

  require("dimension");
  require("coefficient");
  read("dimension", [&](const std::string& s) {
    const int d = integer("dimension", s, 1);
    if (d > 2) throw ValidationError("dimension: expected 1 or 2, got " + s);
    c.dimension = d;
  });
  const int d = c.dimension;
  c.lower = Point::Zero(d);
  c.upper = Point::Ones(d);

  read("ladder.lambda", [&](const std::string& s) {
    c.lambda = numbers("ladder.lambda", s);
    for (std::size_t k = 0; k < c.lambda.size(); ++k)
      if (!(c.lambda[k] > 0.0) || (k > 0 && !(c.lambda[k] > c.lambda[k - 1])))
        throw ValidationError("ladder.lambda: exponents must be positive and strictly increasing");
  });
  read("ladder.eps", [&](const std::string& s) {
    c.eps = numbers("ladder.eps", s);
    for (double e : c.eps)
      if (!(e > 0.0 && e < 1.0)) throw ValidationError("ladder.eps: every value must lie in (0, 1)");
  });
  read("ladder.scales", [&](const std::string& s) { c.scales = numbers("ladder.scales", s); });
  read("ladder.N", [&](const std::string& s) { c.separation = integer("ladder.N", s, 1); });
  if (!c.scales.empty() && (!c.lambda.empty() || !c.eps.empty()))
    errors.push_back("ladder.scales: give either explicit scales or ladder.lambda with ladder.eps, not both");
  if (c.scales.empty() && (c.lambda.empty() || c.eps.empty()))
    errors.push_back("ladder: need ladder.scales, or ladder.lambda together with ladder.eps");

  read("domain.lower", [&](const std::string& s) { c.lower = point("domain.lower", s, d); });
  read("domain.upper", [&](const std::string& s) { c.upper = point("domain.upper", s, d); });
  for (int a = 0; a < d; ++a)
    if (!(c.upper[a] > c.lower[a]))
      errors.push_back("domain: upper must exceed lower on axis " + std::to_string(a + 1));
  read("resolution.cells_per_finest",
       [&](const std::string& s) { c.cells_per_finest = integer("resolution.cells_per_finest", s, 8); });
  read("resolution.max_nodes", [&](const std::string& s) { c.max_nodes = integer("resolution.max_nodes", s, 16); });
  read("cell.nodes", [&](const std::string& s) { c.cell_nodes = integer("cell.nodes", s, 8); });
  read("cell.samples", [&](const std::string& s) { c.cell_samples = integer("cell.samples", s, 2); });
  read("cell.x_samples", [&](const std::string& s) { c.x_samples = integer("cell.x_samples", s, 1); });
  read("cell.frozen", [&](const std::string& s) { c.cell_frozen = numbers("cell.frozen", s); });

  const std::vector<std::string> xvars = d == 1 ? std::vector<std::string>{"x1"} : std::vector<std::string>{"x1", "x2"};
  c.F = Expression::parse(c.F_text, xvars);
  c.f = Expression::parse(c.f_text, xvars);
  read("bvp.F", [&](const std::string& s) {
    c.F = Expression::parse(s, xvars);
    c.F_text = c.F.text();
  });
  read("bvp.f", [&](const std::string& s) {
    c.f = Expression::parse(s, xvars);
    c.f_text = c.f.text();
  });

  c.center = 0.5 * (c.lower + c.upper);
  c.anchor = c.center;
  if (d >= 1) c.anchor[d - 1] = c.lower[d - 1];
  read("probe.kind", [&](const std::string& s) {
    if (s != "interior" && s != "boundary") throw ValidationError("probe.kind: expected interior or boundary, got '" + s + "'");
    c.probe_kind = s;
  });
  read("probe.center", [&](const std::string& s) { c.center = point("probe.center", s, d); });
  read("probe.anchor", [&](const std::string& s) { c.anchor = point("probe.anchor", s, d); });
  auto positive = [&](const std::string& key, double& dst) {
    read(key, [&](const std::string& s) {
      dst = number(key, s);
      if (!(dst > 0.0)) throw ValidationError(key + ": expected a positive number, got '" + s + "'");
    });
  };
  positive("probe.radius", c.radius);
  positive("probe.r", c.approx_r);
  positive("probe.p", c.p);
  positive("probe.theta", c.theta);
  positive("probe.alpha", c.alpha);
  positive("probe.rho", c.rho);
  positive("tolerance.cell", c.cell_tol);
  positive("tolerance.solve", c.solve_tol);
  read("probe.two_scale", [&](const std::string& s) { c.two_scale = boolean("probe.two_scale", s); });
  if (c.p > 0.0 && !(c.p > d)) errors.push_back("probe.p: must exceed the dimension " + std::to_string(d));
  if (c.theta > 1.0) errors.push_back("probe.theta: must lie in (0, 1]");
  if (!(c.alpha < 1.0)) errors.push_back("probe.alpha: must lie in (0, 1)");
  if (c.radius == 0.0) {
    double dist = INFINITY;
    for (int a = 0; a < d; ++a) dist = std::min({dist, c.center[a] - c.lower[a], c.upper[a] - c.center[a]});
    c.radius = 0.5 * dist;
  }
  read("seed", [&](const std::string& s) { c.seed = static_cast<std::uint64_t>(integer("seed", s, 0)); });
  read("output", [&](const std::string& s) { c.output = s; });
  read("cache", [&](const std::string& s) { c.cache = s; });

  read("coefficient", [&](const std::string& s) {
    c.coefficient = CoefficientSpec::parse(s);
    c.coefficient_text = c.coefficient.serialize();
  });

  if (errors.empty()) {
    try {
      const auto ladders = c.ladders();
      const CoefficientField field = make_field(c.coefficient, d, c.scale_count());
      if (c.theta == 0.0) c.theta = field.metadata().theta;
      for (std::size_t i = 0; i < ladders.size(); ++i) {
        const ScaleLadder& L = ladders[i];
        if (L.separation()) {
          const SeparationReport sep = check_separation(L);
          if (!sep.satisfied)
            errors.push_back("ladder.N: well-separation fails for eps = " + std::to_string(L.eps(1)) + " at k = " +
                             std::to_string(sep.worst_k) + " (slack " + std::to_string(sep.slack) + ")");
        }
        Feasibility fz;
        fz.eps = c.scales.empty() ? c.eps[i] : L.eps(1);
        fz.cells = c.cells_for(L);
        fz.nodes = 1;
        for (int n : fz.cells) fz.nodes *= n + 1;
        // coefficient tensor, solution, rhs and CG work vectors
        fz.memory_mb = fz.nodes * 8.0 * (d * d + 8) / 1048576.0;
        fz.feasible = fz.nodes <= c.max_nodes;
        if (!fz.feasible)
          c.warnings.push_back("eps = " + std::to_string(fz.eps) + " needs " + std::to_string(fz.nodes) +
                               " nodes (about " + std::to_string(static_cast<int>(fz.memory_mb)) +
                               " MB), above resolution.max_nodes; it will be skipped");
        c.feasibility.push_back(fz);
      }
    } catch (const ValidationError& e) {
      errors.push_back(e.what());
    }
  }
  if (!errors.empty()) throw ConfigError(errors);

  for (const auto& [k, v] : kv) c.canonical += k + "=" + v + "\n";
  c.hash = fnv1a(c.canonical);
  return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (!bytes) throw ValidationError("config file not found: " + path.string());
  return parse_config_text(std::string(bytes->begin(), bytes->end()));
}

}  // namespace reiterate
