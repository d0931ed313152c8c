#include "reiterate/coeff.hpp"

#include "reiterate/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace reiterate {

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------- spec text

namespace {

std::string strip(const std::string& s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  return out;
}

std::string canonical_tag(const std::string& tag) {
  if (tag == "laminate1d") return "laminate";
  if (tag == "checkerboard2d" || tag == "smooth-checkerboard2d") return "checkerboard";
  if (tag == "slow-modulated") return "modulated";
  return tag;
}

bool is_known_tag(const std::string& t) {
  static const char* tags[] = {"constant", "laminate", "checkerboard", "modulated", "scalar", "matrix", "sum", "product"};
  return std::find_if(std::begin(tags), std::end(tags), [&](const char* s) { return t == s; }) != std::end(tags);
}

// Splits "tag(a, b(c, d), e)" into the tag and its top-level arguments.
void split_call(const std::string& text, std::string& tag, std::vector<std::string>& args) {
  const std::string s = strip(text);
  const auto open = s.find('(');
  if (open == std::string::npos || s.back() != ')')
    throw ValidationError("coefficient spec '" + text + "': expected family(arguments)");
  tag = s.substr(0, open);
  args.clear();
  int depth = 0;
  std::string cur;
  for (std::size_t i = open + 1; i + 1 < s.size(); ++i) {
    const char c = s[i];
    if (c == '(') ++depth;
    if (c == ')' && --depth < 0) throw ValidationError("coefficient spec '" + text + "': unbalanced parentheses");
    if (c == ',' && depth == 0) {
      args.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (depth != 0) throw ValidationError("coefficient spec '" + text + "': unbalanced parentheses");
  if (!cur.empty() || !args.empty()) args.push_back(cur);
  for (const auto& a : args)
    if (a.empty()) throw ValidationError("coefficient spec '" + text + "': empty argument");
}

}  // namespace

CoefficientSpec CoefficientSpec::parse(const std::string& text) {
  CoefficientSpec spec;
  std::vector<std::string> args;
  split_call(text, spec.tag, args);
  spec.tag = canonical_tag(spec.tag);
  if (!is_known_tag(spec.tag))
    throw ValidationError("coefficient spec: unknown family '" + spec.tag +
                          "' (expected constant, laminate, checkerboard, modulated, scalar, matrix, sum, product)");
  if (spec.tag == "sum" || spec.tag == "product") {
    if (args.size() != 2) throw ValidationError("coefficient spec: " + spec.tag + " takes two fields");
    for (const auto& a : args) spec.children.push_back(parse(a));
  } else if (spec.tag == "modulated") {
    if (args.size() < 4 || args.size() > 5)
      throw ValidationError("coefficient spec: modulated(base, c, amp, k1[, k2]) expected");
    spec.children.push_back(parse(args[0]));
    spec.params.assign(args.begin() + 1, args.end());
  } else {
    if (args.empty()) throw ValidationError("coefficient spec: " + spec.tag + " needs arguments");
    spec.params = args;
  }
  return spec;
}

std::string CoefficientSpec::serialize() const {
  std::string out = tag + "(";
  bool first = true;
  for (const auto& c : children) {
    if (!first) out += ",";
    out += c.serialize();
    first = false;
  }
  for (const auto& p : params) {
    if (!first) out += ",";
    out += strip(p);
    first = false;
  }
  return out + ")";
}

// ------------------------------------------------------------------- fields

CoefficientField::CoefficientField(int dim, int scales, Evaluator eval, FieldMetadata meta, std::string canonical,
                                   std::vector<bool> depends)
    : dim_(dim), scales_(scales), eval_(std::move(eval)), meta_(meta), canonical_(std::move(canonical)),
      depends_(std::move(depends)) {
  if (dim_ < 1 || dim_ > 2) throw ValidationError("coefficient field: dimension must be 1 or 2");
  if (scales_ < 1 || scales_ > kMaxScales)
    throw ValidationError("coefficient field: between 1 and " + std::to_string(kMaxScales) + " fast scales supported");
  depends_.resize(scales_ + 1, false);
  hash_ = fnv1a(canonical_);
}

Tensor CoefficientField::operator()(const Point& x, const std::vector<Point>& y) const {
  if (static_cast<int>(y.size()) != scales_) throw ValidationError("coefficient field: wrong number of fast arguments");
  return eval_(x, y.data());
}

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double spectral_norm(const Tensor& a) {
  const auto [lo, hi] = eigen_range(0.5 * (a + a.transpose()));
  return std::max(std::abs(lo), std::abs(hi));
}

double constant_param(const std::string& text, const std::string& what) {
  const Expression e = Expression::parse(text, {});
  const double v = e(nullptr);
  if (!std::isfinite(v)) throw ValidationError("coefficient parameter " + what + " = '" + text + "' is not finite");
  return v;
}

// Factor f(t) on [0,1]: extremes and a Lipschitz bound from dense sampling.
struct FactorStats {
  double min, max, abs_max, slope;
};
FactorStats factor_stats(const Expression& f) {
  constexpr int kSamples = 8192;
  FactorStats s{INFINITY, -INFINITY, 0.0, 0.0};
  double prev = 0.0;
  for (int i = 0; i <= kSamples; ++i) {
    const double t = double(i) / kSamples;
    const double v = f(&t);
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
    s.abs_max = std::max(s.abs_max, std::abs(v));
    if (i > 0) s.slope = std::max(s.slope, std::abs(v - prev) * kSamples);
    prev = v;
  }
  s.slope *= 1.001;
  return s;
}

void set_mu(FieldMetadata& m) {
  if (!(m.lambda_min > 0.0)) throw ValidationError("coefficient field is not uniformly elliptic (eigenvalue <= 0)");
  m.mu = std::min(m.lambda_min, 1.0 / m.lambda_max);
}

// Sampled eigen range and Lipschitz constant for composite fields. The
// estimates carry a safety margin because sampling can miss extremes.
FieldMetadata sampled_metadata(int d, int n, const CoefficientField::Evaluator& eval, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  FieldMetadata m;
  double lo = INFINITY, hi = -INFINITY, lip = 0.0;
  std::vector<Point> y(n, Point::Zero(d)), y2(n, Point::Zero(d));
  auto draw = [&](Point& x) {
    x = Point(d);
    for (int a = 0; a < d; ++a) x[a] = U(rng);
  };
  for (int s = 0; s < 4096; ++s) {
    Point x;
    draw(x);
    for (auto& p : y) draw(p);
    const Tensor A = eval(x, y.data());
    const auto [l, h] = eigen_range(A);
    lo = std::min(lo, l);
    hi = std::max(hi, h);
    // Joint perturbation of x and the non-last slots.
    const double delta = std::pow(10.0, -3.0 * U(rng));
    Point x2 = x;
    double norm2 = 0.0;
    std::vector<double> dir;
    for (int k = 0; k < n * d; ++k) dir.push_back(U(rng) - 0.5);
    for (auto& v : dir) norm2 += v * v;
    const double scale = delta / std::sqrt(norm2);
    for (int a = 0; a < d; ++a) x2[a] += dir[a] * scale;
    y2 = y;
    for (int k = 0; k + 1 < n; ++k)
      for (int a = 0; a < d; ++a) y2[k][a] += dir[(k + 1) * d + a] * scale;
    double actual = 0.0;
    for (int a = 0; a < d; ++a) actual += std::pow(x2[a] - x[a], 2);
    for (int k = 0; k + 1 < n; ++k)
      for (int a = 0; a < d; ++a) actual += std::pow(y2[k][a] - y[k][a], 2);
    if (actual > 0) lip = std::max(lip, spectral_norm(eval(x2, y2.data()) - A) / std::sqrt(actual));
  }
  m.lambda_min = 0.98 * lo;
  m.lambda_max = 1.02 * hi;
  m.theta = 1.0;
  m.holder_L = 1.5 * lip;
  if (!(lo > 0.0)) throw ValidationError("coefficient field is not uniformly elliptic (sampled eigenvalue <= 0)");
  set_mu(m);
  return m;
}

struct Built {
  CoefficientField::Evaluator eval;
  FieldMetadata meta;
  std::vector<bool> depends;  // [x, slot 1..n]
};

std::vector<std::string> variable_names(int d, int n) {
  std::vector<std::string> names;
  for (int a = 1; a <= d; ++a) names.push_back("x" + std::to_string(a));
  for (int k = 1; k <= n; ++k)
    for (int a = 1; a <= d; ++a) names.push_back("y" + std::to_string(k) + "_" + std::to_string(a));
  for (int k = 1; k <= n; ++k) names.push_back("y" + std::to_string(k));
  return names;
}

// Fills the variable buffer in the order of variable_names.
inline void bind(double* buf, int d, int n, const Point& x, const Point* y) {
  int i = 0;
  for (int a = 0; a < d; ++a) buf[i++] = x[a];
  for (int k = 0; k < n; ++k)
    for (int a = 0; a < d; ++a) buf[i++] = y[k][a];
  for (int k = 0; k < n; ++k) buf[i++] = y[k][0];
}

std::vector<bool> expression_dependencies(const Expression& e, int d, int n) {
  std::vector<bool> dep(n + 1, false);
  for (int a = 0; a < d; ++a) dep[0] = dep[0] || e.uses(a);
  for (int k = 0; k < n; ++k) {
    for (int a = 0; a < d; ++a) dep[k + 1] = dep[k + 1] || e.uses(d + k * d + a);
    dep[k + 1] = dep[k + 1] || e.uses(d + n * d + k);
  }
  return dep;
}

Built build(const CoefficientSpec& spec, int d, int n, std::uint64_t seed);

Built build_constant(const CoefficientSpec& spec, int d, int n) {
  const auto& p = spec.params;
  Tensor A(d, d);
  if (p.size() == 1) {
    A = constant_param(p[0], "constant") * identity_tensor(d);
  } else if (p.size() == 3 && d == 2) {
    A << constant_param(p[0], "a11"), constant_param(p[1], "a12"), constant_param(p[1], "a12"),
        constant_param(p[2], "a22");
  } else {
    throw ValidationError("constant(a) or, in d = 2, constant(a11, a12, a22) expected");
  }
  const auto [lo, hi] = eigen_range(A);
  if (!(lo > 0.0)) throw ValidationError("constant coefficient is not positive definite");
  Built b;
  b.eval = [A](const Point&, const Point*) { return A; };
  b.meta.lambda_min = lo;
  b.meta.lambda_max = hi;
  b.meta.holder_L = 0.0;
  set_mu(b.meta);
  b.depends.assign(n + 1, false);
  return b;
}

Built build_laminate(const CoefficientSpec& spec, int d, int n) {
  const int m = static_cast<int>(spec.params.size());
  if (m > n)
    throw ValidationError("laminate has " + std::to_string(m) + " factors but only " + std::to_string(n) +
                          " fast scales are configured");
  std::vector<Expression> f;
  std::vector<FactorStats> st;
  for (const auto& p : spec.params) {
    f.push_back(Expression::parse(p, {"t"}));
    st.push_back(factor_stats(f.back()));
    if (!(st.back().min > 0.0))
      throw ValidationError("laminate factor '" + p + "' is not positive on [0,1] (min " +
                            std::to_string(st.back().min) + "); ellipticity fails");
  }
  Built b;
  b.eval = [f, d](const Point&, const Point* y) {
    double v = 1.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double t = y[k][0];
      v *= f[k](&t);
    }
    return Tensor(v * identity_tensor(d));
  };
  double lo = 1.0, hi = 1.0;
  for (const auto& s : st) {
    lo *= s.min;
    hi *= s.max;
  }
  b.meta.lambda_min = lo;
  b.meta.lambda_max = hi;
  // Lipschitz in (y_1, ..., y_{n-1}): Cauchy-Schwarz over the slot gradients.
  double l2 = 0.0;
  for (int k = 0; k < std::min(m, n - 1); ++k) {
    double others = 1.0;
    for (int j = 0; j < m; ++j)
      if (j != k) others *= st[j].abs_max;
    l2 += std::pow(st[k].slope * others, 2);
  }
  b.meta.holder_L = std::sqrt(l2);
  set_mu(b.meta);
  b.depends.assign(n + 1, false);
  for (int k = 0; k < m; ++k) b.depends[k + 1] = !f[k].is_constant();
  return b;
}

Built build_checkerboard(const CoefficientSpec& spec, int d, int n) {
  if (d != 2) throw ValidationError("checkerboard requires dimension 2");
  if (spec.params.size() != 3) throw ValidationError("checkerboard(a1, a2, sharpness) expected");
  const double a1 = constant_param(spec.params[0], "a1");
  const double a2 = constant_param(spec.params[1], "a2");
  const double s = constant_param(spec.params[2], "sharpness");
  if (!(a1 > 0.0 && a2 > 0.0)) throw ValidationError("checkerboard phases must be positive");
  if (!(s >= 0.0)) throw ValidationError("checkerboard sharpness must be nonnegative");
  const double la = std::log(a1), lb = std::log(a2);
  Built b;
  // Logistic blend of the log-phases; the blend is odd under half-period
  // shifts, so the two phases are exchanged by a translation.
  b.eval = [la, lb, s](const Point&, const Point* y) {
    const double p = s * std::sin(kTwoPi * y[0][0]) * std::sin(kTwoPi * y[0][1]);
    const double sig = 1.0 / (1.0 + std::exp(-p));
    return Tensor(std::exp(la + (lb - la) * sig) * identity_tensor(2));
  };
  b.meta.lambda_min = std::min(a1, a2);
  b.meta.lambda_max = std::max(a1, a2);
  b.meta.holder_L = n > 1 ? b.meta.lambda_max * std::abs(lb - la) * 0.25 * s * kTwoPi * (1.0 + 1e-9) : 0.0;
  set_mu(b.meta);
  b.depends.assign(n + 1, false);
  b.depends[1] = a1 != a2;
  return b;
}

Built build_modulated(const CoefficientSpec& spec, int d, int n, std::uint64_t seed) {
  const Built base = build(spec.children.at(0), d, n, seed);
  const auto& p = spec.params;
  const double c = constant_param(p[0], "c");
  const double amp = constant_param(p[1], "amp");
  Point k = Point::Zero(d);
  k[0] = constant_param(p[2], "k1");
  if (p.size() == 4) {
    if (d != 2) throw ValidationError("modulated: k2 requires dimension 2");
    k[1] = constant_param(p[3], "k2");
  }
  if (!(c > 0.0) || !(std::abs(amp) < c))
    throw ValidationError("modulated: need |amp| < c with c > 0 for ellipticity (got c=" + std::to_string(c) +
                          ", amp=" + std::to_string(amp) + ")");
  Built b;
  auto be = base.eval;
  b.eval = [be, c, amp, k](const Point& x, const Point* y) {
    return Tensor(be(x, y) * (c + amp * std::sin(kTwoPi * k.dot(x))));
  };
  b.meta.lambda_min = base.meta.lambda_min * (c - std::abs(amp));
  b.meta.lambda_max = base.meta.lambda_max * (c + std::abs(amp));
  b.meta.theta = base.meta.holder_L > 0 ? base.meta.theta : 1.0;
  b.meta.holder_L =
      (c + std::abs(amp)) * base.meta.holder_L + base.meta.lambda_max * std::abs(amp) * kTwoPi * k.norm();
  b.meta.smooth_last = base.meta.smooth_last;
  set_mu(b.meta);
  b.depends = base.depends;
  b.depends[0] = b.depends[0] || (amp != 0.0 && k.norm() > 0.0);
  return b;
}

Built build_expression_field(const CoefficientSpec& spec, int d, int n, std::uint64_t seed) {
  const auto names = variable_names(d, n);
  std::vector<Expression> e;
  for (const auto& p : spec.params) e.push_back(Expression::parse(p, names));
  Built b;
  if (spec.tag == "scalar") {
    if (e.size() != 1) throw ValidationError("scalar(expr) takes one expression");
    b.eval = [e, d, n](const Point& x, const Point* y) {
      double buf[2 + 2 * kMaxScales + kMaxScales];
      bind(buf, d, n, x, y);
      return Tensor(e[0](buf) * identity_tensor(d));
    };
  } else {
    if (d == 1 && e.size() != 1) throw ValidationError("matrix(e11) expected in dimension 1");
    if (d == 2 && e.size() != 3) throw ValidationError("matrix(e11, e12, e22) expected in dimension 2");
    b.eval = [e, d, n](const Point& x, const Point* y) {
      double buf[2 + 2 * kMaxScales + kMaxScales];
      bind(buf, d, n, x, y);
      Tensor A(d, d);
      if (d == 1) {
        A(0, 0) = e[0](buf);
      } else {
        const double off = e[1](buf);
        A << e[0](buf), off, off, e[2](buf);
      }
      return A;
    };
  }
  b.depends.assign(n + 1, false);
  for (const auto& ex : e) {
    const auto dep = expression_dependencies(ex, d, n);
    for (int k = 0; k <= n; ++k) b.depends[k] = b.depends[k] || dep[k];
  }
  b.meta = sampled_metadata(d, n, b.eval, seed);
  return b;
}

Built build_combination(const CoefficientSpec& spec, int d, int n, std::uint64_t seed) {
  const Built l = build(spec.children.at(0), d, n, seed);
  const Built r = build(spec.children.at(1), d, n, seed + 1);
  Built b;
  auto le = l.eval, re = r.eval;
  if (spec.tag == "sum") {
    b.eval = [le, re](const Point& x, const Point* y) { return Tensor(le(x, y) + re(x, y)); };
  } else {
    b.eval = [le, re](const Point& x, const Point* y) {
      Tensor A = le(x, y) * re(x, y);
      if ((A - A.transpose()).norm() > 1e-12 * A.norm())
        throw ValidationError("product of coefficient fields is not symmetric; one factor must be isotropic");
      return A;
    };
  }
  b.depends.resize(n + 1);
  for (int k = 0; k <= n; ++k) b.depends[k] = l.depends[k] || r.depends[k];
  b.meta = sampled_metadata(d, n, b.eval, seed);
  b.meta.smooth_last = l.meta.smooth_last && r.meta.smooth_last;
  return b;
}

Built build(const CoefficientSpec& spec, int d, int n, std::uint64_t seed) {
  const std::string& t = spec.tag;
  if (t == "constant") return build_constant(spec, d, n);
  if (t == "laminate") return build_laminate(spec, d, n);
  if (t == "checkerboard") return build_checkerboard(spec, d, n);
  if (t == "modulated") return build_modulated(spec, d, n, seed);
  if (t == "scalar" || t == "matrix") return build_expression_field(spec, d, n, seed);
  if (t == "sum" || t == "product") return build_combination(spec, d, n, seed);
  throw ValidationError("coefficient spec: unknown family '" + t + "'");
}

}  // namespace

CoefficientField make_field(const CoefficientSpec& spec, int dim, int scales) {
  if (dim < 1 || dim > 2) throw ValidationError("coefficient field: dimension must be 1 or 2");
  if (scales < 1 || scales > kMaxScales)
    throw ValidationError("coefficient field: between 1 and " + std::to_string(kMaxScales) + " fast scales supported");
  const std::string canonical = "d=" + std::to_string(dim) + ";n=" + std::to_string(scales) + ";" + spec.serialize();
  // Metadata sampling for composite fields is seeded by the coefficient spec text so
  // that a given spec always yields the same constants.
  Built b = build(spec, dim, scales, fnv1a(canonical));
  return CoefficientField(dim, scales, std::move(b.eval), b.meta, canonical, std::move(b.depends));
}

FieldCheck check_field(const CoefficientField& field, int samples, std::uint64_t seed) {
  const int d = field.dim(), n = field.scales();
  const FieldMetadata& m = field.metadata();
  FieldCheck rep;
  rep.samples = samples;
  rep.seed = seed;
  rep.min_eigenvalue = INFINITY;
  rep.max_eigenvalue = -INFINITY;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<Point> y(n, Point::Zero(d));
  auto draw = [&](Point& p) {
    p = Point(d);
    for (int a = 0; a < d; ++a) p[a] = U(rng);
  };
  const double tol_rel = 1e-6;
  for (int s = 0; s < samples; ++s) {
    Point x;
    draw(x);
    for (auto& p : y) draw(p);
    const Tensor A = field(x, y.data());
    const double scale = std::max(1.0, A.norm());
    if ((A - A.transpose()).norm() > 1e-14 * scale) rep.symmetric = false;
    const auto [lo, hi] = eigen_range(A);
    rep.min_eigenvalue = std::min(rep.min_eigenvalue, lo);
    rep.max_eigenvalue = std::max(rep.max_eigenvalue, hi);
    if (lo < m.mu * (1.0 - tol_rel) || hi > (1.0 / m.mu) * (1.0 + tol_rel)) rep.elliptic = false;

    for (int k = 0; k < n; ++k)
      for (int a = 0; a < d; ++a) {
        std::vector<Point> ys = y;
        ys[k][a] += 1.0;
        const double diff = (field(x, ys.data()) - A).norm() / scale;
        rep.worst_periodicity = std::max(rep.worst_periodicity, diff);
      }

    // Hölder quotient in x and the non-last slots.
    const double delta = std::pow(10.0, -3.0 * U(rng));
    Point x2 = x;
    std::vector<Point> y2 = y;
    std::vector<double> dir(n * d);
    double norm2 = 0.0;
    for (auto& v : dir) {
      v = U(rng) - 0.5;
      norm2 += v * v;
    }
    const double sc = delta / std::sqrt(norm2);
    double actual = 0.0;
    for (int a = 0; a < d; ++a) {
      x2[a] += dir[a] * sc;
      actual += std::pow(x2[a] - x[a], 2);
    }
    for (int k = 0; k + 1 < n; ++k)
      for (int a = 0; a < d; ++a) {
        y2[k][a] += dir[(k + 1) * d + a] * sc;
        actual += std::pow(y2[k][a] - y[k][a], 2);
      }
    if (actual > 0.0) {
      const double q = spectral_norm(field(x2, y2.data()) - A) / std::pow(std::sqrt(actual), m.theta);
      const double bound = m.holder_L * (1.0 + tol_rel) + 1e-12;
      if (q > bound) rep.holder = false;
      if (m.holder_L > 0) rep.worst_holder_ratio = std::max(rep.worst_holder_ratio, q / m.holder_L);
    }
  }
  rep.periodic = rep.worst_periodicity <= 1e-10;
  return rep;
}

// -------------------------------------------------------------------- ladder

ScaleLadder::ScaleLadder(std::vector<double> scales, std::optional<int> separation)
    : eps_(std::move(scales)), N_(separation) {
  if (eps_.empty()) throw ValidationError("ScaleLadder: at least one scale required");
  if (static_cast<int>(eps_.size()) > kMaxScales)
    throw ValidationError("ScaleLadder: at most " + std::to_string(kMaxScales) + " scales supported");
  for (std::size_t k = 0; k < eps_.size(); ++k) {
    if (!(eps_[k] > 0.0 && eps_[k] < 1.0))
      throw ValidationError("ScaleLadder: eps_" + std::to_string(k + 1) + " = " + std::to_string(eps_[k]) +
                            " must lie in (0, 1)");
    if (k > 0 && !(eps_[k] < eps_[k - 1]))
      throw ValidationError("ScaleLadder ordering violated: need eps_1 > eps_2 > ... > eps_n, but eps_" +
                            std::to_string(k + 1) + " = " + std::to_string(eps_[k]) + " >= eps_" +
                            std::to_string(k) + " = " + std::to_string(eps_[k - 1]));
  }
  if (N_ && *N_ < 1) throw ValidationError("ScaleLadder: separation exponent N must be a positive integer");
}

ScaleLadder ScaleLadder::power_law(double eps, const std::vector<double>& lambda, std::optional<int> separation) {
  std::vector<double> s;
  for (double l : lambda) s.push_back(std::pow(eps, l));
  return ScaleLadder(std::move(s), separation);
}

double ScaleLadder::rate_expression() const {
  double r = eps_[0];
  for (std::size_t k = 1; k < eps_.size(); ++k) r += eps_[k] / eps_[k - 1];
  return r;
}

namespace {

SeparationReport separation_slacks(const std::vector<double>& eps, int N) {
  SeparationReport rep;
  rep.slack = INFINITY;
  const int n = static_cast<int>(eps.size());
  for (int k = 1; k <= n - 1; ++k) {
    const double prev = k == 1 ? 1.0 : eps[k - 2];
    const double lhs = std::log(eps[k - 1] / prev);
    const double rhs = std::log(eps[k] / eps[k - 1]);
    const double slack = lhs - N * rhs;
    rep.slacks.push_back(slack);
    if (slack < rep.slack) {
      rep.slack = slack;
      rep.worst_k = k;
    }
    // Round-off in the logs must not turn the equality case into a failure.
    const double tol = 1e-12 * (std::abs(lhs) + N * std::abs(rhs));
    if (slack < -tol) rep.satisfied = false;
  }
  if (n == 1) rep.slack = 0.0;
  return rep;
}

}  // namespace

SeparationReport check_separation(const ScaleLadder& ladder) {
  if (!ladder.separation()) throw ValidationError("check_separation: the ladder carries no separation exponent N");
  return separation_slacks(ladder.scales(), *ladder.separation());
}

std::optional<int> minimal_separation_exponent(const ScaleLadder& ladder, int max_N) {
  for (int N = 1; N <= max_N; ++N)
    if (separation_slacks(ladder.scales(), N).satisfied) return N;
  return std::nullopt;
}

Tensor evaluate_multiscale(const CoefficientField& field, const ScaleLadder& ladder, const Point& x) {
  if (ladder.size() != field.scales())
    throw ValidationError("evaluate_multiscale: ladder has " + std::to_string(ladder.size()) +
                          " scales, field expects " + std::to_string(field.scales()));
  Point y[kMaxScales];
  for (int k = 0; k < ladder.size(); ++k) y[k] = x / ladder.eps(k + 1);
  return field(x, y);
}

}  // namespace reiterate
