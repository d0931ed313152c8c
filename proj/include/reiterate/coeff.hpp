#pragma once

#include "reiterate/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace reiterate {

/// Upper bound on the number of fast slots a field may carry.
inline constexpr int kMaxScales = 4;

/// Ellipticity and regularity constants of a coefficient field.
///
/// Eigenvalues of every value lie in [mu, 1/mu]. The field is Hölder of
/// order `theta` with constant `holder_L` jointly in (x, y_1, ..., y_{n-1})
/// measured in the spectral norm; the last slot is unconstrained.
struct FieldMetadata {
  double mu = 1.0;
  double lambda_min = 1.0;  // eigenvalue extremes (analytic or sampled)
  double lambda_max = 1.0;
  double theta = 1.0;
  double holder_L = 0.0;
  bool smooth_last = true;
};

/// Family tag plus arguments. Leaf arguments are expression strings;
/// `sum`, `product` and the base of `modulated` hold nested specs.
///
///   constant(a) | constant(a11, a12, a22)
///   laminate(f_1, ..., f_n)          scalar factor f_k(t) with t = first component of y_k
///   checkerboard(a1, a2, sharpness)  d = 2, one fast slot
///   modulated(base, c, amp, k1[, k2]) base * (c + amp sin(2 pi k.x))
///   scalar(expr) | matrix(e11[, e12, e22])  variables x1, x2, yK_I (yK = yK_1)
///   sum(A, B) | product(A, B)
struct CoefficientSpec {
  std::string tag;
  std::vector<std::string> params;
  std::vector<CoefficientSpec> children;

  static CoefficientSpec parse(const std::string& text);
  /// Canonical text form; `parse(s.serialize()) == s`.
  std::string serialize() const;
  bool operator==(const CoefficientSpec&) const = default;
};

/// A(x, y_1, ..., y_n) with its constants. Evaluators are pure and may be
/// called concurrently.
class CoefficientField {
public:
  /// `y` points at `scales()` fast arguments.
  using Evaluator = std::function<Tensor(const Point& x, const Point* y)>;

  CoefficientField(int dim, int scales, Evaluator eval, FieldMetadata meta, std::string canonical,
                   std::vector<bool> depends);

  int dim() const { return dim_; }
  int scales() const { return scales_; }
  Tensor operator()(const Point& x, const Point* y) const { return eval_(x, y); }
  Tensor operator()(const Point& x, const std::vector<Point>& y) const;

  const FieldMetadata& metadata() const { return meta_; }
  bool depends_on_x() const { return depends_[0]; }
  /// Slot index k is 1-based.
  bool depends_on_slot(int k) const { return depends_[k]; }
  const std::vector<bool>& dependencies() const { return depends_; }

  const std::string& canonical() const { return canonical_; }
  std::uint64_t hash() const { return hash_; }

private:
  int dim_;
  int scales_;
  Evaluator eval_;
  FieldMetadata meta_;
  std::string canonical_;
  std::vector<bool> depends_;
  std::uint64_t hash_;
};

/// Builds the field for `spec` with `scales` fast slots. Families using fewer
/// slots than requested ignore the extra ones (dummy variables). Throws
/// ValidationError on parameters that break ellipticity.
CoefficientField make_field(const CoefficientSpec& spec, int dim, int scales);

/// Sampled checks of ellipticity, unit periodicity per slot, symmetry and the
/// Hölder bound. Points are drawn from [0,1]^d for x and each slot.
struct FieldCheck {
  bool elliptic = true;
  bool periodic = true;
  bool symmetric = true;
  bool holder = true;
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  double worst_periodicity = 0.0;
  double worst_holder_ratio = 0.0;  // sampled quotient / recorded L
  int samples = 0;
  std::uint64_t seed = 0;
  bool ok() const { return elliptic && periodic && symmetric && holder; }
};
FieldCheck check_field(const CoefficientField& field, int samples = 10000, std::uint64_t seed = 0);

/// Scales 1 > eps_1 > ... > eps_n > 0 with an optional separation exponent N.
class ScaleLadder {
public:
  explicit ScaleLadder(std::vector<double> scales, std::optional<int> separation = std::nullopt);
  /// eps_k = eps^{lambda_k}.
  static ScaleLadder power_law(double eps, const std::vector<double>& lambda,
                               std::optional<int> separation = std::nullopt);

  int size() const { return static_cast<int>(eps_.size()); }
  /// 1-based: eps(1) is the coarsest scale.
  double eps(int k) const { return eps_[k - 1]; }
  double finest() const { return eps_.back(); }
  const std::vector<double>& scales() const { return eps_; }
  std::optional<int> separation() const { return N_; }

  /// eps_1 + eps_2/eps_1 + ... + eps_n/eps_{n-1}.
  double rate_expression() const;

private:
  std::vector<double> eps_;
  std::optional<int> N_;
};

struct SeparationReport {
  bool satisfied = true;
  int worst_k = 0;  // 0 when n = 1 (no condition)
  double slack = 0.0;
  std::vector<double> slacks;  // per k = 1..n-1
};

/// Slack log(eps_k/eps_{k-1}) - N log(eps_{k+1}/eps_k) per k with eps_0 = 1.
/// Requires the ladder to carry N.
SeparationReport check_separation(const ScaleLadder& ladder);

/// Smallest N in [1, max_N] satisfying the separation condition, or nullopt.
std::optional<int> minimal_separation_exponent(const ScaleLadder& ladder, int max_N = 64);

/// A(x, x/eps_1, ..., x/eps_n).
Tensor evaluate_multiscale(const CoefficientField& field, const ScaleLadder& ladder, const Point& x);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes, std::uint64_t seed = 0xcbf29ce484222325ull);
std::string hex64(std::uint64_t v);

}  // namespace reiterate
