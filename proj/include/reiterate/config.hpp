#pragma once

#include "reiterate/coeff.hpp"
#include "reiterate/expression.hpp"
#include "reiterate/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace reiterate {

/// All schema violations of one config file, one line each.
class ConfigError : public ValidationError {
public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

private:
  std::vector<std::string> errors_;
};

/// Grid size a ladder implies at the configured resolution.
struct Feasibility {
  double eps = 0.0;  // sweep value, or eps_1 for explicit scales
  std::vector<int> cells;
  Index nodes = 0;
  double memory_mb = 0.0;
  bool feasible = true;
};

/// Experiment description read from a `key = value` file; see the README
/// for the key list. Values are validated at parse time.
struct ExperimentConfig {
  int dimension = 1;
  std::string coefficient_text;
  CoefficientSpec coefficient;

  std::vector<double> lambda;  // eps_k = eps^lambda_k
  std::vector<double> eps;     // sweep values for the power law
  std::vector<double> scales;  // explicit ladder, exclusive with lambda/eps
  std::optional<int> separation;

  Point lower;
  Point upper;
  int cells_per_finest = 0;  // 0 picks 256 in 1D, 16 in 2D
  Index max_nodes = Index(1) << 22;

  int cell_nodes = 0;
  int cell_samples = 0;
  int x_samples = 32;
  std::vector<double> cell_frozen;  // x then y_1..y_{n-1} for the `cell` subcommand

  std::string F_text = "1";
  std::string f_text = "0";
  Expression F;
  Expression f;

  std::string probe_kind = "interior";  // interior | boundary
  Point center;
  Point anchor;
  double radius = 0.0;  // R; 0 picks half the distance from the centre to the boundary
  double approx_r = 0.25;
  double p = 0.0;      // 0 picks d + 1
  double theta = 0.0;  // 0 takes the field's Hölder order
  double alpha = 0.5;
  double rho = 1.0;
  bool two_scale = false;

  double cell_tol = 1e-10;
  double solve_tol = 1e-10;
  std::uint64_t seed = 0;
  std::string output = "out";
  std::string cache;  // empty: <output>/cache

  std::string canonical;  // sorted key=value lines
  std::uint64_t hash = 0;
  std::vector<Feasibility> feasibility;
  std::vector<std::string> warnings;

  int scale_count() const { return static_cast<int>(scales.empty() ? lambda.size() : scales.size()); }
  /// One ladder per sweep value, or the explicit ladder.
  std::vector<ScaleLadder> ladders() const;
  double resolved_p() const { return p > 0.0 ? p : dimension + 1.0; }
  /// Cells per axis putting `cells_per_finest` cells on each eps_n.
  std::vector<int> cells_for(const ScaleLadder& ladder) const;
  double F_at(const Point& x) const;
  double f_at(const Point& x) const;
};

ExperimentConfig parse_config_text(const std::string& text);
/// Throws ValidationError when the file is missing, ConfigError on schema
/// violations.
ExperimentConfig parse_config(const std::filesystem::path& path);

}  // namespace reiterate
