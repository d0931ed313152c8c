#pragma once

#include "reiterate/cache.hpp"
#include "reiterate/cell.hpp"
#include "reiterate/coeff.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace reiterate {

struct CascadeConfig {
  int cell_nodes = 0;  // per axis; 0 picks 256 in 1D, 128 in 2D
  int y_samples = 0;   // per axis of each fast slot; 0 picks cell_nodes in 1D, 16 in 2D
  int x_samples = 32;  // cells per axis of the x box
  Point x_lower;       // x box; defaults to [0, 1]^d
  Point x_upper;
  double tol = 1e-10;  // cell solver tolerance
  int jobs = 1;
  bool keep_correctors = true;  // keep the finest-level correctors

  int resolved_cell_nodes(int d) const { return cell_nodes > 0 ? cell_nodes : (d == 1 ? 256 : 128); }
  int resolved_y_samples(int d) const { return y_samples > 0 ? y_samples : (d == 1 ? resolved_cell_nodes(d) : 16); }
  /// Canonical text for cache keys.
  std::string describe(int d) const;
};

/// Sampling of one slow slot: a box grid for x, a periodic grid for y_k,
/// or a single sample when the field does not depend on the slot.
struct SlotSampling {
  bool active = false;
  Grid grid = Grid::periodic(1, 4);
  Index count() const { return active ? grid.node_count() : 1; }
};

/// A_l(x, y_1, ..., y_l) sampled on a tensor grid over its slots and
/// interpolated multilinearly (periodically in the y slots).
class TensorField {
public:
  TensorField(int dim, int level, std::vector<SlotSampling> slots);

  int dim() const { return dim_; }
  int level() const { return level_; }
  const std::vector<SlotSampling>& slots() const { return slots_; }
  Index sample_count() const { return static_cast<Index>(values_.size()); }

  /// Slot coordinates of a flat sample index; inactive slots report zero.
  Point slot_coord(Index sample, int slot) const;
  std::vector<Index> slot_indices(Index sample) const;
  Index flat(const std::vector<Index>& per_slot) const;

  const Tensor& value(Index sample) const { return values_[sample]; }
  void set_value(Index sample, const Tensor& t) { values_[sample] = t; }

  /// `y` points at `level()` fast arguments.
  Tensor operator()(const Point& x, const Point* y) const;
  bool is_constant() const;

  double lambda_min() const;
  double lambda_max() const;

private:
  int dim_;
  int level_;
  std::vector<SlotSampling> slots_;
  std::vector<Index> stride_;
  std::vector<Tensor> values_;
};

/// One (slow sample, corner weight) pair of a multilinear stencil.
struct Corner {
  Index index;
  double weight;
};
/// Multilinear stencil of `p` on a slot sampling (wraps periodic grids,
/// clamps boxes).
std::vector<Corner> slot_stencil(const SlotSampling& slot, const Point& p);

/// Finest-level correctors chi_n^j(x, y_1..y_{n-1}; y_n) over the slow
/// samples of A_{n-1}, each stored on the cell grid.
class CorrectorField {
public:
  CorrectorField() = default;
  CorrectorField(std::shared_ptr<const TensorField> layout, Grid cell_grid, std::vector<GridFunctiond> samples);

  bool empty() const { return samples_.empty(); }
  int dim() const { return cell_grid_.dim(); }
  const Grid& cell_grid() const { return cell_grid_; }

  /// chi^j at slow arguments (x, y[0..n-2]) and fast argument y_n (j is 0-based).
  double operator()(int j, const Point& x, const Point* slow_y, const Point& fast) const;

private:
  std::shared_ptr<const TensorField> layout_;
  Grid cell_grid_ = Grid::periodic(1, 4);
  std::vector<GridFunctiond> samples_;
};

/// A level of the cascade seen as a function of (x, y_1..y_level).
struct LevelField {
  int dim = 1;
  int level = 0;
  std::function<Tensor(const Point& x, const Point* y)> eval;
  std::vector<bool> depends;  // [x, y_1, ..., y_level]
};
LevelField as_level(const CoefficientField& field);
LevelField as_level(std::shared_ptr<const TensorField> field, const std::vector<bool>& depends);

struct DescendStats {
  Index solves = 0;
  Index hits = 0;
  double max_residual = 0.0;
  int max_iterations = 0;
};

/// Freezes the slow slots of A_l at every tensor sample, solves the cell
/// problem in y_l and returns the sampled A_{l-1}. When `correctors` is not
/// null the per-sample correctors are kept. A cell failure aborts with the
/// offending sample in the message.
TensorField descend(const LevelField& field, std::uint64_t field_hash, const CascadeConfig& config,
                    CorrectorCache& cache, std::vector<GridFunctiond>* correctors = nullptr,
                    DescendStats* stats = nullptr);

struct HolderReport {
  int level = 0;
  double theta = 1.0;
  double constant = 0.0;             // max quotient over all tested pairs
  std::vector<double> by_separation;  // max quotient per dyadic step 1, 2, 4, ...
};

/// Hölder quotients |A(s) - A(s')| / |s - s'|^theta over sample pairs at
/// dyadic separations along each active slot axis. Requires at least 8
/// samples along every active axis.
HolderReport holder_check(const TensorField& field, double theta);

struct CascadeResult {
  std::vector<std::shared_ptr<const TensorField>> levels;  // levels[l] = A_l for l < n; A_n is the field itself
  CorrectorField finest;
  std::vector<HolderReport> holder;  // per level l < n, skipped where undersampled
  std::vector<DescendStats> stats;   // per descend step, finest first
  Index hits = 0;
  Index solves = 0;

  const TensorField& effective() const { return *levels.front(); }
};

/// Runs descend n times: A_n = field, ..., A_0 = Â over x.
CascadeResult homogenize_all(const CoefficientField& field, const CascadeConfig& config, CorrectorCache& cache);

/// Levels, coarse-sample tensors, Hölder reports and stats as JSON text.
std::string cascade_summary_json(const CascadeResult& result, const CoefficientField& field);

}  // namespace reiterate
