#include "reiterate/cascade.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>
#include <thread>

namespace reiterate {

namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Point default_lower(const CascadeConfig& c, int d) { return c.x_lower.size() == d ? c.x_lower : Point::Zero(d); }
Point default_upper(const CascadeConfig& c, int d) { return c.x_upper.size() == d ? c.x_upper : Point::Ones(d); }

double spectral_norm(const Tensor& a) {
  const auto [lo, hi] = eigen_range(0.5 * (a + a.transpose()));
  return std::max(std::abs(lo), std::abs(hi));
}

}  // namespace

std::string CascadeConfig::describe(int d) const {
  std::ostringstream s;
  const Point lo = default_lower(*this, d), hi = default_upper(*this, d);
  s << "cell=" << resolved_cell_nodes(d) << ";ys=" << resolved_y_samples(d) << ";xs=" << x_samples << ";box=";
  for (int a = 0; a < d; ++a) s << g17(lo[a]) << ":" << g17(hi[a]) << (a + 1 < d ? "," : "");
  s << ";tol=" << g17(tol);
  return s.str();
}

// -------------------------------------------------------------- TensorField

TensorField::TensorField(int dim, int level, std::vector<SlotSampling> slots)
    : dim_(dim), level_(level), slots_(std::move(slots)) {
  if (static_cast<int>(slots_.size()) != level_ + 1) throw ValidationError("TensorField: need one sampling per slot");
  stride_.assign(slots_.size(), 1);
  Index total = 1;
  for (int s = static_cast<int>(slots_.size()) - 1; s >= 0; --s) {
    stride_[s] = total;
    total *= slots_[s].count();
  }
  values_.assign(total, Tensor::Zero(dim_, dim_));
}

std::vector<Index> TensorField::slot_indices(Index sample) const {
  std::vector<Index> idx(slots_.size());
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    idx[s] = sample / stride_[s];
    sample %= stride_[s];
  }
  return idx;
}

Index TensorField::flat(const std::vector<Index>& per_slot) const {
  Index f = 0;
  for (std::size_t s = 0; s < slots_.size(); ++s) f += per_slot[s] * stride_[s];
  return f;
}

Point TensorField::slot_coord(Index sample, int slot) const {
  const auto idx = slot_indices(sample);
  if (!slots_[slot].active) return Point::Zero(dim_);
  return slots_[slot].grid.coord(idx[slot]);
}

std::vector<Corner> slot_stencil(const SlotSampling& slot, const Point& p) {
  if (!slot.active) return {{0, 1.0}};
  const Grid& g = slot.grid;
  const int d = g.dim();
  int i0[2] = {0, 0}, i1[2] = {0, 0};
  double w[2] = {0.0, 0.0};
  for (int a = 0; a < d; ++a) {
    const double h = g.spacing(a);
    double u = (p[a] - g.lower()[a]) / h;
    if (g.is_periodic()) {
      const int n = g.nodes(a);
      const double fl = std::floor(u);
      w[a] = u - fl;
      long long k = static_cast<long long>(fl) % n;
      if (k < 0) k += n;
      i0[a] = static_cast<int>(k);
      i1[a] = (i0[a] + 1) % n;
    } else {
      const int cells = g.cells(a);
      u = std::clamp(u, 0.0, double(cells));
      i0[a] = std::min(static_cast<int>(std::floor(u)), cells - 1);
      w[a] = u - i0[a];
      i1[a] = i0[a] + 1;
    }
  }
  if (d == 1) return {{g.flat(i0[0]), 1.0 - w[0]}, {g.flat(i1[0]), w[0]}};
  return {{g.flat(i0[0], i0[1]), (1 - w[0]) * (1 - w[1])},
          {g.flat(i1[0], i0[1]), w[0] * (1 - w[1])},
          {g.flat(i0[0], i1[1]), (1 - w[0]) * w[1]},
          {g.flat(i1[0], i1[1]), w[0] * w[1]}};
}

namespace {

// Tensor-product stencil over all slots.
std::vector<Corner> joint_stencil(const std::vector<SlotSampling>& slots, const std::vector<Index>& stride,
                                  const Point& x, const Point* y) {
  std::vector<Corner> acc{{0, 1.0}};
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const auto st = slot_stencil(slots[s], s == 0 ? x : y[s - 1]);
    std::vector<Corner> next;
    next.reserve(acc.size() * st.size());
    for (const auto& a : acc)
      for (const auto& b : st)
        if (b.weight != 0.0) next.push_back({a.index + b.index * stride[s], a.weight * b.weight});
    acc.swap(next);
  }
  return acc;
}

}  // namespace

Tensor TensorField::operator()(const Point& x, const Point* y) const {
  const auto corners = joint_stencil(slots_, stride_, x, y);
  Tensor out = Tensor::Zero(dim_, dim_);
  for (const auto& c : corners) out += c.weight * values_[c.index];
  return out;
}

bool TensorField::is_constant() const {
  return std::none_of(slots_.begin(), slots_.end(), [](const SlotSampling& s) { return s.active; });
}

double TensorField::lambda_min() const {
  double v = INFINITY;
  for (const auto& t : values_) v = std::min(v, eigen_range(t).first);
  return v;
}

double TensorField::lambda_max() const {
  double v = -INFINITY;
  for (const auto& t : values_) v = std::max(v, eigen_range(t).second);
  return v;
}

// ----------------------------------------------------------- CorrectorField

CorrectorField::CorrectorField(std::shared_ptr<const TensorField> layout, Grid cell_grid,
                               std::vector<GridFunctiond> samples)
    : layout_(std::move(layout)), cell_grid_(std::move(cell_grid)), samples_(std::move(samples)) {
  if (static_cast<Index>(samples_.size()) != layout_->sample_count())
    throw ValidationError("CorrectorField: one corrector set per slow sample required");
}

double CorrectorField::operator()(int j, const Point& x, const Point* slow_y, const Point& fast) const {
  const auto& slots = layout_->slots();
  std::vector<Corner> acc{{0, 1.0}};
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const auto st = slot_stencil(slots[s], s == 0 ? x : slow_y[s - 1]);
    std::vector<Corner> next;
    for (const auto& a : acc)
      for (const auto& b : st)
        if (b.weight != 0.0) {
          std::vector<Index> idx = layout_->slot_indices(a.index);
          idx[s] = b.index;
          next.push_back({layout_->flat(idx), a.weight * b.weight});
        }
    acc.swap(next);
  }
  double v = 0.0;
  for (const auto& c : acc) v += c.weight * interpolate(samples_[c.index], j, fast);
  return v;
}

// ----------------------------------------------------------------- descend

LevelField as_level(const CoefficientField& field) {
  LevelField l;
  l.dim = field.dim();
  l.level = field.scales();
  l.eval = [&field](const Point& x, const Point* y) { return field(x, y); };
  l.depends = field.dependencies();
  return l;
}

LevelField as_level(std::shared_ptr<const TensorField> field, const std::vector<bool>& depends) {
  LevelField l;
  l.dim = field->dim();
  l.level = field->level();
  l.depends.assign(depends.begin(), depends.begin() + l.level + 1);
  l.eval = [field](const Point& x, const Point* y) { return (*field)(x, y); };
  return l;
}

TensorField descend(const LevelField& field, std::uint64_t field_hash, const CascadeConfig& config,
                    CorrectorCache& cache, std::vector<GridFunctiond>* correctors, DescendStats* stats) {
  const int d = field.dim;
  const int l = field.level;
  if (l < 1) throw ValidationError("descend: level must be at least 1");
  const Grid cell_grid = Grid::periodic(d, config.resolved_cell_nodes(d));
  std::vector<SlotSampling> slots(l);
  if (field.depends[0]) {
    slots[0].active = true;
    slots[0].grid = Grid::box(default_lower(config, d), default_upper(config, d), config.x_samples);
  }
  for (int k = 1; k < l; ++k)
    if (field.depends[k]) {
      slots[k].active = true;
      slots[k].grid = Grid::periodic(d, config.resolved_y_samples(d));
    }
  TensorField out(d, l - 1, slots);
  const Index count = out.sample_count();
  if (correctors) correctors->assign(count, GridFunctiond(cell_grid, Shape::vector));
  const std::string cfg = config.describe(d);

  std::vector<std::exception_ptr> errors(count);
  std::vector<char> hit(count, 0);
  std::vector<double> residual(count, 0.0);
  std::vector<int> iterations(count, 0);
  std::atomic<Index> next{0};

  auto work = [&]() {
    for (Index s = next++; s < count; s = next++) {
      try {
        const Point x = out.slot_coord(s, 0);
        Point y[kMaxScales + 1];
        std::vector<double> frozen(x.data(), x.data() + d);
        for (int k = 1; k < l; ++k) {
          y[k - 1] = out.slot_coord(s, k);
          frozen.insert(frozen.end(), y[k - 1].data(), y[k - 1].data() + d);
        }
        CacheKey key{field_hash, l, cfg + ";frozen="};
        for (double v : frozen) key.sample += g17(v) + ",";
        if (auto p = cache.get(key, cell_grid)) {
          out.set_value(s, p->effective);
          if (correctors) (*correctors)[s] = std::move(p->correctors);
          hit[s] = 1;
          residual[s] = p->residual;
          iterations[s] = p->iterations;
          continue;
        }
        const CellProblem problem = CellProblem::sample(
            cell_grid,
            [&](const Point& yl) {
              Point args[kMaxScales + 1];
              for (int k = 0; k + 1 < l; ++k) args[k] = y[k];
              args[l - 1] = yl;
              return field.eval(x, args);
            },
            config.tol, frozen);
        const CorrectorSet cs = solve_corrector(problem);
        const EffectiveTensor eff = effective_tensor(problem, cs);
        if (!eff.in_range)
          throw SolverError("effective tensor spectrum [" + g17(eff.lambda_min) + ", " + g17(eff.lambda_max) +
                                "] leaves the nodal range [" + g17(problem.lambda_min) + ", " +
                                g17(problem.lambda_max) + "]; refine the cell grid",
                            {});
        CachePayload payload{eff.value, GridFunctiond(cell_grid, Shape::vector), frozen, 0.0, 0};
        for (int j = 0; j < d; ++j) payload.correctors.component(j) = cs.chi[j].component(0);
        for (std::size_t j = 0; j < cs.residuals.size(); ++j) {
          payload.residual = std::max(payload.residual, cs.residuals[j]);
          payload.iterations = std::max(payload.iterations, cs.iterations[j]);
        }
        residual[s] = payload.residual;
        iterations[s] = payload.iterations;
        cache.put(key, payload);
        out.set_value(s, eff.value);
        if (correctors) (*correctors)[s] = std::move(payload.correctors);
      } catch (...) {
        errors[s] = std::current_exception();
      }
    }
  };

  int jobs = config.jobs > 0 ? config.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  jobs = static_cast<int>(std::min<Index>(jobs, count));
  if (jobs <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  for (Index s = 0; s < count; ++s) {
    if (!errors[s]) continue;
    std::string where = "cell problem at level " + std::to_string(l) + ", sample " + std::to_string(s) + " (";
    for (int slot = 0; slot < l; ++slot) {
      const Point p = out.slot_coord(s, slot);
      where += (slot == 0 ? "x=" : " y" + std::to_string(slot) + "=");
      for (int a = 0; a < d; ++a) where += g17(p[a]) + (a + 1 < d ? "," : "");
    }
    where += "): ";
    try {
      std::rethrow_exception(errors[s]);
    } catch (const SolverError& e) {
      throw SolverError(where + e.what(), e.residual_history());
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
  if (stats) {
    stats->solves = count;
    stats->hits = std::count(hit.begin(), hit.end(), 1);
    stats->max_residual = *std::max_element(residual.begin(), residual.end());
    stats->max_iterations = *std::max_element(iterations.begin(), iterations.end());
  }
  return out;
}

// ------------------------------------------------------------------ Hölder

HolderReport holder_check(const TensorField& field, double theta) {
  HolderReport rep;
  rep.level = field.level();
  rep.theta = theta;
  const auto& slots = field.slots();
  for (std::size_t s = 0; s < slots.size(); ++s) {
    if (!slots[s].active) continue;
    const Grid& g = slots[s].grid;
    for (int a = 0; a < g.dim(); ++a) {
      const int n = g.nodes(a);
      if (n < 8)
        throw ValidationError("holder_check: slot " + std::to_string(s) + " has " + std::to_string(n) +
                              " samples along an axis; at least 8 required");
      const int max_step = g.is_periodic() ? n / 2 : g.cells(a);
      int step_index = 0;
      for (int m = 1; m <= max_step; m *= 2, ++step_index) {
        if (static_cast<int>(rep.by_separation.size()) <= step_index) rep.by_separation.push_back(0.0);
        const double dist = std::pow(m * g.spacing(a), theta);
        for (Index sample = 0; sample < field.sample_count(); ++sample) {
          auto idx = field.slot_indices(sample);
          const Index partner_node = g.neighbor(idx[s], a, m);
          if (partner_node < 0) continue;
          idx[s] = partner_node;
          const double q = spectral_norm(field.value(field.flat(idx)) - field.value(sample)) / dist;
          rep.by_separation[step_index] = std::max(rep.by_separation[step_index], q);
          rep.constant = std::max(rep.constant, q);
        }
      }
    }
  }
  return rep;
}

// ----------------------------------------------------------- homogenize_all

CascadeResult homogenize_all(const CoefficientField& field, const CascadeConfig& config, CorrectorCache& cache) {
  const int n = field.scales();
  const int d = field.dim();
  CascadeResult res;
  res.levels.resize(n);
  LevelField current = as_level(field);
  for (int l = n; l >= 1; --l) {
    std::vector<GridFunctiond> chis;
    DescendStats st;
    const bool keep = l == n && config.keep_correctors;
    auto next = std::make_shared<const TensorField>(descend(current, field.hash(), config, cache, keep ? &chis : nullptr, &st));
    res.stats.push_back(st);
    res.solves += st.solves;
    res.hits += st.hits;
    if (keep) res.finest = CorrectorField(next, Grid::periodic(d, config.resolved_cell_nodes(d)), std::move(chis));
    try {
      res.holder.push_back(holder_check(*next, field.metadata().theta));
    } catch (const ValidationError&) {
      // undersampled slot: no Hölder estimate at this level
    }
    res.levels[l - 1] = next;
    current = as_level(next, field.dependencies());
  }
  return res;
}

std::string cascade_summary_json(const CascadeResult& result, const CoefficientField& field) {
  using nlohmann::json;
  json j;
  j["field"] = field.canonical();
  j["field_hash"] = hex64(field.hash());
  j["dimension"] = field.dim();
  j["scales"] = field.scales();
  j["solves"] = result.solves;
  j["cache_hits"] = result.hits;
  auto tensor_json = [](const Tensor& t) {
    std::vector<double> v;
    for (int a = 0; a < t.rows(); ++a)
      for (int b = 0; b < t.cols(); ++b) v.push_back(t(a, b));
    return v;
  };
  json levels = json::array();
  for (std::size_t l = 0; l < result.levels.size(); ++l) {
    const TensorField& tf = *result.levels[l];
    json lj;
    lj["level"] = tf.level();
    lj["samples"] = tf.sample_count();
    std::vector<bool> active;
    for (const auto& s : tf.slots()) active.push_back(s.active);
    lj["active_slots"] = active;
    lj["lambda_min"] = tf.lambda_min();
    lj["lambda_max"] = tf.lambda_max();
    json coarse = json::array();
    const Index stride = std::max<Index>(1, tf.sample_count() / 16);
    for (Index s = 0; s < tf.sample_count(); s += stride) {
      json cj;
      cj["sample"] = s;
      cj["tensor"] = tensor_json(tf.value(s));
      coarse.push_back(cj);
    }
    lj["coarse_tensors"] = coarse;
    levels.push_back(lj);
  }
  j["levels"] = levels;
  if (result.effective().is_constant()) j["effective"] = tensor_json(result.effective().value(0));
  json holder = json::array();
  for (const auto& h : result.holder) {
    json hj;
    hj["level"] = h.level;
    hj["theta"] = h.theta;
    hj["constant"] = h.constant;
    hj["by_separation"] = h.by_separation;
    holder.push_back(hj);
  }
  j["holder"] = holder;
  return j.dump(2);
}

}  // namespace reiterate
