#include "reiterate/runner.hpp"

#include "reiterate/cascade.hpp"
#include "reiterate/cell.hpp"
#include "reiterate/config.hpp"
#include "reiterate/dirichlet.hpp"
#include "reiterate/grid_io.hpp"
#include "reiterate/probes.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <future>
#include <ostream>

namespace reiterate {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"cell", "cascade", "solve", "rate",
                                                 "excess", "certify", "approx", "clean-cache"};
  return names;
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add(const std::vector<double>& row) {
  if (row.size() != header_.size()) throw Error("CsvTable: row width does not match the header");
  rows_.push_back(row);
}

std::string CsvTable::str() const {
  auto field = [](const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + field(header_[i]);
  out += "\r\n";
  for (const auto& r : rows_) {
    for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + csv_number(r[i]);
    out += "\r\n";
  }
  return out;
}

fs::path resolve_cache_dir(const std::optional<fs::path>& flag, const std::string& config_cache, const fs::path& out_dir) {
  if (flag) return *flag;
  if (const char* env = std::getenv("REITERATE_CACHE"); env && *env) return env;
  if (!config_cache.empty()) return config_cache;
  return out_dir / "cache";
}

namespace {

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<double> flat(const Tensor& t) {
  std::vector<double> v;
  for (int a = 0; a < t.rows(); ++a)
    for (int b = 0; b < t.cols(); ++b) v.push_back(t(a, b));
  return v;
}

std::vector<std::string> tensor_header(int d) {
  if (d == 1) return {"a11"};
  return {"a11", "a12", "a21", "a22"};
}

// Runs fn(i) for i < n on up to `jobs` threads; results land by index and the
// error of the smallest failing index is rethrown.
template <typename T, typename F>
std::vector<T> parallel_map(std::size_t n, int jobs, F&& fn) {
  std::vector<std::optional<T>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  std::vector<std::future<void>> pool;
  for (int k = 1; k < threads; ++k) pool.push_back(std::async(std::launch::async, worker));
  worker();
  for (auto& f : pool) f.get();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<T> out;
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

class Session {
public:
  Session(const RunOptions& o, std::ostream& log) : opt(o), log(log) {}

  const RunOptions& opt;
  std::ostream& log;
  std::optional<ExperimentConfig> cfg;
  fs::path out_dir;
  fs::path cache_dir;
  std::unique_ptr<CorrectorCache> cache;
  ojson manifest = ojson::object();
  ojson stages = ojson::array();
  ojson outputs = ojson::array();
  std::vector<std::string> warnings;

  template <typename F>
  auto stage(const std::string& name, F&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    auto record = [&] {
      const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      stages.push_back({{"stage", name}, {"wall_seconds", dt}});
    };
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      record();
    } else {
      auto r = fn();
      record();
      return r;
    }
  }

  void write(const std::string& name, const std::string& content) {
    write_file_atomic(out_dir / name, content);
    outputs.push_back(name);
  }
  void write(const std::string& name, const GridFunctiond& f) {
    write_grid_function(out_dir / name, f);
    outputs.push_back(name);
  }

  CoefficientField field() const { return make_field(cfg->coefficient, cfg->dimension, cfg->scale_count()); }

  CascadeConfig cascade_config() const {
    CascadeConfig cc;
    cc.cell_nodes = cfg->cell_nodes;
    cc.y_samples = cfg->cell_samples;
    cc.x_samples = cfg->x_samples;
    cc.x_lower = cfg->lower;
    cc.x_upper = cfg->upper;
    cc.tol = cfg->cell_tol;
    cc.jobs = opt.jobs;
    return cc;
  }

  CascadeResult cascade(const CoefficientField& f) {
    CascadeResult r = stage("cascade", [&] { return homogenize_all(f, cascade_config(), *cache); });
    double res = 0.0;
    int its = 0;
    for (const auto& s : r.stats) res = std::max(res, s.max_residual), its = std::max(its, s.max_iterations);
    manifest["residuals"]["cell_max_residual"] = res;
    manifest["residuals"]["cell_max_iterations"] = its;
    return r;
  }

  BVP bvp(const std::vector<int>& cells) const {
    const ExperimentConfig* c = &*cfg;
    return BVP{c->lower, c->upper, [c](const Point& x) { return c->F_at(x); },
               [c](const Point& x) { return c->f_at(x); }, cells, c->solve_tol};
  }
  PointFunction F() const {
    const ExperimentConfig* c = &*cfg;
    return [c](const Point& x) { return c->F_at(x); };
  }

  /// Feasible ladders paired with their sweep value; infeasible ones warn.
  std::vector<std::pair<ScaleLadder, Feasibility>> ladders() {
    std::vector<std::pair<ScaleLadder, Feasibility>> out;
    const auto all = cfg->ladders();
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (!cfg->feasibility[i].feasible) continue;
      out.emplace_back(all[i], cfg->feasibility[i]);
    }
    if (out.empty()) throw ValidationError("no ladder is resolvable within resolution.max_nodes");
    return out;
  }

  void print_cache_stats() {
    const double rate = cache->hit_rate();
    log << "cell cache: " << cache->hits() << " hits, " << cache->misses() << " misses, hit rate "
        << std::round(1000.0 * rate) / 10.0 << "%\n";
  }
};

// ------------------------------------------------------------- subcommands

void run_cell(Session& s) {
  const ExperimentConfig& c = *s.cfg;
  const int d = c.dimension, n = c.scale_count();
  const CoefficientField field = s.field();
  std::vector<double> frozen = c.cell_frozen;
  if (frozen.empty()) {
    frozen.assign(c.lower.data(), c.lower.data() + d);
    frozen.resize(d * n, 0.0);
  }
  if (static_cast<int>(frozen.size()) != d * n)
    throw ValidationError("cell.frozen: expected " + std::to_string(d * n) + " numbers (x then y_1..y_{n-1})");
  const Point x = Eigen::Map<const Point>(frozen.data(), d);
  std::vector<Point> ys(n, Point::Zero(d));
  for (int k = 0; k + 1 < n; ++k) ys[k] = Eigen::Map<const Point>(frozen.data() + d * (k + 1), d);

  const Grid grid = Grid::periodic(d, s.cascade_config().resolved_cell_nodes(d));
  const CellProblem problem = CellProblem::sample(
      grid,
      [&](const Point& y) {
        std::vector<Point> yy = ys;
        yy[n - 1] = y;
        return field(x, yy.data());
      },
      c.cell_tol, frozen);
  SolverOptions so;
  so.tol = c.cell_tol;
  const CorrectorSet corr = s.stage("corrector", [&] { return solve_corrector(problem, so); });
  const EffectiveTensor eff = effective_tensor(problem, corr);
  const FluxMatrix fm = flux_matrix(problem, corr, eff);
  const FluxData fd = s.stage("flux_correctors", [&] { return flux_correctors(fm.B); });

  GridFunctiond chi(grid, Shape::vector);
  for (int j = 0; j < d; ++j) chi.component(j) = corr.chi[j].component(0);
  s.write("corrector.rhgf", chi);

  ojson j;
  j["field"] = field.canonical();
  j["frozen"] = frozen;
  j["cell_nodes"] = grid.nodes(0);
  j["effective_tensor"] = flat(eff.value);
  j["lambda_min"] = eff.lambda_min;
  j["lambda_max"] = eff.lambda_max;
  j["in_range"] = eff.in_range;
  j["energy"] = corr.energy;
  j["energy_bound"] = corr.energy_bound;
  j["residuals"] = corr.residuals;
  j["iterations"] = corr.iterations;
  j["flux"] = {{"max_abs_mean_b", fm.max_abs_mean},
               {"divergence_residual", fm.divergence_residual},
               {"max_abs_mean_phi", fd.max_abs_mean_phi},
               {"reconstruction_residual", fd.reconstruction_residual}};
  s.write("cell.json", j.dump(2) + "\n");
  s.manifest["residuals"]["cell_max_residual"] = *std::max_element(corr.residuals.begin(), corr.residuals.end());

  CsvTable t(tensor_header(d));
  t.add(flat(eff.value));
  s.write("cell.csv", t.str());
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.6f", eff.value(0, 0));
  s.log << "A_hat(1,1) = " << buf << " at the frozen sample; corrector energy " << corr.energy << " (bound "
        << corr.energy_bound << ")\n";
}

void run_cascade(Session& s) {
  const CoefficientField field = s.field();
  const CascadeResult r = s.cascade(field);
  s.write("cascade.json", cascade_summary_json(r, field) + "\n");
  const TensorField& a0 = r.effective();
  const int d = s.cfg->dimension;
  std::vector<std::string> header = d == 1 ? std::vector<std::string>{"x1"} : std::vector<std::string>{"x1", "x2"};
  for (auto& h : tensor_header(d)) header.push_back(h);
  CsvTable t(header);
  for (Index k = 0; k < a0.sample_count(); ++k) {
    const Point x = a0.slot_coord(k, 0);
    std::vector<double> row(x.data(), x.data() + d);
    for (double v : flat(a0.value(k))) row.push_back(v);
    t.add(row);
  }
  s.write("effective.csv", t.str());
  char buf[128];
  if (a0.is_constant())
    std::snprintf(buf, sizeof buf, "A_hat(1,1) = %.3f +- %.1e", a0.value(0)(0, 0), s.cfg->cell_tol);
  else
    std::snprintf(buf, sizeof buf, "A_hat varies in x; eigenvalues in [%.3f, %.3f]", a0.lambda_min(), a0.lambda_max());
  s.log << buf << "\n";
  if (d == 2 && a0.is_constant()) {
    const Tensor& v = a0.value(0);
    std::snprintf(buf, sizeof buf, "A_hat = [[%.3f, %.3f], [%.3f, %.3f]]", v(0, 0), v(0, 1), v(1, 0), v(1, 1));
    s.log << buf << "\n";
  }
}

void run_solve(Session& s) {
  const CoefficientField field = s.field();
  const auto [ladder, fz] = s.ladders().front();
  const CascadeResult cr = s.cascade(field);
  const BVP b = s.bvp(fz.cells);
  const SolveResult ue = s.stage("solve_multiscale", [&] { return solve_multiscale(b, field, ladder); });
  const SolveResult u0 = s.stage("solve_homogenized", [&] { return solve_homogenized(b, cr.effective()); });
  const TwoScaleApproximant ts =
      s.stage("two_scale", [&] { return two_scale_expansion(ue.solution, u0.solution, cr.finest, ladder); });
  s.write("u_eps.rhgf", ue.solution);
  s.write("u0.rhgf", u0.solution);
  s.write("w.rhgf", ts.w);
  CsvTable t({"eps", "w_H1", "diff_L2", "grad_u0_layer", "hess_u0_interior", "iterations"});
  t.add({fz.eps, ts.norms.w_H1, ts.norms.diff_L2, ts.norms.grad_u0_layer, ts.norms.hess_u0_interior,
         double(ue.report.iterations + u0.report.iterations)});
  s.write("norms.csv", t.str());
  s.manifest["residuals"]["solve_relative_residual"] = ue.report.relative_residual;
  s.log << "||u_eps - u0||_L2 = " << ts.norms.diff_L2 << ", ||w||_H1 = " << ts.norms.w_H1 << "\n";
}

void run_rate(Session& s) {
  const ExperimentConfig& c = *s.cfg;
  if (c.lambda.empty()) throw ValidationError("rate: needs ladder.lambda and ladder.eps");
  const CoefficientField field = s.field();
  const CascadeResult cr = s.cascade(field);
  RateOptions ro;
  ro.cells_per_finest = c.cells_per_finest;
  ro.max_nodes = c.max_nodes;
  ro.two_scale = c.two_scale;
  const RateReport rep = s.stage("rate_sweep", [&] { return rate_sweep(field, c.lambda, c.eps, s.bvp({}), cr, ro); });
  for (const auto& w : rep.warnings) s.warnings.push_back(w);
  CsvTable t({"eps", "eps_rate_expr", "l2_error", "slope_so_far"});
  for (const auto& r : rep.rows) t.add({r.eps, r.rate_expr, r.l2_error, r.slope_so_far});
  s.write("rate.csv", t.str());
  if (c.two_scale) {
    CsvTable n({"eps", "w_H1", "diff_L2", "grad_u0_layer", "hess_u0_interior", "iterations"});
    for (const auto& r : rep.rows)
      n.add({r.eps, r.norms.w_H1, r.norms.diff_L2, r.norms.grad_u0_layer, r.norms.hess_u0_interior,
             double(r.iterations)});
    s.write("norms.csv", n.str());
  }
  s.manifest["fit"] = {{"slope", rep.fit.slope}, {"log_constant", rep.fit.intercept}, {"points", rep.fit.points}};
  if (c.two_scale) s.manifest["fit"]["w_H1_slope"] = rep.w_h1_fit.slope;
  char buf[96];
  std::snprintf(buf, sizeof buf, "fitted slope = %.4f over %d points", rep.fit.slope, rep.fit.points);
  s.log << buf << "\n";
}

void run_excess(Session& s) {
  const ExperimentConfig& c = *s.cfg;
  const CoefficientField field = s.field();
  const double theta = c.theta, p = c.resolved_p();
  const double vartheta = excess_exponent(theta, c.dimension, p);
  const CascadeResult cr = s.cascade(field);
  const auto corpus =
      s.stage("calibration_corpus", [&] { return default_calibration_corpus(c.lower, c.upper, c.center, c.dimension == 1 ? 4096 : 256); });
  const CalibrationResult cal = s.stage("calibrate_t", [&] { return calibrate_t(corpus, theta, p); });
  ojson cj;
  cj["candidates"] = cal.candidates;
  cj["worst_ratio"] = cal.worst_ratio;
  cj["worst_case"] = cal.worst_case;
  cj["t"] = cal.found ? ojson(cal.t) : ojson(nullptr);
  s.manifest["calibration"] = cj;
  if (!cal.found)
    throw SolverError("calibrate_t: no t in {1/16, 1/32, 1/64} gives G(tr) <= G(r)/2; worst ratio " +
                      std::to_string(cal.worst_ratio.back()) + " (" + cal.worst_case.back() + ")", {});

  const auto ladders = s.ladders();
  struct Job {
    std::vector<StepDownRow> rows;
    std::optional<ExcessReport> report;
  };
  auto jobs = parallel_map<Job>(ladders.size(), s.opt.jobs, [&](std::size_t i) {
    const auto& [ladder, fz] = ladders[i];
    const BVP b = s.bvp(fz.cells);
    const SolveResult ue = solve_multiscale(b, field, ladder);
    const Grid& g = ue.solution.grid();
    double h = 0.0;
    for (int a = 0; a < g.dim(); ++a) h = std::max(h, g.spacing(a));
    std::vector<double> radii;
    for (double r : dyadic_radii(c.radius, ladder.eps(1) * (1.0 + 1e-6), g))
      if (cal.t * r >= 4.0 * h) radii.push_back(r);
    Job job;
    job.rows = step_down_rows(ue.solution, s.F(), c.center, ladder.eps(1), radii, cal.t, p, vartheta);
    if (i + 1 == ladders.size()) {
      const SolveResult u0 = solve_homogenized(b, cr.effective());
      job.report = excess_functionals(ue.solution, s.F(), c.center, dyadic_radii(2.0 * c.radius, 0.0, g), p, theta,
                                      &u0.solution);
    }
    return job;
  });
  std::vector<StepDownRow> rows;
  for (const auto& j : jobs) rows.insert(rows.end(), j.rows.begin(), j.rows.end());
  const StepDownFit fit = fit_step_down(rows, cal.t);

  CsvTable st({"eps", "r", "H_tr", "H_r", "Phi_2r", "excess"});
  for (const auto& r : rows) st.add({r.eps1, r.r, r.H_tr, r.H_r, r.Phi_2r, r.excess});
  s.write("step_down.csv", st.str());
  CsvTable ex({"r", "H", "Phi", "G", "h"});
  for (const auto& r : jobs.back().report->rows) ex.add({r.r, r.H, r.Phi, r.G, r.h});
  s.write("excess.csv", ex.str());
  s.manifest["step_down"] = {{"t", fit.t}, {"rho", fit.rho}, {"eps1", fit.eps1}, {"C", fit.C}, {"stable", fit.stable},
                             {"vartheta", vartheta}, {"p", p}};
  char buf[128];
  std::snprintf(buf, sizeof buf, "calibrated t = 1/%d, fitted rho = %.4f, C stable within 2x: %s", int(std::round(1.0 / cal.t)),
                fit.rho, fit.stable ? "yes" : "no");
  s.log << buf << "\n";
}

void run_certify(Session& s) {
  const ExperimentConfig& c = *s.cfg;
  const CoefficientField field = s.field();
  const double p = c.resolved_p();
  const auto ladders = s.ladders();
  const ExperimentConfig* cp = &c;
  const PointFunction f = [cp](const Point& x) { return cp->f_at(x); };
  const auto certs = s.stage("certify", [&] {
    return parallel_map<Certificate>(ladders.size(), s.opt.jobs, [&](std::size_t i) {
      const auto& [ladder, fz] = ladders[i];
      const SolveResult ue = solve_multiscale(s.bvp(fz.cells), field, ladder);
      if (c.probe_kind == "boundary")
        return boundary_lipschitz_flat(ue.solution, s.F(), f, ladder.finest(), c.anchor, c.radius, p, c.alpha);
      return lipschitz_certificate(ue.solution, s.F(), ladder.finest(), c.center, c.radius, p);
    });
  });
  CsvTable t({"eps", "certificate"});
  for (std::size_t i = 0; i < certs.size(); ++i) {
    t.add({ladders[i].second.eps, certs[i].value});
    s.log << "eps = " << csv_number(ladders[i].second.eps) << ": certificate " << certs[i].value << "\n";
  }
  s.write("certificate.csv", t.str());
}

void run_approx(Session& s) {
  const ExperimentConfig& c = *s.cfg;
  const CoefficientField field = s.field();
  const CascadeResult cr = s.cascade(field);
  const auto ladders = s.ladders();
  const auto reps = s.stage("approx", [&] {
    return parallel_map<ApproxReport>(ladders.size(), s.opt.jobs, [&](std::size_t i) {
      const auto& [ladder, fz] = ladders[i];
      const SolveResult ue = solve_multiscale(s.bvp(fz.cells), field, ladder);
      return approximate_by_homogenized(ue.solution, cr.effective(), s.F(), c.center, c.approx_r, ladder.eps(1), c.rho,
                                        std::min(c.solve_tol, 1e-12));
    });
  });
  CsvTable t({"eps", "discrepancy", "rhs_shape", "ratio"});
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    t.add({ladders[i].second.eps, reps[i].discrepancy, reps[i].rhs_shape, reps[i].ratio});
    xs.push_back(ladders[i].first.eps(1));
    ys.push_back(reps[i].discrepancy);
  }
  s.write("approx.csv", t.str());
  const LogFit fit = fit_power_law(xs, ys);
  s.manifest["fit"] = {{"slope", fit.slope}, {"points", fit.points}};
  char buf[96];
  std::snprintf(buf, sizeof buf, "discrepancy exponent vs eps_1 = %.4f over %d points", fit.slope, fit.points);
  s.log << buf << "\n";
}

}  // namespace

int run(const RunOptions& options, std::ostream& log, std::ostream& err) {
  const auto& names = subcommands();
  if (std::find(names.begin(), names.end(), options.subcommand) == names.end()) {
    err << "error: unknown subcommand '" << options.subcommand << "'\n";
    return exit_validation;
  }
  Session s(options, log);
  const std::string started = utc_now();
  int status = exit_ok;
  std::string error;
  bool have_out = false;
  try {
    if (options.config) s.cfg = parse_config(*options.config);
    else if (options.subcommand != "clean-cache") throw ValidationError("--config is required for " + options.subcommand);
    s.out_dir = options.out ? *options.out : fs::path(s.cfg ? s.cfg->output : "out");
    s.cache_dir = resolve_cache_dir(options.cache, s.cfg ? s.cfg->cache : std::string(), s.out_dir);

    if (options.subcommand == "clean-cache") {
      const auto removed = CorrectorCache::clean(s.cache_dir);
      log << "removed " << removed << " file(s) from " << s.cache_dir.string() << "\n";
      return exit_ok;
    }
    fs::create_directories(s.out_dir);
    have_out = true;
    s.cache = std::make_unique<CorrectorCache>(s.cache_dir);
    for (const auto& w : s.cfg->warnings) s.warnings.push_back(w);

    if (options.subcommand == "cell") run_cell(s);
    else if (options.subcommand == "cascade") run_cascade(s);
    else if (options.subcommand == "solve") run_solve(s);
    else if (options.subcommand == "rate") run_rate(s);
    else if (options.subcommand == "excess") run_excess(s);
    else if (options.subcommand == "certify") run_certify(s);
    else if (options.subcommand == "approx") run_approx(s);
  } catch (const ValidationError& e) {
    status = exit_validation;
    error = e.what();
  } catch (const SolverError& e) {
    status = exit_solver;
    error = e.what();
  } catch (const std::exception& e) {
    status = exit_internal;
    error = e.what();
  }
  if (!error.empty()) err << "error: " << error << "\n";
  for (const auto& w : s.warnings) log << "warning: " << w << "\n";
  if (!have_out) return status;

  ojson m;
  m["toolkit"] = "reiterate";
  m["version"] = kToolkitVersion;
  m["subcommand"] = options.subcommand;
  m["config_hash"] = hex64(s.cfg->hash);
  m["config"] = s.cfg->canonical;
  m["seed"] = s.cfg->seed;
  m["tolerances"] = {{"cell", s.cfg->cell_tol}, {"solve", s.cfg->solve_tol}};
  ojson feas = ojson::array();
  for (const auto& fz : s.cfg->feasibility)
    feas.push_back({{"eps", fz.eps}, {"cells", fz.cells}, {"nodes", fz.nodes}, {"memory_mb", fz.memory_mb},
                    {"feasible", fz.feasible}});
  m["feasibility"] = feas;
  for (auto it = s.manifest.begin(); it != s.manifest.end(); ++it) m[it.key()] = it.value();
  if (s.cache)
    m["cache"] = {{"dir", s.cache_dir.string()}, {"hits", s.cache->hits()}, {"misses", s.cache->misses()},
                  {"evictions", s.cache->evictions()}, {"hit_rate", s.cache->hit_rate()}};
  m["warnings"] = s.warnings;
  m["outputs"] = s.outputs;
  m["stages"] = s.stages;
  m["status"] = status;
  if (!error.empty()) m["error"] = error;
  m["started_at"] = started;
  m["finished_at"] = utc_now();
  try {
    write_file_atomic(s.out_dir / "manifest.json", m.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "error: could not write the manifest: " << e.what() << "\n";
    if (status == exit_ok) status = exit_internal;
  }
  if (status == exit_ok && s.cache) s.print_cache_stats();
  return status;
}

}  // namespace reiterate
