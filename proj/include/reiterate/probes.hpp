#pragma once

#include "reiterate/cascade.hpp"
#include "reiterate/dirichlet.hpp"

#include <optional>
#include <string>
#include <vector>

namespace reiterate {

/// Least-squares line through (log x, log y).
struct LogFit {
  double slope = NAN;
  double intercept = NAN;  // log of the constant
  int points = 0;
};
/// Pairs with a non-positive coordinate are skipped; fewer than two usable
/// points leave the fit at NaN.
LogFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------- rate sweep

struct RateOptions {
  int cells_per_finest = 0;        // grid cells per eps_n; 0 picks 256 in 1D, 16 in 2D
  Index max_nodes = Index(1) << 22;  // larger grids are dropped with a warning
  bool two_scale = false;          // also build w and its norms
};

struct RateRow {
  double eps = 0.0;
  std::vector<double> scales;
  double rate_expr = 0.0;  // eps_1 + eps_2/eps_1 + ... + eps_n/eps_{n-1}
  double l2_error = 0.0;
  double slope_so_far = NAN;  // fit over rows up to this one
  std::vector<int> cells;
  int iterations = 0;
  NormReport norms;  // filled when two_scale is set
};

struct RateReport {
  std::vector<double> lambda;
  std::vector<RateRow> rows;
  LogFit fit;       // l2_error against rate_expr
  LogFit w_h1_fit;  // ||w||_{H^1} against rate_expr (two_scale only)
  std::vector<std::string> warnings;
};

/// For each eps solves the multiscale and the homogenized problem on the
/// box of `bvp` (its `cells` are replaced) and fits the L2 error against the
/// rate expression. `cascade` must come from `field`.
RateReport rate_sweep(const CoefficientField& field, const std::vector<double>& lambda,
                      const std::vector<double>& eps_list, const BVP& bvp, const CascadeResult& cascade,
                      const RateOptions& options = {});

// ------------------------------------------------------- interior approximation

struct ApproxReport {
  double r = 0.0;
  double discrepancy = 0.0;  // (avg_{B_r} |u_eps - u0|^2)^{1/2}
  double rhs_shape = 0.0;    // (eps_1/r)^rho {(avg_{B_2r} |u_eps|^2)^{1/2} + r^2 (avg |F|^2)^{1/2}}
  double ratio = 0.0;
  Index subgrid_nodes = 0;
  int iterations = 0;
};

/// u0 solves the homogenized equation on the concentric box of half-width
/// 3r/2 with the nodal values of u_eps as boundary data. The box must lie in
/// the grid and its faces must fall on nodes.
ApproxReport approximate_by_homogenized(const GridFunctiond& u_eps, const TensorField& effective,
                                        const PointFunction& F, const Point& center, double r, double eps1,
                                        double rho, double tol = 1e-12);

// ---------------------------------------------------------- excess functionals

/// P(x) = value + gradient . (x - xbar), xbar the centroid of the ball nodes.
struct AffineFit {
  double value = 0.0;
  Point gradient;
  double residual = 0.0;  // (avg |u - P|^2)^{1/2}
  double scale = 1.0;     // P's gradient is scale times the L2 projection's
};

/// min(theta, 1 - d/p), and alpha as well on boundaries.
double excess_exponent(double theta, int d, double p, std::optional<double> alpha = std::nullopt);

struct ExcessRow {
  double r = 0.0;
  double H = 0.0;
  double Phi = 0.0;
  double G = NAN;  // only with u0
  double h = 0.0;  // |grad P_r|
  AffineFit fit;
  Index nodes = 0;
};

struct ExcessReport {
  Point center;
  double p = 2.0;
  double theta = 1.0;
  double vartheta = 0.5;
  std::vector<ExcessRow> rows;
};

/// H(r) = (1/r) inf_P {(avg_{B_r} |u - P|^2)^{1/2} + r^{1+vartheta} |grad P|} + r (avg_{B_r} |F|^p)^{1/p}
/// with the averages taken over the grid nodes in B_r. The infimum runs over
/// P = b + s g* (x - xbar), g* the L2 affine projection, b eliminated exactly
/// and s found by golden section; in 1D this is the exact infimum.
double excess_H(const GridFunctiond& u, const GridFunctiond& F, const std::vector<Index>& nodes, double r,
                double vartheta, double p, AffineFit* fit = nullptr);
/// Phi(r) = (1/r) (avg |u - mean u|^2)^{1/2} + r (avg |F|^2)^{1/2}.
double excess_Phi(const GridFunctiond& u, const GridFunctiond& F, const std::vector<Index>& nodes, double r);

/// Rows per radius; G is the same functional as H applied to `u0`. Radii
/// need at least 8 nodes in the ball.
ExcessReport excess_functionals(const GridFunctiond& u, const PointFunction& F, const Point& center,
                                const std::vector<double>& radii, double p, double theta,
                                const GridFunctiond* u0 = nullptr);

/// Dyadic radii R, R/2, ... down to max(floor, 8 h).
std::vector<double> dyadic_radii(double R, double floor, const Grid& grid);

// ------------------------------------------------------------ t calibration

struct CalibrationCase {
  std::string name;
  GridFunctiond u0;
  PointFunction F;
  Point center;
  std::vector<double> radii;
};

struct CalibrationResult {
  bool found = false;
  double t = 0.0;
  std::vector<double> candidates;   // 1/16, 1/32, 1/64
  std::vector<double> worst_ratio;  // max G(tr)/G(r) per candidate
  std::vector<std::string> worst_case;
};

/// Largest t in {1/16, 1/32, 1/64} with G(tr) <= G(r)/2 on every case and
/// radius; radii whose ball B_tr is too small to average are skipped.
CalibrationResult calibrate_t(const std::vector<CalibrationCase>& corpus, double theta, double p);

/// Homogenized solutions on the box [lower, upper] centred at `center`:
/// affine, constant-coefficient quadratic and a slowly modulated
/// coefficient, each on `cells` per axis.
std::vector<CalibrationCase> default_calibration_corpus(const Point& lower, const Point& upper, const Point& center,
                                                        int cells);

// ------------------------------------------------------------ step-down check

struct StepDownRow {
  double eps1 = 0.0;
  double r = 0.0;
  double H_tr = 0.0;
  double H_r = 0.0;
  double Phi_2r = 0.0;
  double excess = 0.0;  // max(0, H(tr) - H(r)/2) / Phi(2r)
};

/// Rows at every r in `radii`; B_2r must fit in the grid.
std::vector<StepDownRow> step_down_rows(const GridFunctiond& u, const PointFunction& F, const Point& center,
                                        double eps1, const std::vector<double>& radii, double t, double p,
                                        double vartheta);

struct StepDownFit {
  double t = 0.0;
  double rho = 0.0;
  std::vector<double> eps1;
  std::vector<double> C;  // per eps1: max_r excess / (eps1/r)^rho
  bool stable = false;    // max C <= 2 min C, or no positive excess at all
  std::vector<StepDownRow> rows;
};

/// rho from a pooled least-squares fit of log excess against log(eps1/r)
/// with one intercept per eps1; rho = 1 when nothing is positive.
StepDownFit fit_step_down(const std::vector<StepDownRow>& rows, double t);

// --------------------------------------------------------------- certificates

struct CertificateRow {
  double r = 0.0;
  double lhs = 0.0;
  double ratio = 0.0;
};

struct Certificate {
  double value = 0.0;  // max ratio
  double R = 0.0;
  double rhs = 0.0;
  std::vector<CertificateRow> rows;
};

/// max over dyadic r in [eps_n, R] of (avg_{B_r} |grad u|^2)^{1/2} divided
/// by (avg_{B_R} |grad u|^2)^{1/2} + R (avg_{B_R} |F|^p)^{1/p}. A vanishing
/// left side counts as ratio 0.
Certificate lipschitz_certificate(const GridFunctiond& u, const PointFunction& F, double eps_n, const Point& center,
                                  double R, double p);

/// ||f||_{C^{1,alpha}(I_R)} from samples on the face nodes of I_R.
double c1alpha_norm(const std::vector<double>& s, const std::vector<double>& f, double R, double alpha);

/// Same ratio over Z_r = {|x' - x0'| < r, 0 < (x_d - x0_d) sign < r} anchored at a
/// point of the lower or upper x_d face, with R^{-1} ||f||_{C^{1,alpha}(I_R)}
/// added to the right side.
Certificate boundary_lipschitz_flat(const GridFunctiond& u, const PointFunction& F, const PointFunction& f,
                                    double eps_n, const Point& anchor, double R, double p, double alpha);

}  // namespace reiterate
