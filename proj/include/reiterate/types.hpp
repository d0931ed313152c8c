#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace reiterate {

/// Points and tensors live in dimension 1 or 2; the fixed maximum keeps them
/// on the stack.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2, 1>;
using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 2>;

inline Point zero_point(int d) { return Point::Zero(d); }
inline Tensor identity_tensor(int d) { return Tensor::Identity(d, d); }

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad input: malformed config, violated precondition, inconsistent shapes.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// A numerical solve did not reach its tolerance.
class SolverError : public Error {
public:
  SolverError(const std::string& what, std::vector<double> residual_history)
      : Error(what), history_(std::move(residual_history)) {}
  const std::vector<double>& residual_history() const { return history_; }

private:
  std::vector<double> history_;
};

/// Smallest and largest eigenvalue of a symmetric tensor.
inline std::pair<double, double> eigen_range(const Tensor& a) {
  if (a.rows() == 1) return {a(0, 0), a(0, 0)};
  const double tr = 0.5 * (a(0, 0) + a(1, 1));
  const double det = a(0, 0) * a(1, 1) - 0.5 * (a(0, 1) * a(0, 1) + a(1, 0) * a(1, 0));
  const double disc = std::sqrt(std::max(0.0, tr * tr - det));
  return {tr - disc, tr + disc};
}

}  // namespace reiterate
