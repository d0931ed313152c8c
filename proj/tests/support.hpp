#pragma once

#include "reiterate/coeff.hpp"
#include "reiterate/grid.hpp"

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

namespace testing {

using namespace reiterate;

inline const double pi = std::acos(-1.0);

inline double one(const Point&) { return 1.0; }
inline double zero(const Point&) { return 0.0; }

inline CoefficientField field(const std::string& spec, int dim, int scales) {
  return make_field(CoefficientSpec::parse(spec), dim, scales);
}

inline Point pt(double a) { return Point::Constant(1, a); }
inline Point pt(double a, double b) {
  Point p(2);
  p << a, b;
  return p;
}

inline double max_abs(const Eigen::ArrayXXd& a) { return a.abs().maxCoeff(); }

/// Fresh empty directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("reiterate-" + tag + "-" + std::to_string(rd()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace testing
