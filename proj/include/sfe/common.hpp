#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace sfe {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Invalid user input or configuration (CLI maps this to exit code 2).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: Newton divergence, inverted element, singular system
/// (CLI maps this to exit code 3).
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// No model on the Pareto path passed the admissibility threshold
/// (CLI maps this to exit code 4).
class NoAdmissibleModelError : public std::runtime_error {
public:
  NoAdmissibleModelError(const std::string& msg, double best_rmse)
      : std::runtime_error(msg), best_rmse(best_rmse) {}
  double best_rmse;
};

}  // namespace sfe
