#pragma once

#include "rfg/distributions.hpp"
#include "rfg/forward_ad.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>

namespace rfg {

/// A scalar objective with optional differentiation hooks.
struct Objective {
  std::string name;
  int dimension = 0;
  std::function<double(const Eigen::VectorXd&)> evaluate;
  /// (x, v) -> (f(x), grad f(x)^T v). Required for exact (h = 0) estimates.
  std::function<TangentEvaluation(const Eigen::VectorXd&, const Eigen::VectorXd&)> jvp;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::optional<Eigen::VectorXd> minimizer;

  bool has_jvp() const { return static_cast<bool>(jvp); }
  bool has_gradient() const { return static_cast<bool>(gradient); }
};

/// Wraps a function templated on the scalar type into an Objective whose
/// jvp hook runs it on dual numbers.
template <class F>
Objective make_objective(std::string name, int dimension, F f) {
  Objective obj;
  obj.name = std::move(name);
  obj.dimension = dimension;
  obj.evaluate = [f](const Eigen::VectorXd& x) {
    return f(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  };
  obj.jvp = [f](const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    return rfg::jvp([&f](std::span<const Dual> xs) { return f(xs); }, x, v);
  };
  return obj;
}

struct RFGConfig {
  /// Forward-difference step; 0 selects the exact directional derivative.
  double h = 1e-6;
  DistributionSpec distribution{};
};

/// h > 0: (f(x + h z) - f(x)) / h.  h == 0: grad f(x)^T z via the jvp hook.
double directional_derivative(const Objective& f, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& z, double h);

/// directional_derivative(f, x, z, h) * z. z is used as given (no normalization).
Eigen::VectorXd rfg(const Objective& f, const Eigen::VectorXd& x, const Eigen::VectorXd& z,
                    double h);

}  // namespace rfg
