#pragma once

// Objective functions used by the experiments.

#include "rfg/forward_ad.hpp"
#include "rfg/quadratic_theory.hpp"
#include "rfg/rfg_estimator.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace rfg {

/// f = 1/2 ||A x - b||^2 with exact jvp, gradient and minimizer.
Objective quadratic_objective(const QuadraticProblem& p);

/// M ~ N(0,1), b ~ N(5,1), M = U S V^T; singular values replaced by a
/// linear ramp from 10 s_min down to s_min (cond(A) = target_cond), and
/// A = U S_new V^T. d x d.
QuadraticProblem make_gd_quadratic(int d, std::uint64_t seed, double target_cond = 10.0);

/// A = U S_new with U from the SVD of M ~ N(0,1), singular values
/// {1, 10, U(1,10), ...}. A^T A = S_new^2 is diagonal.
QuadraticProblem make_phb_quadratic(int d, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Two-dimensional test functions

template <class T>
T rosenbrock(std::span<const T> x) {
  const T a = x[1] - x[0] * x[0];
  const T b = x[0] - 1.0;
  return 100.0 * a * a + b * b;
}

/// -20 exp(-0.2 sqrt((x1^2 + x2^2)/2)) - exp((cos 2 pi x1 + cos 2 pi x2)/2) + e + 20
template <class T>
T ackley(std::span<const T> x) {
  using std::cos;
  using std::exp;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const T r = norm(x);
  return -20.0 * exp(-0.2 * std::numbers::sqrt2 / 2.0 * r) -
         exp(0.5 * (cos(two_pi * x[0]) + cos(two_pi * x[1]))) + std::numbers::e + 20.0;
}

/// -20 exp(0.5 ||x||) - exp(cos 2 pi x1 + cos 2 pi x2) + e + 20. Unbounded
/// below and nonzero at the origin; kept for comparison runs only.
template <class T>
T ackley_printed(std::span<const T> x) {
  using std::cos;
  using std::exp;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  return -20.0 * exp(0.5 * norm(x)) - exp(cos(two_pi * x[0]) + cos(two_pi * x[1])) +
         std::numbers::e + 20.0;
}

Eigen::VectorXd rosenbrock_gradient(const Eigen::VectorXd& x);
/// Subgradient 0 is used for the norm term at the origin.
Eigen::VectorXd ackley_gradient(const Eigen::VectorXd& x);
Eigen::VectorXd ackley_printed_gradient(const Eigen::VectorXd& x);

Objective rosenbrock_objective();
Objective ackley_objective(bool printed_form = false);

// ---------------------------------------------------------------------------
// Function approximation with a small MLP

/// sin(2 pi x) exp(-x^2)
double fa_target(double x);

struct FaOptions {
  int samples = 100;
  int width = 40;
  /// Number of affine layers.
  int depth = 2;
  double lo = -2.0;
  double hi = 2.0;
  Activation activation = Activation::tanh;
};

struct FaProblem {
  MlpParameters initial;
  Eigen::MatrixXd inputs;   // 1 x m
  Eigen::MatrixXd targets;  // 1 x m
  /// Over the flattened parameters.
  Objective objective;
};

/// Sample points uniform on (lo, hi), weights and biases uniform on
/// (-1/sqrt(fan_in), 1/sqrt(fan_in)); everything fixed by the seed.
FaProblem make_fa_problem(const FaOptions& opts, std::uint64_t seed);

/// Layer sizes 1 -> width -> ... -> width -> 1 with `depth` affine maps.
MlpParameters init_mlp(int width, int depth, Activation act, RngStream& rng);

/// Backpropagated gradient of mlp_loss, flattened like MlpParameters::flatten.
Eigen::VectorXd mlp_gradient(const MlpParameters& params, const Eigen::MatrixXd& x_batch,
                             const Eigen::MatrixXd& targets);

}  // namespace rfg
