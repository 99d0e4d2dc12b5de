#pragma once

// Forward-mode automatic differentiation.
//
// A Dual carries a primal value and its tangent along one seed direction,
// i.e. a + b*eps with eps^2 = 0. Evaluating a function on duals seeded with
// (x_i, v_i) yields f(x) and grad f(x)^T v in a single pass.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfg {

/// Raised when an elementary operation is evaluated outside its domain.
class DomainError : public std::domain_error {
 public:
  DomainError(const std::string& op, const std::string& what)
      : std::domain_error(op + ": " + what), op_(op) {}
  const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

struct Dual {
  double primal = 0.0;
  double tangent = 0.0;

  constexpr Dual() = default;
  constexpr Dual(double p) : primal(p) {}  // NOLINT: constants lift implicitly
  constexpr Dual(double p, double t) : primal(p), tangent(t) {}

  constexpr bool operator==(const Dual&) const = default;

  constexpr Dual& operator+=(const Dual& o) {
    primal += o.primal;
    tangent += o.tangent;
    return *this;
  }
  constexpr Dual& operator-=(const Dual& o) {
    primal -= o.primal;
    tangent -= o.tangent;
    return *this;
  }
  constexpr Dual& operator*=(const Dual& o) {
    tangent = tangent * o.primal + primal * o.tangent;
    primal *= o.primal;
    return *this;
  }
};

constexpr Dual constant(double value) { return {value, 0.0}; }
constexpr Dual variable(double value, double seed) { return {value, seed}; }

constexpr Dual operator+(Dual a, const Dual& b) { return a += b; }
constexpr Dual operator-(Dual a, const Dual& b) { return a -= b; }
constexpr Dual operator*(Dual a, const Dual& b) { return a *= b; }
constexpr Dual operator-(const Dual& a) { return {-a.primal, -a.tangent}; }
Dual operator/(const Dual& a, const Dual& b);

Dual exp(const Dual& a);
Dual log(const Dual& a);
Dual sin(const Dual& a);
Dual cos(const Dual& a);
Dual sqrt(const Dual& a);
Dual tanh(const Dual& a);
/// |a| with derivative 0 at a == 0.
Dual abs(const Dual& a);
/// max(a, 0) with derivative 0 at a == 0.
Dual relu(const Dual& a);
Dual pow(const Dual& a, int n);
/// Euclidean norm of the arguments; tangent 0 at the origin.
Dual norm(std::span<const Dual> xs);

inline double relu(double a) { return a > 0.0 ? a : 0.0; }
double norm(std::span<const double> xs);

enum class ElementaryOp { add, sub, mul, div, pow_int, exp, sin, cos, sqrt, tanh, abs };

/// Applies one elementary operation. Binary ops read args[0], args[1];
/// pow_int reads the exponent from `exponent`.
Dual dual_apply(ElementaryOp op, std::span<const Dual> args, int exponent = 0);

struct TangentEvaluation {
  double value = 0.0;
  double directional_derivative = 0.0;
  /// Empty when both fields are finite.
  std::string diagnostic;

  bool finite() const { return std::isfinite(value) && std::isfinite(directional_derivative); }
};

using DualFunction = std::function<Dual(std::span<const Dual>)>;

/// f(x) and grad f(x)^T v in one forward pass.
TangentEvaluation jvp(const DualFunction& f, const Eigen::VectorXd& x, const Eigen::VectorXd& v);

// ---------------------------------------------------------------------------
// Feed-forward networks

enum class Activation { tanh, relu };

/// u^1 = W^1 x + b^1, u^l = W^l act(u^{l-1}) + b^l.
struct MlpParameters {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Activation activation = Activation::tanh;

  std::size_t depth() const { return weights.size(); }
  Eigen::Index input_dim() const { return weights.front().cols(); }
  Eigen::Index output_dim() const { return weights.back().rows(); }
  Eigen::Index parameter_count() const;

  /// Same shapes, all entries zero.
  MlpParameters zeros_like() const;
  bool same_shape(const MlpParameters& other) const;
  /// Throws std::invalid_argument when consecutive layer shapes do not chain.
  void validate() const;

  Eigen::VectorXd flatten() const;
  /// Inverse of flatten() using this object's shapes.
  MlpParameters unflatten(const Eigen::VectorXd& flat) const;
};

/// Elementwise activation and its derivative; the relu slope at 0 is 0.
Eigen::MatrixXd activate(Activation act, const Eigen::MatrixXd& z);
Eigen::MatrixXd activate_slope(Activation act, const Eigen::MatrixXd& z);

/// Columns of x_batch are samples. Returns output_dim x m predictions.
Eigen::MatrixXd mlp_forward(const MlpParameters& params, const Eigen::MatrixXd& x_batch);

/// Mean over samples of the squared output error.
double mlp_loss(const MlpParameters& params, const Eigen::MatrixXd& x_batch,
                const Eigen::MatrixXd& targets);

/// Loss and its derivative along `seed` (a direction in parameter space),
/// computed with paired primal/tangent tensor passes.
TangentEvaluation mlp_jvp(const MlpParameters& params, const Eigen::MatrixXd& x_batch,
                          const Eigen::MatrixXd& targets, const MlpParameters& seed);

}  // namespace rfg
