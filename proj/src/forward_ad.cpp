#include "rfg/forward_ad.hpp"

#include <sstream>

namespace rfg {

Dual operator/(const Dual& a, const Dual& b) {
  if (b.primal == 0.0) throw DomainError("div", "division by a zero primal");
  const double q = a.primal / b.primal;
  return {q, (a.tangent - q * b.tangent) / b.primal};
}

Dual exp(const Dual& a) {
  const double e = std::exp(a.primal);
  return {e, e * a.tangent};
}

Dual log(const Dual& a) {
  if (a.primal <= 0.0) throw DomainError("log", "non-positive primal");
  return {std::log(a.primal), a.tangent / a.primal};
}

Dual sin(const Dual& a) { return {std::sin(a.primal), std::cos(a.primal) * a.tangent}; }

Dual cos(const Dual& a) { return {std::cos(a.primal), -std::sin(a.primal) * a.tangent}; }

Dual sqrt(const Dual& a) {
  if (a.primal < 0.0) throw DomainError("sqrt", "negative primal");
  const double s = std::sqrt(a.primal);
  // At 0 the derivative is unbounded; a zero tangent stays zero, anything
  // else becomes non-finite and is reported by the caller.
  if (s == 0.0) return {0.0, a.tangent == 0.0 ? 0.0 : std::copysign(INFINITY, a.tangent)};
  return {s, a.tangent / (2.0 * s)};
}

Dual tanh(const Dual& a) {
  const double t = std::tanh(a.primal);
  return {t, (1.0 - t * t) * a.tangent};
}

Dual abs(const Dual& a) {
  if (a.primal > 0.0) return a;
  if (a.primal < 0.0) return -a;
  return {0.0, 0.0};
}

Dual relu(const Dual& a) {
  if (a.primal > 0.0) return a;
  return {0.0, 0.0};
}

Dual pow(const Dual& a, int n) {
  if (n == 0) return constant(1.0);
  if (n < 0) {
    if (a.primal == 0.0) throw DomainError("pow", "negative exponent at a zero primal");
    return constant(1.0) / pow(a, -n);
  }
  const double pm1 = std::pow(a.primal, n - 1);
  return {pm1 * a.primal, n * pm1 * a.tangent};
}

Dual norm(std::span<const Dual> xs) {
  double sq = 0.0;
  for (const auto& x : xs) sq += x.primal * x.primal;
  const double r = std::sqrt(sq);
  if (r == 0.0) return {0.0, 0.0};
  double t = 0.0;
  for (const auto& x : xs) t += x.primal * x.tangent;
  return {r, t / r};
}

double norm(std::span<const double> xs) {
  double sq = 0.0;
  for (double x : xs) sq += x * x;
  return std::sqrt(sq);
}

Dual dual_apply(ElementaryOp op, std::span<const Dual> args, int exponent) {
  const auto need = [&](std::size_t n, const char* name) {
    if (args.size() != n) {
      throw std::invalid_argument(std::string(name) + ": expected " + std::to_string(n) +
                                  " argument(s), got " + std::to_string(args.size()));
    }
  };
  switch (op) {
    case ElementaryOp::add: need(2, "add"); return args[0] + args[1];
    case ElementaryOp::sub: need(2, "sub"); return args[0] - args[1];
    case ElementaryOp::mul: need(2, "mul"); return args[0] * args[1];
    case ElementaryOp::div: need(2, "div"); return args[0] / args[1];
    case ElementaryOp::pow_int: need(1, "pow"); return pow(args[0], exponent);
    case ElementaryOp::exp: need(1, "exp"); return exp(args[0]);
    case ElementaryOp::sin: need(1, "sin"); return sin(args[0]);
    case ElementaryOp::cos: need(1, "cos"); return cos(args[0]);
    case ElementaryOp::sqrt: need(1, "sqrt"); return sqrt(args[0]);
    case ElementaryOp::tanh: need(1, "tanh"); return tanh(args[0]);
    case ElementaryOp::abs: need(1, "abs"); return abs(args[0]);
  }
  throw std::invalid_argument("dual_apply: unknown op");
}

TangentEvaluation jvp(const DualFunction& f, const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
  if (x.size() != v.size()) {
    throw std::invalid_argument("jvp: dimension mismatch (x has " + std::to_string(x.size()) +
                                ", v has " + std::to_string(v.size()) + ")");
  }
  std::vector<Dual> seeded(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) seeded[i] = variable(x[i], v[i]);
  const Dual out = f(seeded);
  TangentEvaluation result{out.primal, out.tangent, {}};
  if (!result.finite()) {
    std::ostringstream msg;
    msg << "jvp: non-finite result (value=" << out.primal << ", derivative=" << out.tangent << ")";
    result.diagnostic = msg.str();
  }
  return result;
}

// ---------------------------------------------------------------------------

Eigen::Index MlpParameters::parameter_count() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

MlpParameters MlpParameters::zeros_like() const {
  MlpParameters z;
  z.activation = activation;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    z.weights.push_back(Eigen::MatrixXd::Zero(weights[l].rows(), weights[l].cols()));
    z.biases.push_back(Eigen::VectorXd::Zero(biases[l].size()));
  }
  return z;
}

bool MlpParameters::same_shape(const MlpParameters& other) const {
  if (weights.size() != other.weights.size() || biases.size() != other.biases.size()) return false;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != other.weights[l].rows() ||
        weights[l].cols() != other.weights[l].cols() ||
        biases[l].size() != other.biases[l].size()) {
      return false;
    }
  }
  return true;
}

void MlpParameters::validate() const {
  if (weights.empty()) throw std::invalid_argument("MlpParameters: no layers");
  if (weights.size() != biases.size()) {
    throw std::invalid_argument("MlpParameters: weight/bias layer count mismatch");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (biases[l].size() != weights[l].rows()) {
      throw std::invalid_argument("MlpParameters: bias " + std::to_string(l) +
                                  " does not match weight rows");
    }
    if (l > 0 && weights[l].cols() != weights[l - 1].rows()) {
      throw std::invalid_argument("MlpParameters: layer " + std::to_string(l) +
                                  " input width does not match previous output");
    }
  }
}

Eigen::VectorXd MlpParameters::flatten() const {
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    flat.segment(at, weights[l].size()) = weights[l].reshaped();
    at += weights[l].size();
    flat.segment(at, biases[l].size()) = biases[l];
    at += biases[l].size();
  }
  return flat;
}

MlpParameters MlpParameters::unflatten(const Eigen::VectorXd& flat) const {
  if (flat.size() != parameter_count()) {
    throw std::invalid_argument("MlpParameters::unflatten: expected " +
                                std::to_string(parameter_count()) + " values, got " +
                                std::to_string(flat.size()));
  }
  MlpParameters out = zeros_like();
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.weights[l].reshaped() = flat.segment(at, weights[l].size());
    at += weights[l].size();
    out.biases[l] = flat.segment(at, biases[l].size());
    at += biases[l].size();
  }
  return out;
}

Eigen::MatrixXd activate(Activation act, const Eigen::MatrixXd& z) {
  if (act == Activation::tanh) return z.array().tanh().matrix();
  return z.array().max(0.0).matrix();
}

Eigen::MatrixXd activate_slope(Activation act, const Eigen::MatrixXd& z) {
  if (act == Activation::tanh) return (1.0 - z.array().tanh().square()).matrix();
  return (z.array() > 0.0).cast<double>().matrix();
}

Eigen::MatrixXd mlp_forward(const MlpParameters& params, const Eigen::MatrixXd& x_batch) {
  params.validate();
  if (x_batch.rows() != params.input_dim()) {
    throw std::invalid_argument("mlp_forward: input has " + std::to_string(x_batch.rows()) +
                                " rows, network expects " + std::to_string(params.input_dim()));
  }
  Eigen::MatrixXd u = (params.weights[0] * x_batch).colwise() + params.biases[0];
  for (std::size_t l = 1; l < params.depth(); ++l) {
    u = (params.weights[l] * activate(params.activation, u)).colwise() + params.biases[l];
  }
  return u;
}

double mlp_loss(const MlpParameters& params, const Eigen::MatrixXd& x_batch,
                const Eigen::MatrixXd& targets) {
  const Eigen::MatrixXd r = mlp_forward(params, x_batch) - targets;
  return r.squaredNorm() / static_cast<double>(x_batch.cols());
}

TangentEvaluation mlp_jvp(const MlpParameters& params, const Eigen::MatrixXd& x_batch,
                          const Eigen::MatrixXd& targets, const MlpParameters& seed) {
  params.validate();
  if (!params.same_shape(seed)) {
    throw std::invalid_argument("mlp_jvp: seed shape does not match parameters");
  }
  if (x_batch.rows() != params.input_dim()) {
    throw std::invalid_argument("mlp_jvp: input dimension mismatch");
  }
  if (targets.rows() != params.output_dim() || targets.cols() != x_batch.cols()) {
    throw std::invalid_argument("mlp_jvp: target shape mismatch");
  }

  // (u, du) through the first affine layer; the inputs carry no tangent.
  Eigen::MatrixXd u = (params.weights[0] * x_batch).colwise() + params.biases[0];
  Eigen::MatrixXd du = (seed.weights[0] * x_batch).colwise() + seed.biases[0];
  for (std::size_t l = 1; l < params.depth(); ++l) {
    const Eigen::MatrixXd a = activate(params.activation, u);
    const Eigen::MatrixXd da = activate_slope(params.activation, u).cwiseProduct(du);
    du = (params.weights[l] * da + seed.weights[l] * a).colwise() + seed.biases[l];
    u = (params.weights[l] * a).colwise() + params.biases[l];
  }
  const Eigen::MatrixXd r = u - targets;
  const double m = static_cast<double>(x_batch.cols());
  TangentEvaluation out{r.squaredNorm() / m, 2.0 * r.cwiseProduct(du).sum() / m, {}};
  if (!out.finite()) out.diagnostic = "mlp_jvp: non-finite loss or derivative";
  return out;
}

}  // namespace rfg
