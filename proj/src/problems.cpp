#include "rfg/problems.hpp"

#include <stdexcept>
#include <string>

namespace rfg {

Objective quadratic_objective(const QuadraticProblem& p) {
  Objective f;
  f.name = "quadratic";
  f.dimension = p.dim();
  const Eigen::MatrixXd A = p.A;
  const Eigen::VectorXd b = p.b;
  f.evaluate = [A, b](const Eigen::VectorXd& x) { return 0.5 * (A * x - b).squaredNorm(); };
  f.gradient = [A, b](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return A.transpose() * (A * x - b);
  };
  // The residual is affine in x, so the tangent is A v.
  f.jvp = [A, b](const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    const Eigen::VectorXd r = A * x - b;
    TangentEvaluation out{0.5 * r.squaredNorm(), r.dot(A * v), {}};
    if (!out.finite()) out.diagnostic = "quadratic: non-finite value";
    return out;
  };
  f.minimizer = p.x_star;
  return f;
}

namespace {

struct GaussianDraw {
  Eigen::MatrixXd m;
  Eigen::VectorXd b;
};

GaussianDraw draw_m_and_b(int d, std::uint64_t seed) {
  if (d < 2) throw std::invalid_argument("quadratic generator: d must be >= 2");
  RngStream rng = RngStream::derive(seed, static_cast<std::uint64_t>(d), stream_tag::problem);
  GaussianDraw out{Eigen::MatrixXd(d, d), Eigen::VectorXd(d)};
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) out.m(i, j) = rng.normal();
  for (int i = 0; i < d; ++i) out.b[i] = 5.0 + rng.normal();
  return out;
}

}  // namespace

QuadraticProblem make_gd_quadratic(int d, std::uint64_t seed, double target_cond) {
  if (!(target_cond >= 1.0)) throw std::invalid_argument("make_gd_quadratic: target_cond must be >= 1");
  const GaussianDraw g = draw_m_and_b(d, seed);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g.m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double s_min = svd.singularValues()[d - 1];
  // Descending ramp, matching the SVD ordering.
  Eigen::VectorXd s(d);
  for (int i = 0; i < d; ++i) {
    s[i] = s_min * (target_cond + (1.0 - target_cond) * i / (d - 1));
  }
  Eigen::MatrixXd a = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  return make_quadratic_problem(std::move(a), g.b);
}

QuadraticProblem make_phb_quadratic(int d, std::uint64_t seed) {
  const GaussianDraw g = draw_m_and_b(d, seed);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(g.m, Eigen::ComputeFullU);
  RngStream rng = RngStream::derive(seed, static_cast<std::uint64_t>(d), stream_tag::init);
  Eigen::VectorXd s(d);
  s[0] = 1.0;
  s[1] = 10.0;
  for (int i = 2; i < d; ++i) s[i] = 1.0 + 9.0 * rng.uniform01();
  Eigen::MatrixXd a = svd.matrixU() * s.asDiagonal();
  return make_quadratic_problem(std::move(a), g.b);
}

// ---------------------------------------------------------------------------

Eigen::VectorXd rosenbrock_gradient(const Eigen::VectorXd& x) {
  if (x.size() != 2) throw std::invalid_argument("rosenbrock: expects a 2-vector");
  const double a = x[1] - x[0] * x[0];
  return Eigen::Vector2d(-400.0 * x[0] * a + 2.0 * (x[0] - 1.0), 200.0 * a);
}

Eigen::VectorXd ackley_gradient(const Eigen::VectorXd& x) {
  if (x.size() != 2) throw std::invalid_argument("ackley: expects a 2-vector");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double c = 0.2 * std::numbers::sqrt2 / 2.0;
  const double r = x.norm();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(2);
  if (r > 0.0) g = 20.0 * c * std::exp(-c * r) / r * x;
  const double e = std::exp(0.5 * (std::cos(two_pi * x[0]) + std::cos(two_pi * x[1])));
  for (int i = 0; i < 2; ++i) g[i] += std::numbers::pi * std::sin(two_pi * x[i]) * e;
  return g;
}

Eigen::VectorXd ackley_printed_gradient(const Eigen::VectorXd& x) {
  if (x.size() != 2) throw std::invalid_argument("ackley: expects a 2-vector");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double r = x.norm();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(2);
  if (r > 0.0) g = -10.0 * std::exp(0.5 * r) / r * x;
  const double e = std::exp(std::cos(two_pi * x[0]) + std::cos(two_pi * x[1]));
  for (int i = 0; i < 2; ++i) g[i] += two_pi * std::sin(two_pi * x[i]) * e;
  return g;
}

namespace {

struct RosenbrockFn {
  template <class T>
  T operator()(std::span<const T> x) const {
    if (x.size() != 2) throw std::invalid_argument("rosenbrock: expects a 2-vector");
    return rosenbrock(x);
  }
};

struct AckleyFn {
  bool printed = false;
  template <class T>
  T operator()(std::span<const T> x) const {
    if (x.size() != 2) throw std::invalid_argument("ackley: expects a 2-vector");
    return printed ? ackley_printed(x) : ackley(x);
  }
};

}  // namespace

Objective rosenbrock_objective() {
  Objective f = make_objective("rosenbrock", 2, RosenbrockFn{});
  f.gradient = rosenbrock_gradient;
  f.minimizer = Eigen::Vector2d(1.0, 1.0);
  return f;
}

Objective ackley_objective(bool printed_form) {
  Objective f = make_objective(printed_form ? "ackley-printed" : "ackley", 2, AckleyFn{printed_form});
  if (printed_form) {
    f.gradient = ackley_printed_gradient;
  } else {
    f.gradient = ackley_gradient;
    f.minimizer = Eigen::Vector2d(0.0, 0.0);
  }
  return f;
}

// ---------------------------------------------------------------------------

double fa_target(double x) { return std::sin(2.0 * std::numbers::pi * x) * std::exp(-x * x); }

MlpParameters init_mlp(int width, int depth, Activation act, RngStream& rng) {
  if (width < 1 || depth < 1) throw std::invalid_argument("init_mlp: width and depth must be >= 1");
  MlpParameters p;
  p.activation = act;
  for (int l = 0; l < depth; ++l) {
    const int in = l == 0 ? 1 : width;
    const int out = l == depth - 1 ? 1 : width;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Eigen::MatrixXd w(out, in);
    Eigen::VectorXd b(out);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = bound * (2.0 * rng.uniform01() - 1.0);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = bound * (2.0 * rng.uniform01() - 1.0);
    p.weights.push_back(std::move(w));
    p.biases.push_back(std::move(b));
  }
  return p;
}

Eigen::VectorXd mlp_gradient(const MlpParameters& params, const Eigen::MatrixXd& x_batch,
                             const Eigen::MatrixXd& targets) {
  params.validate();
  if (x_batch.rows() != params.input_dim() || targets.rows() != params.output_dim() ||
      targets.cols() != x_batch.cols()) {
    throw std::invalid_argument("mlp_gradient: batch shape mismatch");
  }
  const std::size_t depth = params.depth();
  // pre[l] is the pre-activation of layer l; post[l] feeds layer l.
  std::vector<Eigen::MatrixXd> pre(depth), post(depth);
  post[0] = x_batch;
  for (std::size_t l = 0; l < depth; ++l) {
    pre[l] = (params.weights[l] * post[l]).colwise() + params.biases[l];
    if (l + 1 < depth) post[l + 1] = activate(params.activation, pre[l]);
  }
  MlpParameters grad = params.zeros_like();
  Eigen::MatrixXd delta = 2.0 / static_cast<double>(x_batch.cols()) * (pre[depth - 1] - targets);
  for (std::size_t l = depth; l-- > 0;) {
    grad.weights[l] = delta * post[l].transpose();
    grad.biases[l] = delta.rowwise().sum();
    if (l > 0) {
      delta = (params.weights[l].transpose() * delta)
                  .cwiseProduct(activate_slope(params.activation, pre[l - 1]));
    }
  }
  return grad.flatten();
}

FaProblem make_fa_problem(const FaOptions& opts, std::uint64_t seed) {
  if (opts.samples < 1) throw std::invalid_argument("make_fa_problem: samples must be >= 1");
  if (!(opts.hi > opts.lo)) throw std::invalid_argument("make_fa_problem: empty sample interval");
  FaProblem fa;
  RngStream data_rng = RngStream::derive(seed, 0, stream_tag::problem);
  fa.inputs.resize(1, opts.samples);
  fa.targets.resize(1, opts.samples);
  for (int j = 0; j < opts.samples; ++j) {
    fa.inputs(0, j) = opts.lo + (opts.hi - opts.lo) * data_rng.uniform01();
    fa.targets(0, j) = fa_target(fa.inputs(0, j));
  }
  RngStream init_rng = RngStream::derive(seed, 0, stream_tag::init);
  fa.initial = init_mlp(opts.width, opts.depth, opts.activation, init_rng);

  const MlpParameters shape = fa.initial;
  const Eigen::MatrixXd x = fa.inputs, y = fa.targets;
  Objective& f = fa.objective;
  f.name = "fa";
  f.dimension = static_cast<int>(shape.parameter_count());
  f.evaluate = [shape, x, y](const Eigen::VectorXd& theta) {
    return mlp_loss(shape.unflatten(theta), x, y);
  };
  f.jvp = [shape, x, y](const Eigen::VectorXd& theta, const Eigen::VectorXd& v) {
    return mlp_jvp(shape.unflatten(theta), x, y, shape.unflatten(v));
  };
  f.gradient = [shape, x, y](const Eigen::VectorXd& theta) {
    return mlp_gradient(shape.unflatten(theta), x, y);
  };
  return fa;
}

}  // namespace rfg
