#include "rfg/moment_oracle.hpp"

#include "rfg/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace rfg {

namespace {

struct Accumulator {
  long n = 0;
  Eigen::VectorXd mean;
  Eigen::VectorXd m2;

  explicit Accumulator(int width)
      : mean(Eigen::VectorXd::Zero(width)), m2(Eigen::VectorXd::Zero(width)) {}

  void push(const Eigen::VectorXd& x) {
    ++n;
    const Eigen::VectorXd delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta.cwiseProduct(x - mean);
  }

  // Chan et al. pairwise update.
  void merge(const Accumulator& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
    const double tot = na + nb;
    const Eigen::VectorXd delta = o.mean - mean;
    mean += delta * (nb / tot);
    m2 += o.m2 + delta.cwiseAbs2() * (na * nb / tot);
    n += o.n;
  }
};

Accumulator run_chunk(const SampleFn& sample, int width, long count, std::uint64_t seed,
                      std::uint64_t stream, long chunk) {
  RngStream rng = RngStream::derive(seed, (stream << 32) | static_cast<std::uint64_t>(chunk),
                                    stream_tag::monte_carlo);
  Accumulator acc(width);
  Eigen::VectorXd x(width);
  for (long i = 0; i < count; ++i) {
    sample(rng, x);
    acc.push(x);
  }
  return acc;
}

McEstimate finish(const Accumulator& acc) {
  McEstimate out;
  out.n_samples = acc.n;
  out.mean = acc.mean;
  if (acc.n > 1) {
    out.standard_error =
        (acc.m2 / static_cast<double>(acc.n - 1)).cwiseMax(0.0).cwiseSqrt() /
        std::sqrt(static_cast<double>(acc.n));
  } else {
    out.standard_error = Eigen::VectorXd::Zero(acc.mean.size());
  }
  return out;
}

void check_mc_args(int width, long n_samples) {
  if (width < 1) throw std::invalid_argument("monte_carlo: width must be >= 1");
  if (n_samples < 1) throw std::invalid_argument("monte_carlo: n_samples must be >= 1");
}

long chunk_count(long n) { return (n + kMcChunk - 1) / kMcChunk; }
long chunk_size(long n, long c) { return std::min(kMcChunk, n - c * kMcChunk); }

}  // namespace

McEstimate monte_carlo(const SampleFn& sample, int width, long n_samples, std::uint64_t seed,
                       std::uint64_t stream) {
  check_mc_args(width, n_samples);
  const long chunks = chunk_count(n_samples);
  std::vector<Accumulator> parts(static_cast<std::size_t>(chunks), Accumulator(width));
#pragma omp parallel for schedule(dynamic)
  for (long c = 0; c < chunks; ++c) {
    parts[c] = run_chunk(sample, width, chunk_size(n_samples, c), seed, stream, c);
  }
  Accumulator total(width);
  for (const auto& part : parts) total.merge(part);
  return finish(total);
}

McEstimate monte_carlo_serial(const SampleFn& sample, int width, long n_samples,
                              std::uint64_t seed, std::uint64_t stream) {
  check_mc_args(width, n_samples);
  Accumulator total(width);
  for (long c = 0; c < chunk_count(n_samples); ++c) {
    total.merge(run_chunk(sample, width, chunk_size(n_samples, c), seed, stream, c));
  }
  return finish(total);
}

bool within_band(double estimate, double analytic, double standard_error, bool is_bound) {
  if (!std::isfinite(estimate) || !std::isfinite(standard_error)) return false;
  const double slack = 3.0 * standard_error + 1e-9 * (1.0 + std::abs(analytic));
  if (is_bound) return estimate <= analytic + slack;
  return std::abs(estimate - analytic) <= slack;
}

namespace {

MomentCheckReport scalar_report(std::string name, double analytic, const McEstimate& est,
                                bool is_bound = false) {
  MomentCheckReport r;
  r.identity = std::move(name);
  r.analytic = analytic;
  r.estimate = est.mean[0];
  r.standard_error = est.standard_error[0];
  r.n_samples = est.n_samples;
  r.is_bound = is_bound;
  r.pass = within_band(r.estimate, r.analytic, r.standard_error, is_bound);
  return r;
}

// Worst entry by how far it sits outside (or inside) its band.
MomentCheckReport matrix_report(std::string name, const Eigen::MatrixXd& analytic,
                                const McEstimate& est) {
  const Eigen::Index rows = analytic.rows();
  MomentCheckReport r;
  r.identity = std::move(name);
  r.n_samples = est.n_samples;
  r.pass = true;
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const Eigen::Index k = j * rows + i;
      const double an = analytic(i, j), e = est.mean[k], se = est.standard_error[k];
      const bool ok = within_band(e, an, se);
      r.pass = r.pass && ok;
      const double margin = std::abs(e - an) - 3.0 * se - 1e-9 * (1.0 + std::abs(an));
      if (!(margin <= worst)) {
        worst = margin;
        r.analytic = an;
        r.estimate = e;
        r.standard_error = se;
        r.detail = "entry (" + std::to_string(i) + "," + std::to_string(j) + ")";
      }
    }
  }
  return r;
}

std::string label(const DistributionSpec& spec, int d) {
  char buf[96];
  std::snprintf(buf, sizeof buf, " [%s s2=%.6g d=%d]", std::string(to_string(spec.kind)).c_str(),
                spec.variance, d);
  return buf;
}

}  // namespace

std::vector<MomentCheckReport> check_direction_moments(const DistributionSpec& spec, int d,
                                              const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                                              const Eigen::MatrixXd& A,
                                              const Eigen::VectorXd& b_diag,
                                              const Eigen::MatrixXd& U, long n_samples,
                                              std::uint64_t seed, long heavy_tail_samples) {
  if (d < 1 || a.size() != d || b.size() != d || A.cols() != d || b_diag.size() != d ||
      U.rows() != d || U.cols() != d) {
    throw std::invalid_argument("check_direction_moments: inconsistent dimensions");
  }
  if (!(U.transpose() * U).isIdentity(1e-10)) {
    throw std::invalid_argument("check_direction_moments: U is not orthogonal");
  }
  const double s2 = spec.variance;
  const double k4 = kurtosis(spec.kind), k6 = sixth_standardized_moment(spec.kind);
  const long heavy_n =
      spec.kind == Distribution::laplace && heavy_tail_samples > 0 ? heavy_tail_samples : n_samples;
  const std::string tag = label(spec, d);
  std::vector<MomentCheckReport> out;

  // 1
  {
    const double analytic = s2 * s2 * (k4 + d - 1.0) * a.squaredNorm();
    SampleFn fn = [&](RngStream& rng, Eigen::Ref<Eigen::VectorXd> o) {
      const Eigen::VectorXd z = sample_vector(spec, d, rng);
      const double az = a.dot(z);
      o[0] = az * az * z.squaredNorm();
    };
    out.push_back(scalar_report("moment1" + tag, analytic, monte_carlo(fn, 1, n_samples, seed, 1)));
  }
  // 2
  {
    const double alpha = k6 + (d - 1.0) * k4;
    const double beta = d - 2.0 + 2.0 * k4;
    double diag = 0.0, cross_sq = 0.0, cross_mix = 0.0;
    for (int i = 0; i < d; ++i) {
      diag += a[i] * a[i] * b[i] * b[i];
      for (int j = 0; j < d; ++j) {
        if (i == j) continue;
        cross_sq += a[i] * a[i] * b[j] * b[j];
        cross_mix += a[i] * b[i] * a[j] * b[j];
      }
    }
    const double analytic = s2 * s2 * s2 * (alpha * diag + beta * (cross_sq + 2.0 * cross_mix));
    SampleFn fn = [&](RngStream& rng, Eigen::Ref<Eigen::VectorXd> o) {
      const Eigen::VectorXd z = sample_vector(spec, d, rng);
      const double az = a.dot(z), bz = b.dot(z);
      o[0] = az * az * bz * bz * z.squaredNorm();
    };
    out.push_back(scalar_report("moment2" + tag, analytic, monte_carlo(fn, 1, heavy_n, seed, 2)));
  }
  // 3
  {
    const double analytic = s2 * s2 * s2 * f_variance_factor(d, k4, k6, A);
    SampleFn fn = [&](RngStream& rng, Eigen::Ref<Eigen::VectorXd> o) {
      const Eigen::VectorXd z = sample_vector(spec, d, rng);
      const double n2 = (A * z).squaredNorm();
      o[0] = n2 * n2 * z.squaredNorm();
    };
    out.push_back(scalar_report("moment3" + tag, analytic, monte_carlo(fn, 1, heavy_n, seed, 3)));
  }
  // 4
  {
    const Eigen::MatrixXd c = U * b_diag.cwiseAbs2().asDiagonal() * U.transpose();
    Eigen::MatrixXd analytic = 2.0 * c;
    analytic.diagonal() += (k4 - 3.0) * c.diagonal();
    analytic.diagonal().array() += c.trace();
    analytic *= s2 * s2;
    SampleFn fn = [&](RngStream& rng, Eigen::Ref<Eigen::VectorXd> o) {
      const Eigen::VectorXd z = sample_vector(spec, d, rng);
      const double q = (b_diag.asDiagonal() * (U.transpose() * z)).squaredNorm();
      Eigen::Map<Eigen::MatrixXd>(o.data(), d, d) = q * z * z.transpose();
    };
    out.push_back(
        matrix_report("moment4" + tag, analytic, monte_carlo(fn, d * d, n_samples, seed, 4)));
  }
  return out;
}

double chi_moment(int d, double p) {
  return std::pow(2.0, p / 2.0) * std::exp(std::lgamma((d + p) / 2.0) - std::lgamma(d / 2.0));
}

NormMoments estimate_norm_moments(const DistributionSpec& spec, int d, long n_samples,
                                  std::uint64_t seed) {
  if (n_samples < 10000) throw std::invalid_argument("estimate_norm_moments: n_samples must be >= 1e4");
  if (d < 1) throw std::invalid_argument("estimate_norm_moments: d must be >= 1");
  using Key = std::tuple<int, double, int, long, std::uint64_t>;
  static std::mutex mutex;
  static std::map<Key, NormMoments> cache;
  const Key key{static_cast<int>(spec.kind), spec.variance, d, n_samples, seed};
  {
    std::lock_guard<std::mutex> lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  SampleFn fn = [&](RngStream& rng, Eigen::Ref<Eigen::VectorXd> o) {
    const double n = sample_vector(spec, d, rng).norm();
    o[0] = n * n * n;
    o[1] = o[0] * n * n;
  };
  const McEstimate est = monte_carlo(fn, 2, n_samples, seed, 0x4e4f524d);
  const NormMoments m{est.mean[0], est.standard_error[0], est.mean[1], est.standard_error[1]};
  std::lock_guard<std::mutex> lock(mutex);
  cache.emplace(key, m);
  return m;
}

namespace {

double second_moment_factor(int d, const DistributionSpec& spec) {
  const double s2 = spec.variance;
  return (d + kurtosis(spec.kind) - 1.0) * s2 * s2 - 2.0 * s2 + 1.0;
}

}  // namespace

MomentCheckReport check_second_moment(const Objective& f, const Eigen::VectorXd& x,
                                      const DistributionSpec& spec, double h, long n_samples,
                                      std::uint64_t seed, const SmoothnessInputs& smooth) {
  if (!f.has_gradient()) throw std::invalid_argument("check_second_moment: objective needs a gradient");
  if (!(h >= 0.0)) throw std::invalid_argument("check_second_moment: h must be >= 0");
  const int d = f.dimension;
  const Eigen::VectorXd grad = f.gradient(x);
  const double g2 = grad.squaredNorm();
  SampleFn fn = [&](RngStream& rng, Eigen::Ref<Eigen::VectorXd> o) {
    const Eigen::VectorXd z = sample_vector(spec, d, rng);
    o[0] = (rfg(f, x, z, h) - grad).squaredNorm();
  };
  const McEstimate est = monte_carlo(fn, 1, n_samples, seed, 5);
  const std::string tag = label(spec, d);
  if (h == 0.0) {
    return scalar_report("second-moment" + tag, second_moment_factor(d, spec) * g2, est);
  }
  const double s2 = spec.variance;
  const double k4 = kurtosis(spec.kind), k6 = sixth_standardized_moment(spec.kind);
  const double L = smooth.lipschitz;
  const double bound = 0.5 * h * h * L * L * s2 * s2 * s2 * (k6 + (d - 2.0 + 3.0 * k4) * (d - 1.0)) * d +
                       h * L * std::sqrt(g2) * (smooth.norm_moments.m5 + smooth.norm_moments.m3) +
                       second_moment_factor(d, spec) * g2;
  MomentCheckReport r = scalar_report("second-moment-bound" + tag, bound, est, true);
  char buf[64];
  std::snprintf(buf, sizeof buf, "h=%.3g L=%.6g", h, L);
  r.detail = buf;
  return r;
}

MomentCheckReport check_relative_error(const Objective& f, const Eigen::VectorXd& x,
                                       const DistributionSpec& spec, long n_samples,
                                       std::uint64_t seed) {
  if (!f.has_gradient()) throw std::invalid_argument("check_relative_error: objective needs a gradient");
  const int d = f.dimension;
  const Eigen::VectorXd grad = f.gradient(x);
  const double g2 = grad.squaredNorm();
  if (!(g2 > 0.0)) throw std::domain_error("check_relative_error: gradient vanishes at x");
  SampleFn fn = [&](RngStream& rng, Eigen::Ref<Eigen::VectorXd> o) {
    const Eigen::VectorXd z = sample_vector(spec, d, rng);
    o[0] = (rfg(f, x, z, 0.0) - grad).squaredNorm() / g2;
  };
  return scalar_report("relative-error" + label(spec, d), second_moment_factor(d, spec),
                       monte_carlo(fn, 1, n_samples, seed, 6));
}

MomentCheckReport check_phi_map(const QuadraticProblem& p, const PhbStateMatrix& s, double mu,
                                double eta, const DistributionSpec& spec, long n_samples,
                                std::uint64_t seed) {
  const int d = p.dim();
  const Eigen::MatrixXd full = s.full();
  const Eigen::MatrixXd analytic = phi_map(s, PhbHyperparams::from(mu, eta, spec), p).full();
  const Eigen::VectorXd& lam = p.eigenvalues;
  SampleFn fn = [&](RngStream& rng, Eigen::Ref<Eigen::VectorXd> o) {
    const Eigen::VectorXd w = p.eigenvectors.transpose() * sample_vector(spec, d, rng);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * d, 2 * d);
    m.topLeftCorner(d, d) = -eta * w * lam.cwiseProduct(w).transpose();
    m.topLeftCorner(d, d).diagonal().array() += 1.0 + mu;
    m.topRightCorner(d, d).diagonal().setConstant(-mu);
    m.bottomLeftCorner(d, d).diagonal().setOnes();
    Eigen::Map<Eigen::MatrixXd>(o.data(), 2 * d, 2 * d) = m.transpose() * full * m;
  };
  return matrix_report("phi-map" + label(spec, d), analytic,
                       monte_carlo(fn, 4 * d * d, n_samples, seed, 7));
}

namespace {

Eigen::MatrixXd gaussian_matrix(int rows, int cols, RngStream& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.normal();
  return m;
}

}  // namespace

std::vector<MomentCheckReport> run_verification_suite(const VerificationOptions& opts) {
  std::vector<MomentCheckReport> out;
  std::uint64_t case_index = 0;
  auto next_seed = [&] { return opts.seed + 1000 * ++case_index; };

  for (Distribution kind : opts.kinds) {
    for (int d : opts.dims) {
      RngStream rng = RngStream::derive(opts.seed, case_index, stream_tag::problem);
      const Eigen::VectorXd a = gaussian_matrix(d, 1, rng);
      const Eigen::VectorXd b = gaussian_matrix(d, 1, rng);
      const Eigen::MatrixXd A = gaussian_matrix(d, d, rng);
      Eigen::VectorXd bd(d);
      for (int i = 0; i < d; ++i) bd[i] = 0.5 + 1.5 * rng.uniform01();
      const Eigen::MatrixXd U = gaussian_matrix(d, d, rng).householderQr().householderQ();
      auto reps = check_direction_moments({kind, 1.0}, d, a, b, A, bd, U, opts.n_samples, next_seed(),
                                 opts.heavy_tail_samples);
      out.insert(out.end(), reps.begin(), reps.end());
    }
  }

  // Spot values with closed forms that are easy to verify by hand.
  {
    const DistributionSpec g{Distribution::gaussian, 1.0};
    Eigen::VectorXd e1 = Eigen::VectorXd::Unit(3, 0);
    auto r1 = check_direction_moments(g, 3, e1, e1, Eigen::MatrixXd::Identity(3, 3),
                             Eigen::VectorXd::Ones(3), Eigen::MatrixXd::Identity(3, 3),
                             opts.n_samples, next_seed());
    r1[0].identity = "spot moment1 gaussian d=3 a=e1";
    out.push_back(r1[0]);
    auto r3 = check_direction_moments(g, 2, Eigen::VectorXd::Ones(2), Eigen::VectorXd::Ones(2),
                             Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Ones(2),
                             Eigen::MatrixXd::Identity(2, 2), opts.n_samples, next_seed());
    r3[2].identity = "spot moment3 gaussian A=I2";
    out.push_back(r3[2]);
  }

  // Estimator moments on a random quadratic.
  {
    const int d = 5;
    RngStream rng = RngStream::derive(opts.seed, 0xabc, stream_tag::problem);
    const QuadraticProblem p =
        make_quadratic_problem(gaussian_matrix(d, d, rng) + 2.0 * Eigen::MatrixXd::Identity(d, d),
                               gaussian_matrix(d, 1, rng));
    const Objective f = quadratic_objective(p);
    const Eigen::VectorXd x = p.x_star + gaussian_matrix(d, 1, rng);
    for (Distribution kind : opts.kinds) {
      const DistributionSpec unit{kind, 1.0};
      out.push_back(check_second_moment(f, x, unit, 0.0, opts.n_samples, next_seed()));
      SmoothnessInputs smooth;
      smooth.lipschitz = p.lambda_max();
      smooth.norm_moments = estimate_norm_moments(unit, d, std::max(opts.n_samples, 10000L), next_seed());
      out.push_back(check_second_moment(f, x, unit, 1e-2, opts.n_samples, next_seed(), smooth));
      const DistributionSpec best{kind, optimal_variance(d, kind)};
      out.push_back(check_relative_error(f, x, best, opts.n_samples, next_seed()));
    }
  }
  return out;
}

}  // namespace rfg
