#pragma once

// Monte-Carlo checks of the closed-form moments of random directions and of
// the forward-gradient estimator.

#include "rfg/distributions.hpp"
#include "rfg/quadratic_theory.hpp"
#include "rfg/rfg_estimator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace rfg {

/// Fills one vector-valued sample. Must be safe to call concurrently.
using SampleFn = std::function<void(RngStream&, Eigen::Ref<Eigen::VectorXd>)>;

struct McEstimate {
  Eigen::VectorXd mean;
  /// sample std / sqrt(n), entrywise.
  Eigen::VectorXd standard_error;
  long n_samples = 0;
};

/// Samples are drawn in fixed-size chunks, chunk c on the stream
/// derive(seed, (stream << 32) | c). Chunks are reduced in index order, so
/// the result is bit-identical to monte_carlo_serial for any thread count.
McEstimate monte_carlo(const SampleFn& sample, int width, long n_samples, std::uint64_t seed,
                       std::uint64_t stream = 0);
McEstimate monte_carlo_serial(const SampleFn& sample, int width, long n_samples,
                              std::uint64_t seed, std::uint64_t stream = 0);

inline constexpr long kMcChunk = 1L << 14;

struct MomentCheckReport {
  std::string identity;
  double analytic = 0.0;  // the bound when is_bound
  double estimate = 0.0;
  double standard_error = 0.0;
  long n_samples = 0;
  bool is_bound = false;
  bool pass = false;
  std::string detail;
};

/// |estimate - analytic| <= 3 SE (estimate <= bound + 3 SE for bounds), with
/// a 1e-9 relative floor so zero-variance cases are not failed by roundoff.
bool within_band(double estimate, double analytic, double standard_error, bool is_bound = false);

/// Four identities for z with i.i.d. coordinates of law spec:
///   1. E[<a,z>^2 ||z||^2]           = s^4 (k4 + d - 1) ||a||^2
///   2. E[<a,z>^2 <b,z>^2 ||z||^2]   = s^6 (al sum a_i^2 b_i^2
///                                   + be (sum_{i!=j} a_i^2 b_j^2 + 2 sum_{i!=j} a_i b_i a_j b_j))
///      with al = k6 + (d - 1) k4, be = d - 2 + 2 k4
///   3. E[||A z||^4 ||z||^2]          = s^6 F(d, k4, k6, A)
///   4. E[z ||B U^T z||^2 z^T]        = s^4 (tr(C) I + 2 C + (k4 - 3) diag C), C = U B^2 U^T
/// Identity 4 is checked entrywise; the worst entry is reported. For
/// Laplace, identities 2 and 3 use heavy_tail_samples when it is positive.
std::vector<MomentCheckReport> check_direction_moments(
    const DistributionSpec& spec, int d, const Eigen::VectorXd& a, const Eigen::VectorXd& b,
    const Eigen::MatrixXd& A, const Eigen::VectorXd& b_diag, const Eigen::MatrixXd& U,
    long n_samples, std::uint64_t seed, long heavy_tail_samples = 0);

struct NormMoments {
  double m3 = 0.0, se3 = 0.0;
  double m5 = 0.0, se5 = 0.0;
};

/// E||z||^3 and E||z||^5 by Monte-Carlo; cached per (spec, d, n, seed).
/// Throws std::invalid_argument when n_samples < 1e4.
NormMoments estimate_norm_moments(const DistributionSpec& spec, int d, long n_samples,
                                  std::uint64_t seed);

/// E||z||^p for z ~ N(0, I_d): 2^(p/2) Gamma((d + p)/2) / Gamma(d/2).
double chi_moment(int d, double p);

struct SmoothnessInputs {
  /// Gradient Lipschitz constant.
  double lipschitz = 0.0;
  NormMoments norm_moments;
};

/// E||rfg(f, x, z, h) - grad f(x)||^2. h = 0: equality with
/// ((d + k4 - 1) s^4 - 2 s^2 + 1) ||grad f||^2. h > 0: one-sided check
/// against
///   h^2 L^2 / 2 s^6 (k6 + (d - 2 + 3 k4)(d - 1)) d
///   + h L ||grad f|| E[||z||^5 + ||z||^3] + ((d + k4 - 1) s^4 - 2 s^2 + 1) ||grad f||^2.
/// Needs f.gradient.
MomentCheckReport check_second_moment(const Objective& f, const Eigen::VectorXd& x,
                                      const DistributionSpec& spec, double h, long n_samples,
                                      std::uint64_t seed, const SmoothnessInputs& smooth = {});

/// E||g - grad f||^2 / ||grad f||^2 for the exact estimator against
/// (d + k4 - 1) s^4 - 2 s^2 + 1, which is 1 - 1/(d + k4 - 1) at the optimal
/// variance.
MomentCheckReport check_relative_error(const Objective& f, const Eigen::VectorXd& x,
                                       const DistributionSpec& spec, long n_samples,
                                       std::uint64_t seed);

/// phi_map(S) against the sample mean of Mbar^T S Mbar, entrywise.
MomentCheckReport check_phi_map(const QuadraticProblem& p, const PhbStateMatrix& s, double mu,
                                double eta, const DistributionSpec& spec, long n_samples,
                                std::uint64_t seed);

struct VerificationOptions {
  long n_samples = 1000000;
  long heavy_tail_samples = 10000000;
  std::vector<int> dims{2, 3, 5};
  std::vector<Distribution> kinds{kAllDistributions.begin(), kAllDistributions.end()};
  std::uint64_t seed = 2024;
};

/// Every identity for every (kind, d), the spot values, the second-moment
/// equality and bound on a random quadratic, and the optimal-variance error.
std::vector<MomentCheckReport> run_verification_suite(const VerificationOptions& opts);

}  // namespace rfg
