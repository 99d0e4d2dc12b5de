#pragma once

// Closed-form theory for f(x) = 1/2 ||A x - b||^2 driven by randomized
// forward gradients: exact estimator moments, the GD contraction rate, and
// the second-moment map of the heavy-ball recursion with its 2x2 block
// reduction.

#include "rfg/distributions.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace rfg {

struct QuadraticProblem {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  /// Eigenvalues of A^T A, ascending.
  Eigen::VectorXd eigenvalues;
  /// Orthogonal U_A with A^T A = U_A diag(eigenvalues) U_A^T. The
  /// largest-magnitude entry of every column is positive.
  Eigen::MatrixXd eigenvectors;
  Eigen::VectorXd x_star;
  double kappa_A = 1.0;

  int dim() const { return static_cast<int>(A.cols()); }
  double lambda_min() const { return eigenvalues[0]; }
  double lambda_max() const { return eigenvalues[eigenvalues.size() - 1]; }
  double value(const Eigen::VectorXd& x) const { return 0.5 * (A * x - b).squaredNorm(); }
};

/// Builds the spectral data. Throws std::domain_error when A^T A is
/// singular (no unique minimizer).
QuadraticProblem make_quadratic_problem(Eigen::MatrixXd A, Eigen::VectorXd b);

/// True when U_A is a signed permutation, i.e. A^T A is diagonal up to
/// ordering.
bool has_axis_aligned_spectrum(const QuadraticProblem& p, double tol = 1e-10);

/// A^T (A x - b).
Eigen::VectorXd exact_gradient(const QuadraticProblem& p, const Eigen::VectorXd& x);

struct RfgDecomposition {
  Eigen::VectorXd exact_part;  // (z^T grad f) z
  Eigen::VectorXd bias_part;   // h/2 ||A z||^2 z
  Eigen::VectorXd sum() const { return exact_part + bias_part; }
};

/// The forward-difference estimator on a quadratic splits exactly into the
/// exact estimator plus a bias term.
RfgDecomposition rfg_decomposition(const QuadraticProblem& p, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& z, double h);

/// F(d, k4, k6, A) such that E ||A z||^4 ||z||^2 = sigma^6 F.
double f_variance_factor(int d, double kappa4, double kappa6, const Eigen::MatrixXd& A);

struct RfgMoments {
  Eigen::VectorXd mean;
  /// E ||g||^2 = (k4 + d - 1) sigma^4 ||grad f||^2 + h^2/4 sigma^6 F.
  double second_moment = 0.0;
  /// E ||g - E g||^2 = second_moment - ||mean||^2.
  double variance = 0.0;
};
/// mean = sigma^2 grad f (the bias term has zero mean for symmetric laws).
RfgMoments rfg_moments(const QuadraticProblem& p, const Eigen::VectorXd& x,
                       const DistributionSpec& spec, double h);

/// 1 / ((k4 + d - 1) sigma^2) * 2 / (lambda_max + lambda_min).
double optimal_gd_lr(const QuadraticProblem& p, const DistributionSpec& spec);

/// 1 - (1 - ((kA - 1)/(kA + 1))^2) / (k4 + d - 1).
double gd_rate(int d, double kappa4, double kappa_A);

struct GdRateBound {
  double r_rate = 0.0;
  /// r^k e0 + h^2 sigma^2 (1 - r^k) F / (lbar^2 (k4 + d - 1) (1 - q^2)),
  /// lbar = (lambda_max + lambda_min)/2, q = (kA - 1)/(kA + 1).
  double bound = 0.0;
};

GdRateBound gd_rate_and_bound(const QuadraticProblem& p, const DistributionSpec& spec, double h,
                              long k, double initial_error_sq);

// ---------------------------------------------------------------------------
// Heavy ball second-moment map

/// S = [S1 S2^T; S2 S3], symmetric 2d x 2d.
struct PhbStateMatrix {
  Eigen::MatrixXd s1, s2, s3;

  static PhbStateMatrix identity(int d);
  static PhbStateMatrix zero(int d);
  static PhbStateMatrix from_full(const Eigen::MatrixXd& full);
  Eigen::MatrixXd full() const;
  int dim() const { return static_cast<int>(s1.rows()); }
};

struct PhbHyperparams {
  double mu = 0.0;
  double eta = 0.0;
  double sigma2 = 1.0;
  double kappa4 = 1.0;

  static PhbHyperparams from(double mu, double eta, const DistributionSpec& spec) {
    return {mu, eta, spec.variance, kurtosis(spec.kind)};
  }
};

/// tr(S1) I + (k4 - 1) diag(U_A S1 U_A^T). diag(.)_j equals
/// ||(U_A L1)_{j,:}||^2 for any factor S1 = L1 L1^T.
Eigen::MatrixXd h4_term(const Eigen::MatrixXd& s1, const Eigen::MatrixXd& u_a, double kappa4);

/// E[w w^T S1 w w^T] / sigma^4 for w = U_A^T z:
/// U_A^T (H4 + 2 offdiag(U_A S1 U_A^T)) U_A. Reduces to U_A^T H4 U_A when
/// U_A S1 U_A^T is diagonal.
Eigen::MatrixXd fourth_moment_term(const Eigen::MatrixXd& s1, const Eigen::MatrixXd& u_a,
                                   double kappa4);

/// E[Mbar^T S Mbar] in the eigenbasis of A^T A. Throws std::domain_error
/// when S1 is not PSD within 1e-10.
PhbStateMatrix phi_map(const PhbStateMatrix& s, const PhbHyperparams& hp,
                       const QuadraticProblem& p);

/// E[P^T S P] for P = I - eta z z^T A^T A, in the original coordinates.
Eigen::MatrixXd gd_second_moment_map(const Eigen::MatrixXd& s, const QuadraticProblem& p,
                                     double eta, double sigma2, double kappa4);

/// Diagonal entries of S1, S2, S3 for one eigenmode.
struct PsiTriple {
  double s1 = 0.0, s2 = 0.0, s3 = 0.0;
};

/// Symmetric block [h1 h2; h2 h3].
struct PsiBlock {
  double h1 = 0.0, h2 = 0.0, h3 = 0.0;
};

/// Per-mode 2x2 blocks of phi_map for block-diagonal S with an
/// axis-aligned spectrum:
///   v_i = 1 + mu - eta sigma^2 lambda_i
///   h1 = v^2 s1 + 2 v s2 + s3 + (eta sigma^2 lambda_i)^2 (||s1||_1 + (k4 - 2) s1)
///   h2 = -mu (v s1 + s2),  h3 = mu^2 s1.
std::vector<PsiBlock> psi_blocks(std::span<const PsiTriple> state, const PhbHyperparams& hp,
                                 const Eigen::VectorXd& eigenvalues);
/// As above, rejecting problems whose A^T A is not diagonal.
std::vector<PsiBlock> psi_blocks(std::span<const PsiTriple> state, const PhbHyperparams& hp,
                                 const QuadraticProblem& p);

double psi_max_eigenvalue(const PsiBlock& block);

/// log of the largest eigenvalue of Phi^k(I_2d), iterating the 2x2 blocks
/// with rescaling so that neither overflow nor denormals occur.
double log_max_eigenvalue_phi_power(const Eigen::VectorXd& eigenvalues, const PhbHyperparams& hp,
                                    long k);

struct PhbNoiseOptions {
  long n_samples = 100000;
  std::uint64_t seed = 0;
};

struct PhbPrediction {
  /// E ||E_k||^2 for k = 0..K.
  std::vector<double> values;
  bool divergent = false;
};

/// ||U^T E0||^2_{Phi^k} + eta^2 h^2 / 4 sum_{i<k} E[||A z||^4 ||U^T Z||^2_{Phi^i}]
/// for every k <= k_max. The h-term expectation is estimated by Monte-Carlo.
PhbPrediction phb_error_curve(const QuadraticProblem& p, double mu, double eta,
                              const DistributionSpec& spec, const Eigen::VectorXd& e0, long k_max,
                              double h, const PhbNoiseOptions& noise = {});

/// Single-k form of phb_error_curve.
PhbPrediction phb_error_prediction(const QuadraticProblem& p, double mu, double eta,
                                   const DistributionSpec& spec, const Eigen::VectorXd& e0, long k,
                                   double h, const PhbNoiseOptions& noise = {});

struct PhbGrid {
  std::vector<double> mu;
  std::vector<double> eta;

  /// mu = i/100 for i in -99..99, eta = 10^(-5 + j/100) for j in 0..300.
  static PhbGrid standard();
  static PhbGrid linear_log(double mu_lo, double mu_hi, int mu_count, double log10_eta_lo,
                            double log10_eta_hi, int eta_count);
  std::size_t size() const { return mu.size() * eta.size(); }
};

struct GridCell {
  double mu = 0.0;
  double eta = 0.0;
  double max_eigenvalue = 0.0;
  double log_max_eigenvalue = 0.0;
};

struct GridSearchResult {
  double mu_star = 0.0;
  double eta_star = 0.0;
  double best_value = 0.0;
  /// Row-major over (mu, eta): index = i_mu * eta.size() + i_eta.
  std::vector<GridCell> cells;
};

/// Largest eigenvalue of Phi^k_target(I_2d) on every grid cell; returns the
/// argmin. Cells are evaluated in parallel.
GridSearchResult grid_search(const QuadraticProblem& p, const DistributionSpec& spec,
                             const PhbGrid& grid, long k_target);
/// Serial reference for grid_search.
GridSearchResult grid_search_serial(const QuadraticProblem& p, const DistributionSpec& spec,
                                    const PhbGrid& grid, long k_target);

}  // namespace rfg
