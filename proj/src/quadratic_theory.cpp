#include "rfg/quadratic_theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace rfg {

QuadraticProblem make_quadratic_problem(Eigen::MatrixXd A, Eigen::VectorXd b) {
  if (A.rows() != b.size()) throw std::invalid_argument("quadratic: A rows must match b");
  if (A.cols() < 1) throw std::invalid_argument("quadratic: A has no columns");

  QuadraticProblem p;
  p.A = std::move(A);
  p.b = std::move(b);
  const Eigen::MatrixXd ata = p.A.transpose() * p.A;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ata);
  if (eig.info() != Eigen::Success) throw std::runtime_error("quadratic: eigensolver failed");
  p.eigenvalues = eig.eigenvalues();
  p.eigenvectors = eig.eigenvectors();
  for (Eigen::Index j = 0; j < p.eigenvectors.cols(); ++j) {
    Eigen::Index at = 0;
    p.eigenvectors.col(j).cwiseAbs().maxCoeff(&at);
    if (p.eigenvectors(at, j) < 0.0) p.eigenvectors.col(j) *= -1.0;
  }
  if (!(p.lambda_min() > 1e-14 * p.lambda_max())) {
    throw std::domain_error("quadratic: A^T A is singular (lambda_min = " +
                            std::to_string(p.lambda_min()) + "); no unique minimizer");
  }
  p.kappa_A = p.lambda_max() / p.lambda_min();
  p.x_star = p.A.colPivHouseholderQr().solve(p.b);
  return p;
}

bool has_axis_aligned_spectrum(const QuadraticProblem& p, double tol) {
  const Eigen::MatrixXd& u = p.eigenvectors;
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    int big = 0;
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      const double a = std::abs(u(i, j));
      if (std::abs(a - 1.0) <= tol) {
        ++big;
      } else if (a > tol) {
        return false;
      }
    }
    if (big != 1) return false;
  }
  return true;
}

Eigen::VectorXd exact_gradient(const QuadraticProblem& p, const Eigen::VectorXd& x) {
  if (x.size() != p.dim()) throw std::invalid_argument("exact_gradient: dimension mismatch");
  return p.A.transpose() * (p.A * x - p.b);
}

RfgDecomposition rfg_decomposition(const QuadraticProblem& p, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& z, double h) {
  if (!(h >= 0.0)) throw std::invalid_argument("rfg_decomposition: h must be >= 0");
  if (z.size() != p.dim()) throw std::invalid_argument("rfg_decomposition: dimension mismatch");
  RfgDecomposition out;
  out.exact_part = z.dot(exact_gradient(p, x)) * z;
  out.bias_part = 0.5 * h * (p.A * z).squaredNorm() * z;
  return out;
}

double f_variance_factor(int d, double kappa4, double kappa6, const Eigen::MatrixXd& A) {
  if (A.cols() != d) throw std::invalid_argument("f_variance_factor: A must have d columns");
  const double alpha = kappa6 + (d - 1) * kappa4;
  const double beta = d + 2.0 * (kappa4 - 1.0);
  // With R_k = sum_i A_ki^2, Q = (A.A)(A.A)^T and G = A A^T:
  //   sum_{i!=j} A_ki^2 A_lj^2 = R_k R_l - Q_kl
  //   sum_{i!=j} A_ki A_li A_kj A_lj = G_kl^2 - Q_kl
  const Eigen::MatrixXd sq = A.cwiseAbs2();
  const double q_sum = (sq * sq.transpose()).sum();
  const double r_sum = sq.sum();
  const double g2_sum = (A * A.transpose()).cwiseAbs2().sum();
  return alpha * q_sum + beta * (r_sum * r_sum - 3.0 * q_sum + 2.0 * g2_sum);
}

RfgMoments rfg_moments(const QuadraticProblem& p, const Eigen::VectorXd& x,
                       const DistributionSpec& spec, double h) {
  if (!(h >= 0.0)) throw std::invalid_argument("rfg_moments: h must be >= 0");
  const int d = p.dim();
  const double s2 = spec.variance;
  const double k4 = kurtosis(spec.kind);
  const Eigen::VectorXd g = exact_gradient(p, x);
  RfgMoments m;
  m.mean = s2 * g;
  m.second_moment = (k4 + d - 1.0) * s2 * s2 * g.squaredNorm();
  if (h > 0.0) {
    m.second_moment += 0.25 * h * h * s2 * s2 * s2 *
                       f_variance_factor(d, k4, sixth_standardized_moment(spec.kind), p.A);
  }
  m.variance = m.second_moment - m.mean.squaredNorm();
  return m;
}

double optimal_gd_lr(const QuadraticProblem& p, const DistributionSpec& spec) {
  const double k4 = kurtosis(spec.kind);
  return 1.0 / ((k4 + p.dim() - 1.0) * spec.variance) * 2.0 / (p.lambda_max() + p.lambda_min());
}

double gd_rate(int d, double kappa4, double kappa_A) {
  if (!std::isfinite(kappa_A) || kappa_A < 1.0) {
    throw std::domain_error("gd_rate: condition number undefined");
  }
  const double q = (kappa_A - 1.0) / (kappa_A + 1.0);
  return 1.0 - (1.0 - q * q) / (kappa4 + d - 1.0);
}

GdRateBound gd_rate_and_bound(const QuadraticProblem& p, const DistributionSpec& spec, double h,
                              long k, double initial_error_sq) {
  if (!(p.lambda_min() > 0.0)) throw std::domain_error("gd_rate_and_bound: lambda_min is zero");
  if (k < 0) throw std::invalid_argument("gd_rate_and_bound: k must be >= 0");
  const int d = p.dim();
  const double k4 = kurtosis(spec.kind);
  GdRateBound out;
  out.r_rate = gd_rate(d, k4, p.kappa_A);
  const double rk = std::pow(out.r_rate, static_cast<double>(k));
  out.bound = rk * initial_error_sq;
  if (h > 0.0) {
    const double q = (p.kappa_A - 1.0) / (p.kappa_A + 1.0);
    const double lbar = 0.5 * (p.lambda_max() + p.lambda_min());
    const double F = f_variance_factor(d, k4, sixth_standardized_moment(spec.kind), p.A);
    out.bound += h * h * spec.variance * (1.0 - rk) * F /
                 (lbar * lbar * (k4 + d - 1.0) * (1.0 - q * q));
  }
  return out;
}

// ---------------------------------------------------------------------------

PhbStateMatrix PhbStateMatrix::identity(int d) {
  return {Eigen::MatrixXd::Identity(d, d), Eigen::MatrixXd::Zero(d, d),
          Eigen::MatrixXd::Identity(d, d)};
}

PhbStateMatrix PhbStateMatrix::zero(int d) {
  return {Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Zero(d, d)};
}

PhbStateMatrix PhbStateMatrix::from_full(const Eigen::MatrixXd& full) {
  if (full.rows() != full.cols() || full.rows() % 2 != 0) {
    throw std::invalid_argument("PhbStateMatrix: expected a square matrix of even size");
  }
  const Eigen::Index d = full.rows() / 2;
  return {full.topLeftCorner(d, d), full.bottomLeftCorner(d, d), full.bottomRightCorner(d, d)};
}

Eigen::MatrixXd PhbStateMatrix::full() const {
  const Eigen::Index d = s1.rows();
  Eigen::MatrixXd m(2 * d, 2 * d);
  m.topLeftCorner(d, d) = s1;
  m.topRightCorner(d, d) = s2.transpose();
  m.bottomLeftCorner(d, d) = s2;
  m.bottomRightCorner(d, d) = s3;
  return m;
}

Eigen::MatrixXd h4_term(const Eigen::MatrixXd& s1, const Eigen::MatrixXd& u_a, double kappa4) {
  const Eigen::MatrixXd c = u_a * s1 * u_a.transpose();
  Eigen::MatrixXd h4 = (kappa4 - 1.0) * Eigen::MatrixXd(c.diagonal().asDiagonal());
  h4.diagonal().array() += s1.trace();
  return h4;
}

Eigen::MatrixXd fourth_moment_term(const Eigen::MatrixXd& s1, const Eigen::MatrixXd& u_a,
                                   double kappa4) {
  Eigen::MatrixXd c = u_a * s1 * u_a.transpose();
  c.diagonal().setZero();
  const Eigen::MatrixXd inner = h4_term(s1, u_a, kappa4) + 2.0 * c;
  return u_a.transpose() * inner * u_a;
}

namespace {

void symmetrize(Eigen::MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

PhbStateMatrix phi_map_unchecked(const PhbStateMatrix& s, const PhbHyperparams& hp,
                                 const QuadraticProblem& p) {
  const Eigen::VectorXd& lam = p.eigenvalues;
  const double es = hp.eta * hp.sigma2;
  const double a = 1.0 + hp.mu;
  const Eigen::VectorXd v = (a - es * lam.array()).matrix();

  PhbStateMatrix out;
  // E[J^T S1 J] with J = (1 + mu) I - eta w w^T Sigma, w = U_A^T z.
  out.s1 = a * a * s.s1 - a * es * (lam.asDiagonal() * s.s1 + s.s1 * lam.asDiagonal());
  out.s1 += es * es * lam.asDiagonal() * fourth_moment_term(s.s1, p.eigenvectors, hp.kappa4) *
            lam.asDiagonal();
  out.s1 += v.asDiagonal() * s.s2.transpose() + s.s2 * v.asDiagonal() + s.s3;
  out.s2 = -hp.mu * (s.s1 * v.asDiagonal() + s.s2.transpose());
  out.s3 = hp.mu * hp.mu * s.s1;
  symmetrize(out.s1);
  symmetrize(out.s3);
  return out;
}

}  // namespace

PhbStateMatrix phi_map(const PhbStateMatrix& s, const PhbHyperparams& hp,
                       const QuadraticProblem& p) {
  const int d = p.dim();
  if (s.s1.rows() != d || s.s2.rows() != d || s.s3.rows() != d || s.s1.cols() != d ||
      s.s2.cols() != d || s.s3.cols() != d) {
    throw std::invalid_argument("phi_map: state blocks must be d x d");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (s.s1 + s.s1.transpose()),
                                                     Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  if (eig.eigenvalues().minCoeff() < -1e-10 * scale) {
    throw std::domain_error("phi_map: S1 is not positive semidefinite (min eigenvalue " +
                            std::to_string(eig.eigenvalues().minCoeff()) + ")");
  }
  return phi_map_unchecked(s, hp, p);
}

Eigen::MatrixXd gd_second_moment_map(const Eigen::MatrixXd& s, const QuadraticProblem& p,
                                     double eta, double sigma2, double kappa4) {
  const Eigen::MatrixXd h = p.A.transpose() * p.A;
  Eigen::MatrixXd inner = 2.0 * s;
  inner.diagonal() += (kappa4 - 3.0) * s.diagonal();
  inner.diagonal().array() += s.trace();
  Eigen::MatrixXd out = s - eta * sigma2 * (h * s + s * h) + eta * eta * sigma2 * sigma2 * h * inner * h;
  symmetrize(out);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct ModeCoefficients {
  double v;  // 1 + mu - eta sigma^2 lambda
  double c;  // (eta sigma^2 lambda)^2
};

std::vector<ModeCoefficients> mode_coefficients(const Eigen::VectorXd& eigenvalues,
                                                const PhbHyperparams& hp) {
  std::vector<ModeCoefficients> out(static_cast<std::size_t>(eigenvalues.size()));
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    const double el = hp.eta * hp.sigma2 * eigenvalues[i];
    out[i] = {1.0 + hp.mu - el, el * el};
  }
  return out;
}

inline PsiBlock psi_kernel(const PsiTriple& s, const ModeCoefficients& m, double s1_sum,
                           const PhbHyperparams& hp) {
  return {m.v * m.v * s.s1 + 2.0 * m.v * s.s2 + s.s3 + m.c * (s1_sum + (hp.kappa4 - 2.0) * s.s1),
          -hp.mu * (m.v * s.s1 + s.s2), hp.mu * hp.mu * s.s1};
}

}  // namespace

std::vector<PsiBlock> psi_blocks(std::span<const PsiTriple> state, const PhbHyperparams& hp,
                                 const Eigen::VectorXd& eigenvalues) {
  if (static_cast<Eigen::Index>(state.size()) != eigenvalues.size()) {
    throw std::invalid_argument("psi_blocks: one triple per eigenvalue required");
  }
  const auto coeffs = mode_coefficients(eigenvalues, hp);
  double s1_sum = 0.0;
  for (const auto& t : state) s1_sum += t.s1;
  std::vector<PsiBlock> out(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) out[i] = psi_kernel(state[i], coeffs[i], s1_sum, hp);
  return out;
}

std::vector<PsiBlock> psi_blocks(std::span<const PsiTriple> state, const PhbHyperparams& hp,
                                 const QuadraticProblem& p) {
  if (!has_axis_aligned_spectrum(p)) {
    throw std::domain_error(
        "psi_blocks: A^T A is not diagonal, so Phi does not reduce to 2x2 blocks");
  }
  return psi_blocks(state, hp, p.eigenvalues);
}

double psi_max_eigenvalue(const PsiBlock& b) {
  const double half_gap = 0.5 * (b.h1 - b.h3);
  return 0.5 * (b.h1 + b.h3) + std::hypot(half_gap, b.h2);
}

double log_max_eigenvalue_phi_power(const Eigen::VectorXd& eigenvalues, const PhbHyperparams& hp,
                                    long k) {
  if (k < 0) throw std::invalid_argument("log_max_eigenvalue_phi_power: k must be >= 0");
  const auto coeffs = mode_coefficients(eigenvalues, hp);
  const std::size_t d = coeffs.size();
  std::vector<PsiTriple> s(d, PsiTriple{1.0, 0.0, 1.0});
  double log_scale = 0.0;
  for (long step = 0; step < k; ++step) {
    double s1_sum = 0.0;
    for (const auto& t : s) s1_sum += t.s1;
    double peak = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const PsiBlock b = psi_kernel(s[i], coeffs[i], s1_sum, hp);
      s[i] = {b.h1, b.h2, b.h3};
      peak = std::max({peak, std::abs(b.h1), std::abs(b.h2), std::abs(b.h3)});
    }
    if (!std::isfinite(peak)) return std::numeric_limits<double>::infinity();
    if (peak == 0.0) return -std::numeric_limits<double>::infinity();
    if (peak > 1e100 || peak < 1e-100) {
      for (auto& t : s) {
        t.s1 /= peak;
        t.s2 /= peak;
        t.s3 /= peak;
      }
      log_scale += std::log(peak);
    }
  }
  double best = 0.0;
  for (const auto& t : s) best = std::max(best, psi_max_eigenvalue({t.s1, t.s2, t.s3}));
  if (best <= 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(best) + log_scale;
}

// ---------------------------------------------------------------------------

PhbPrediction phb_error_curve(const QuadraticProblem& p, double mu, double eta,
                              const DistributionSpec& spec, const Eigen::VectorXd& e0, long k_max,
                              double h, const PhbNoiseOptions& noise) {
  const int d = p.dim();
  if (e0.size() != 2 * d) throw std::invalid_argument("phb_error_curve: E0 must have 2d entries");
  if (k_max < 0) throw std::invalid_argument("phb_error_curve: k must be >= 0");
  if (!(h >= 0.0)) throw std::invalid_argument("phb_error_curve: h must be >= 0");
  const PhbHyperparams hp = PhbHyperparams::from(mu, eta, spec);

  Eigen::VectorXd rotated(2 * d);
  rotated.head(d) = p.eigenvectors.transpose() * e0.head(d);
  rotated.tail(d) = p.eigenvectors.transpose() * e0.tail(d);

  // G = E[||A z||^4 w w^T], w = U_A^T z; the h-term at step i is tr(G P_i)
  // with P_i the upper-left block of Phi^i(I).
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d, d);
  if (h > 0.0) {
    if (noise.n_samples < 1) throw std::invalid_argument("phb_error_curve: n_samples must be >= 1");
    RngStream rng = RngStream::derive(noise.seed, 0, stream_tag::monte_carlo);
    Eigen::VectorXd z(d);
    for (long n = 0; n < noise.n_samples; ++n) {
      sample_into(spec, rng, z);
      const double az2 = (p.A * z).squaredNorm();
      const Eigen::VectorXd w = p.eigenvectors.transpose() * z;
      g.noalias() += (az2 * az2) * (w * w.transpose());
    }
    g /= static_cast<double>(noise.n_samples);
  }
  const double noise_scale = 0.25 * eta * eta * h * h;

  PhbPrediction out;
  out.values.reserve(static_cast<std::size_t>(k_max) + 1);
  PhbStateMatrix s = PhbStateMatrix::identity(d);
  double noise_sum = 0.0;
  out.values.push_back(rotated.squaredNorm());
  for (long k = 1; k <= k_max; ++k) {
    if (h > 0.0) noise_sum += (g.cwiseProduct(s.s1)).sum();
    s = phi_map_unchecked(s, hp, p);
    const double v = rotated.dot(s.full() * rotated) + noise_scale * noise_sum;
    out.values.push_back(v);
    if (!std::isfinite(v)) {
      out.divergent = true;
      out.values.resize(static_cast<std::size_t>(k_max) + 1,
                        std::numeric_limits<double>::infinity());
      break;
    }
  }
  return out;
}

PhbPrediction phb_error_prediction(const QuadraticProblem& p, double mu, double eta,
                                   const DistributionSpec& spec, const Eigen::VectorXd& e0, long k,
                                   double h, const PhbNoiseOptions& noise) {
  PhbPrediction curve = phb_error_curve(p, mu, eta, spec, e0, k, h, noise);
  PhbPrediction out;
  out.divergent = curve.divergent;
  out.values = {curve.values.back()};
  return out;
}

// ---------------------------------------------------------------------------

PhbGrid PhbGrid::standard() { return linear_log(-0.99, 0.99, 199, -5.0, -2.0, 301); }

PhbGrid PhbGrid::linear_log(double mu_lo, double mu_hi, int mu_count, double log10_eta_lo,
                            double log10_eta_hi, int eta_count) {
  if (mu_count < 1 || eta_count < 1) throw std::invalid_argument("PhbGrid: empty grid");
  PhbGrid g;
  for (int i = 0; i < mu_count; ++i) {
    g.mu.push_back(mu_count == 1 ? mu_lo : mu_lo + (mu_hi - mu_lo) * i / (mu_count - 1));
  }
  for (int j = 0; j < eta_count; ++j) {
    const double e = eta_count == 1 ? log10_eta_lo
                                    : log10_eta_lo + (log10_eta_hi - log10_eta_lo) * j / (eta_count - 1);
    g.eta.push_back(std::pow(10.0, e));
  }
  return g;
}

namespace {

void check_grid_inputs(const QuadraticProblem& p, const PhbGrid& grid, long k_target) {
  if (grid.size() == 0) throw std::invalid_argument("grid_search: empty grid");
  if (k_target < 0) throw std::invalid_argument("grid_search: k_target must be >= 0");
  if (!has_axis_aligned_spectrum(p)) {
    throw std::domain_error(
        "grid_search: A^T A is not diagonal; the 2x2 block reduction of Phi does not apply "
        "(use a problem with A = U S, e.g. make_phb_quadratic)");
  }
}

GridCell evaluate_cell(const QuadraticProblem& p, const DistributionSpec& spec, double mu,
                       double eta, long k_target) {
  const double lv = log_max_eigenvalue_phi_power(p.eigenvalues, PhbHyperparams::from(mu, eta, spec),
                                                 k_target);
  return {mu, eta, std::exp(lv), lv};
}

GridSearchResult pick_best(const PhbGrid& grid, std::vector<GridCell> cells) {
  GridSearchResult out;
  std::size_t best = 0;
  for (std::size_t i = 1; i < cells.size(); ++i) {
    // NaN never wins; ties keep the first cell in index order.
    if (cells[i].log_max_eigenvalue < cells[best].log_max_eigenvalue) best = i;
  }
  out.mu_star = cells[best].mu;
  out.eta_star = cells[best].eta;
  out.best_value = cells[best].max_eigenvalue;
  out.cells = std::move(cells);
  (void)grid;
  return out;
}

}  // namespace

GridSearchResult grid_search(const QuadraticProblem& p, const DistributionSpec& spec,
                             const PhbGrid& grid, long k_target) {
  check_grid_inputs(p, grid, k_target);
  const long n_eta = static_cast<long>(grid.eta.size());
  const long total = static_cast<long>(grid.size());
  std::vector<GridCell> cells(static_cast<std::size_t>(total));
#pragma omp parallel for schedule(dynamic, 16)
  for (long idx = 0; idx < total; ++idx) {
    cells[idx] = evaluate_cell(p, spec, grid.mu[idx / n_eta], grid.eta[idx % n_eta], k_target);
  }
  return pick_best(grid, std::move(cells));
}

GridSearchResult grid_search_serial(const QuadraticProblem& p, const DistributionSpec& spec,
                                    const PhbGrid& grid, long k_target) {
  check_grid_inputs(p, grid, k_target);
  std::vector<GridCell> cells;
  cells.reserve(grid.size());
  for (double mu : grid.mu) {
    for (double eta : grid.eta) cells.push_back(evaluate_cell(p, spec, mu, eta, k_target));
  }
  return pick_best(grid, std::move(cells));
}

}  // namespace rfg
