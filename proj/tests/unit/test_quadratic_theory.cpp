#include "rfg/moment_oracle.hpp"
#include "rfg/problems.hpp"
#include "rfg/quadratic_theory.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

using namespace rfg;

namespace {

QuadraticProblem diag_problem(std::vector<double> lambdas) {
  const int d = static_cast<int>(lambdas.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) A(i, i) = std::sqrt(lambdas[static_cast<std::size_t>(i)]);
  return make_quadratic_problem(A, Eigen::VectorXd::Ones(d));
}

Eigen::MatrixXd random_psd(int n, RngStream& rng) {
  Eigen::MatrixXd L(n, n);
  for (auto& v : L.reshaped()) v = rng.normal();
  return L * L.transpose() / n;
}

}  // namespace

TEST_CASE("exact gradient") {
  const QuadraticProblem p = make_gd_quadratic(4, 3);
  CHECK(exact_gradient(p, p.x_star).norm() <= 1e-10);
  const QuadraticProblem id =
      make_quadratic_problem(Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3));
  const Eigen::Vector3d x(1, -2, 3);
  CHECK(exact_gradient(id, x) == x);

  const Objective f = quadratic_objective(p);
  const Eigen::Vector4d y(0.3, -1, 2, 0.5);
  const Eigen::VectorXd g = exact_gradient(p, y);
  for (int i = 0; i < 4; ++i) {
    const double probe = f.jvp(y, Eigen::VectorXd::Unit(4, i)).directional_derivative;
    CHECK(std::abs(probe - g[i]) <= 1e-10 * (1 + std::abs(g[i])));
  }
}

TEST_CASE("singular A is rejected") {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
  A(0, 0) = 1;
  CHECK_THROWS_AS(make_quadratic_problem(A, Eigen::VectorXd::Ones(2)), std::domain_error);
}

TEST_CASE("rfg decomposition") {
  const QuadraticProblem id =
      make_quadratic_problem(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2));
  const RfgDecomposition r = rfg_decomposition(id, Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 1), 0.1);
  CHECK(r.exact_part.isApprox(Eigen::Vector2d(1, 1)));
  CHECK(r.bias_part.isApprox(Eigen::Vector2d(0.1, 0.1)));
  const RfgDecomposition r0 = rfg_decomposition(id, Eigen::Vector2d(1, 0), Eigen::Vector2d(1, 1), 0.0);
  CHECK(r0.bias_part.isZero());
}

TEST_CASE("variance factor") {
  CHECK(f_variance_factor(2, 3, 15, Eigen::MatrixXd::Identity(2, 2)) == doctest::Approx(48));
  for (Distribution k : kAllDistributions) {
    const int d = 4;
    const double k4 = kurtosis(k), k6 = sixth_standardized_moment(k);
    const double alpha = k6 + (d - 1) * k4, beta = d - 2 + 2 * k4;
    CHECK(f_variance_factor(d, k4, k6, Eigen::MatrixXd::Identity(d, d)) ==
          doctest::Approx(d * alpha + d * (d - 1) * beta));
  }
}

TEST_CASE("estimator moments at the minimizer vanish") {
  const QuadraticProblem p = make_gd_quadratic(3, 1);
  const RfgMoments m = rfg_moments(p, p.x_star, {Distribution::gaussian, 1.0}, 0.0);
  CHECK(m.mean.norm() <= 1e-10);
  CHECK(m.variance <= 1e-18);
}

TEST_CASE("learning rate and rate arithmetic") {
  const QuadraticProblem p = diag_problem({1, 100, 30, 7, 50});
  CHECK(optimal_gd_lr(p, {Distribution::bernoulli, 1.0}) == doctest::Approx(2.0 / 505));
  CHECK(optimal_gd_lr(p, {Distribution::bernoulli, 2.0}) == doctest::Approx(1.0 / 505));
  CHECK(optimal_gd_lr(diag_problem({1}), {Distribution::bernoulli, 1.0}) == doctest::Approx(1.0));
  CHECK(gd_rate(5, 1, 100) == doctest::Approx(0.9921576).epsilon(1e-7));
  CHECK(gd_rate(1, 1, 1) == doctest::Approx(0.0));
  const GdRateBound b = gd_rate_and_bound(p, {Distribution::bernoulli, 1.0}, 0.0, 100, 2.5);
  CHECK(b.bound == doctest::Approx(std::pow(b.r_rate, 100) * 2.5));
  for (int d = 1; d < 20; ++d) {
    for (double k4 = 1; k4 < 8; k4 += 0.5) {
      CHECK(gd_rate(d, k4 + 0.5, 50) > gd_rate(d, k4, 50));
      CHECK(gd_rate(d + 1, k4, 50) > gd_rate(d, k4, 50));
    }
  }
}

TEST_CASE("psi block arithmetic") {
  const PsiTriple t{1, 0, 1};
  const std::vector<PsiTriple> st{t, t};
  const PhbHyperparams hp{0.5, 0.1, 1.0, 1.0};
  const auto blocks = psi_blocks(st, hp, Eigen::Vector2d(1, 1));
  CHECK(blocks[0].h1 == doctest::Approx(2.97));
  CHECK(blocks[0].h2 == doctest::Approx(-0.7));
  CHECK(blocks[0].h3 == doctest::Approx(0.25));
  CHECK(psi_max_eigenvalue(blocks[0]) == doctest::Approx(3.1396).epsilon(1e-4));
  CHECK(psi_max_eigenvalue({2.0, 0.0, 5.0}) == 5.0);
  const auto b0 = psi_blocks(st, PhbHyperparams{0.0, 0.1, 1.0, 1.0}, Eigen::Vector2d(1, 3));
  for (const auto& b : b0) {
    CHECK(b.h2 == 0.0);
    CHECK(b.h3 == 0.0);
  }
  RngStream rng(5);
  for (int i = 0; i < 50; ++i) {
    const PsiBlock b{rng.normal(), rng.normal(), rng.normal()};
    Eigen::Matrix2d m;
    m << b.h1, b.h2, b.h2, b.h3;
    const double dense = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(m).eigenvalues()[1];
    CHECK(std::abs(psi_max_eigenvalue(b) - dense) <= 1e-12 * (1 + std::abs(dense)));
  }
}

TEST_CASE("phi map: zero, linearity, PSD preservation") {
  RngStream rng(21);
  const QuadraticProblem p = make_gd_quadratic(3, 6);
  const PhbHyperparams hp{0.4, 0.01, 0.7, 3.0};
  const PhbStateMatrix z = phi_map(PhbStateMatrix::zero(3), hp, p);
  CHECK(z.full().isZero());
  const PhbStateMatrix S = PhbStateMatrix::from_full(random_psd(6, rng));
  const PhbStateMatrix T = PhbStateMatrix::from_full(random_psd(6, rng));
  const PhbStateMatrix lhs = phi_map(PhbStateMatrix::from_full(2.0 * S.full() + 0.5 * T.full()), hp, p);
  const Eigen::MatrixXd rhs = 2.0 * phi_map(S, hp, p).full() + 0.5 * phi_map(T, hp, p).full();
  CHECK((lhs.full() - rhs).cwiseAbs().maxCoeff() <= 1e-10 * (1 + rhs.cwiseAbs().maxCoeff()));
  const Eigen::MatrixXd img = phi_map(S, hp, p).full();
  CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(img).eigenvalues().minCoeff() >= -1e-8);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(6, 6);
  bad(0, 0) = -1;
  CHECK_THROWS_AS(phi_map(PhbStateMatrix::from_full(bad), hp, p), std::domain_error);
}

TEST_CASE("h4 uses row norms of any factor") {
  RngStream rng(4);
  const QuadraticProblem p = make_gd_quadratic(5, 2);
  Eigen::MatrixXd L(5, 3);
  for (auto& v : L.reshaped()) v = rng.normal();
  const Eigen::MatrixXd s1 = L * L.transpose();
  const Eigen::MatrixXd h = h4_term(s1, p.eigenvectors.transpose(), 3.0);
  const Eigen::MatrixXd UL = p.eigenvectors.transpose() * L;
  for (int j = 0; j < 5; ++j) {
    const double expect = s1.trace() + 2.0 * UL.row(j).squaredNorm();
    CHECK(std::abs(h(j, j) - expect) <= 1e-12 * expect);
  }
}

TEST_CASE("phi with mu = 0 is the gd second-moment map") {
  RngStream rng(2);
  const QuadraticProblem p = make_gd_quadratic(4, 8);
  const double eta = 1e-3, s2 = 0.8, k4 = 1.8;
  const Eigen::MatrixXd s1 = random_psd(4, rng);
  PhbStateMatrix S = PhbStateMatrix::zero(4);
  S.s1 = p.eigenvectors.transpose() * s1 * p.eigenvectors;
  const PhbStateMatrix img = phi_map(S, {0.0, eta, s2, k4}, p);
  CHECK(img.s2.isZero());
  CHECK(img.s3.isZero());
  const Eigen::MatrixXd gd = p.eigenvectors.transpose() *
                             gd_second_moment_map(s1, p, eta, s2, k4) * p.eigenvectors;
  CHECK((img.s1 - gd).cwiseAbs().maxCoeff() <= 1e-10 * gd.cwiseAbs().maxCoeff());
}

TEST_CASE("power iteration with mu = 0 matches the gd map") {
  const QuadraticProblem p = make_phb_quadratic(4, 3);
  const double eta = 2e-3;
  const DistributionSpec spec{Distribution::bernoulli, 1.0};
  const long k = 300;
  const double lg = log_max_eigenvalue_phi_power(p.eigenvalues, PhbHyperparams::from(0.0, eta, spec), k);
  // The first step also folds the S3 = I block into S1.
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(4, 4);
  double log_scale = 0.0;
  for (long i = 0; i < k; ++i) {
    s = gd_second_moment_map(s, p, eta, 1.0, 1.0);
    if (i == 0) s += Eigen::MatrixXd::Identity(4, 4);
    const double m = s.cwiseAbs().maxCoeff();
    s /= m;
    log_scale += std::log(m);
  }
  const double ref = log_scale + std::log(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s).eigenvalues().maxCoeff());
  CHECK(std::abs(lg - ref) <= 1e-8 * std::max(1.0, std::abs(ref)));
}

TEST_CASE("prediction at k = 0 is the initial error") {
  const QuadraticProblem p = make_phb_quadratic(3, 1);
  Eigen::VectorXd e0(6);
  e0 << -p.x_star, -p.x_star;
  const PhbPrediction pr =
      phb_error_prediction(p, 0.5, 1e-3, {Distribution::bernoulli, 1.0}, e0, 0, 0.0);
  CHECK(pr.values.back() == doctest::Approx(e0.squaredNorm()));
}

TEST_CASE("grid construction and search") {
  const PhbGrid g = PhbGrid::standard();
  CHECK(g.mu.size() == 199);
  CHECK(g.eta.size() == 301);
  CHECK(g.size() == 59899);
  CHECK(g.mu.front() == doctest::Approx(-0.99));
  CHECK(g.eta.back() == doctest::Approx(1e-2));

  const QuadraticProblem p = make_phb_quadratic(5, 2);
  const DistributionSpec spec{Distribution::bernoulli, 1.0};
  const PhbGrid one{{0.3}, {1e-3}};
  const GridSearchResult r1 = grid_search(p, spec, one, 100);
  CHECK(r1.mu_star == 0.3);
  CHECK(r1.eta_star == 1e-3);

  const PhbGrid small = PhbGrid::linear_log(-0.9, 0.9, 19, -4, -2, 21);
  const GridSearchResult a = grid_search(p, spec, small, 500);
  const GridSearchResult b = grid_search_serial(p, spec, small, 500);
  CHECK(a.mu_star == b.mu_star);
  CHECK(a.eta_star == b.eta_star);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i)
    CHECK(a.cells[i].log_max_eigenvalue == b.cells[i].log_max_eigenvalue);
}

TEST_CASE("grid search needs an axis-aligned spectrum") {
  const QuadraticProblem p = make_gd_quadratic(4, 2);
  CHECK_FALSE(has_axis_aligned_spectrum(p));
  const PhbGrid one{{0.3}, {1e-3}};
  CHECK_THROWS_AS(grid_search(p, {Distribution::gaussian, 1.0}, one, 10), std::domain_error);
  CHECK_THROWS_AS(grid_search(p, {Distribution::bernoulli, 1.0}, one, 10), std::domain_error);
}
