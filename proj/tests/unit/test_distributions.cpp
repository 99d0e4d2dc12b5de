#include "rfg/distributions.hpp"
#include "rfg/moment_oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace rfg;

TEST_CASE("kurtosis table") {
  CHECK(kurtosis(Distribution::bernoulli) == 1.0);
  CHECK(kurtosis(Distribution::uniform) == doctest::Approx(1.8));
  CHECK(kurtosis(Distribution::wigner) == 2.0);
  CHECK(kurtosis(Distribution::gaussian) == 3.0);
  CHECK(kurtosis(Distribution::laplace) == 6.0);
  CHECK(sixth_standardized_moment(Distribution::bernoulli) == 1.0);
  CHECK(sixth_standardized_moment(Distribution::uniform) == doctest::Approx(27.0 / 7.0));
  CHECK(sixth_standardized_moment(Distribution::wigner) == 5.0);
  CHECK(sixth_standardized_moment(Distribution::gaussian) == 15.0);
  CHECK(sixth_standardized_moment(Distribution::laplace) == 90.0);
}

TEST_CASE("names parse and print") {
  for (Distribution k : kAllDistributions) CHECK(parse_distribution(to_string(k)) == k);
  CHECK_THROWS_AS(parse_distribution("cauchy"), std::invalid_argument);
}

TEST_CASE("optimal variance") {
  CHECK(optimal_variance(10, Distribution::bernoulli) == doctest::Approx(0.1));
  CHECK(optimal_variance(1, Distribution::bernoulli) == 1.0);
  CHECK(optimal_variance(5, Distribution::gaussian) == doctest::Approx(1.0 / 7.0));
  CHECK_THROWS(optimal_variance(0, Distribution::gaussian));
}

TEST_CASE("bernoulli support and determinism") {
  RngStream a(42), b(42);
  const Eigen::VectorXd za = sample_vector({Distribution::bernoulli, 1.0}, 50, a);
  const Eigen::VectorXd zb = sample_vector({Distribution::bernoulli, 1.0}, 50, b);
  CHECK(za == zb);
  for (double v : za) CHECK(std::abs(v) == 1.0);
}

TEST_CASE("standardized draws have unit variance and the tabulated kurtosis") {
  const long n = 1000000;
  for (Distribution k : kAllDistributions) {
    const SampleFn fn = [k](RngStream& rng, Eigen::Ref<Eigen::VectorXd> out) {
      const double z = standard_draw(k, rng);
      out[0] = z * z;
      out[1] = z * z * z * z;
    };
    const McEstimate e = monte_carlo(fn, 2, n, 99, static_cast<std::uint64_t>(k));
    CAPTURE(to_string(k));
    CHECK(within_band(e.mean[0], 1.0, e.standard_error[0]));
    CHECK(within_band(e.mean[1], kurtosis(k), e.standard_error[1]));
  }
}

TEST_CASE("derived streams differ by index and tag") {
  RngStream a = RngStream::derive(1, 0, stream_tag::run);
  RngStream b = RngStream::derive(1, 1, stream_tag::run);
  RngStream c = RngStream::derive(1, 0, stream_tag::init);
  const double x = a.uniform01(), y = b.uniform01(), z = c.uniform01();
  CHECK(x != y);
  CHECK(x != z);
}
