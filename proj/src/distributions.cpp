#include "rfg/distributions.hpp"

#include <cmath>
#include <stdexcept>

namespace rfg {

std::string_view to_string(Distribution kind) {
  switch (kind) {
    case Distribution::bernoulli: return "bernoulli";
    case Distribution::uniform: return "uniform";
    case Distribution::wigner: return "wigner";
    case Distribution::gaussian: return "gaussian";
    case Distribution::laplace: return "laplace";
  }
  return "unknown";
}

Distribution parse_distribution(std::string_view name) {
  for (auto kind : kAllDistributions) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown distribution '" + std::string(name) +
                              "' (expected bernoulli|uniform|wigner|gaussian|laplace)");
}

double DistributionSpec::sigma() const { return std::sqrt(variance); }

double kurtosis(Distribution kind) {
  switch (kind) {
    case Distribution::bernoulli: return 1.0;
    case Distribution::uniform: return 1.8;
    case Distribution::wigner: return 2.0;
    case Distribution::gaussian: return 3.0;
    case Distribution::laplace: return 6.0;
  }
  throw std::invalid_argument("kurtosis: unknown distribution");
}

double sixth_standardized_moment(Distribution kind) {
  switch (kind) {
    case Distribution::bernoulli: return 1.0;
    case Distribution::uniform: return 27.0 / 7.0;
    case Distribution::wigner: return 5.0;
    case Distribution::gaussian: return 15.0;
    case Distribution::laplace: return 90.0;
  }
  throw std::invalid_argument("sixth_standardized_moment: unknown distribution");
}

double optimal_variance(int d, Distribution kind) {
  if (d < 1) throw std::invalid_argument("optimal_variance: d must be >= 1");
  return 1.0 / (static_cast<double>(d) + kurtosis(kind) - 1.0);
}

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) {
  std::uint64_t s = seed;
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s)),
                    static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s)),
                    static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s)),
                    static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s))};
  engine_.seed(seq);
}

RngStream RngStream::derive(std::uint64_t master_seed, std::uint64_t index, std::uint64_t tag) {
  std::uint64_t s = master_seed;
  std::uint64_t h = splitmix64(s);
  s = h ^ index;
  h = splitmix64(s);
  s = h ^ tag;
  return RngStream(splitmix64(s));
}

double RngStream::uniform01() {
  // 53 random mantissa bits in [0, 1).
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() { return normal_(engine_); }

bool RngStream::coin() { return (engine_() >> 63) != 0; }

double standard_draw(Distribution kind, RngStream& rng) {
  switch (kind) {
    case Distribution::bernoulli:
      return rng.coin() ? 1.0 : -1.0;
    case Distribution::uniform:
      // Uniform on [-sqrt(3), sqrt(3)].
      return std::sqrt(3.0) * (2.0 * rng.uniform01() - 1.0);
    case Distribution::wigner: {
      // Semicircle of radius 2 is 2(2B - 1) with B ~ Beta(3/2, 3/2).
      std::gamma_distribution<double> g(1.5, 1.0);
      const double x = g(rng.engine());
      const double y = g(rng.engine());
      return 2.0 * (2.0 * x / (x + y) - 1.0);
    }
    case Distribution::gaussian:
      return rng.normal();
    case Distribution::laplace: {
      // Scale 1/sqrt(2) gives unit variance.
      const double e = -std::log1p(-rng.uniform01());
      return (rng.coin() ? e : -e) / std::sqrt(2.0);
    }
  }
  throw std::invalid_argument("standard_draw: unknown distribution");
}

void sample_into(const DistributionSpec& spec, RngStream& rng, Eigen::Ref<Eigen::VectorXd> out) {
  const double s = spec.sigma();
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = s * standard_draw(spec.kind, rng);
}

Eigen::VectorXd sample_vector(const DistributionSpec& spec, int d, RngStream& rng) {
  if (d < 1) throw std::invalid_argument("sample_vector: d must be >= 1");
  if (!(spec.variance > 0.0)) throw std::invalid_argument("sample_vector: variance must be > 0");
  Eigen::VectorXd z(d);
  sample_into(spec, rng, z);
  return z;
}

}  // namespace rfg
