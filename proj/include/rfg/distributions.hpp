#pragma once

// Coordinate sampling laws for random directions. Every law is symmetric
// about zero, so odd moments vanish; each is parametrized by its variance.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace rfg {

enum class Distribution { bernoulli, uniform, wigner, gaussian, laplace };

inline constexpr std::array<Distribution, 5> kAllDistributions = {
    Distribution::bernoulli, Distribution::uniform, Distribution::wigner,
    Distribution::gaussian, Distribution::laplace};

std::string_view to_string(Distribution kind);
/// Throws std::invalid_argument on an unknown name.
Distribution parse_distribution(std::string_view name);

struct DistributionSpec {
  Distribution kind = Distribution::bernoulli;
  double variance = 1.0;

  double sigma() const;
  bool operator==(const DistributionSpec&) const = default;
};

/// Fourth standardized moment.
double kurtosis(Distribution kind);
/// Sixth standardized moment. Laplace is 6!/2^3 = 90.
double sixth_standardized_moment(Distribution kind);

/// 1 / (d + kurtosis - 1): the variance minimizing the relative squared
/// error of the exact-derivative estimator.
double optimal_variance(int d, Distribution kind);

/// Seeded stream. Independent streams are derived from
/// (master_seed, index, tag) without any shared state.
class RngStream {
 public:
  using Engine = std::mt19937_64;

  explicit RngStream(std::uint64_t seed);
  static RngStream derive(std::uint64_t master_seed, std::uint64_t index,
                          std::uint64_t tag = 0);

  Engine& engine() { return engine_; }
  double uniform01();
  double normal();
  bool coin();

 private:
  Engine engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Stream tags so that runs, problem generation and Monte-Carlo never share
/// a stream even under the same master seed.
namespace stream_tag {
inline constexpr std::uint64_t run = 0x52554e;
inline constexpr std::uint64_t problem = 0x50524f42;
inline constexpr std::uint64_t monte_carlo = 0x4d43;
inline constexpr std::uint64_t init = 0x494e4954;
}  // namespace stream_tag

/// One zero-mean, unit-variance draw.
double standard_draw(Distribution kind, RngStream& rng);

/// d i.i.d. draws scaled to spec.variance. A draw at variance s^2 equals s
/// times the unit-variance draw from the same stream state.
Eigen::VectorXd sample_vector(const DistributionSpec& spec, int d, RngStream& rng);
void sample_into(const DistributionSpec& spec, RngStream& rng, Eigen::Ref<Eigen::VectorXd> out);

}  // namespace rfg
