#pragma once

// Experiment configuration shared by the CLI and config files. Values are
// layered: subcommand defaults, then a JSON config file, then flags.

#include "rfg/distributions.hpp"
#include "rfg/optimizers.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rfg::app {

/// A real value or the keyword "optimal".
struct ValueOrOptimal {
  bool optimal = false;
  double value = 0.0;

  static ValueOrOptimal parse(std::string_view text);
  static ValueOrOptimal of(double v) { return {false, v}; }
  static ValueOrOptimal best() { return {true, 0.0}; }
  std::string to_string() const;
  bool operator==(const ValueOrOptimal&) const = default;
};

struct ExperimentConfig {
  std::string subcommand;
  /// testfn: rosenbrock | ackley | ackley-printed | all. phb-grid: phb | gd.
  std::string problem;
  std::vector<Distribution> distributions;
  ValueOrOptimal sigma2 = ValueOrOptimal::of(1.0);
  double h = 1e-6;
  OptimizerKind optimizer = OptimizerKind::gd;
  /// Learning rate; "optimal" is the closed-form rate for gd-quadratic and
  /// the grid-search choice for phb.
  ValueOrOptimal eta = ValueOrOptimal::best();
  /// fa: learning rate of the exact-gradient GD baseline.
  double baseline_eta = 0.05;
  /// Unset: chosen by grid search (phb) or 0.
  std::optional<double> mu;
  /// Unset: the subcommand's schedule (constant eta, or the test-function
  /// schedules).
  std::optional<LRSchedule> schedule;
  int d = 5;
  int runs = 100;
  long iters = 2000;
  std::uint64_t seed = 1;
  /// Empty: standard output.
  std::string out;
  /// Monte-Carlo samples (verify-moments, phb noise term) or FA data points.
  long samples = 1000000;
  long k_target = 10000;
  int width = 40;
  int depth = 2;
  /// bench: (width, depth) pairs.
  std::vector<std::pair<int, int>> bench_sizes;
  /// Optional path for an audit copy of the generated quadratic [A | b].
  std::string export_matrix;

  bool operator==(const ExperimentConfig&) const = default;
};

inline constexpr std::string_view kSubcommands[] = {
    "verify-moments", "gd-quadratic", "phb", "phb-grid", "testfn", "fa", "bench"};

/// Throws std::invalid_argument for an unknown subcommand.
ExperimentConfig defaults_for(std::string_view subcommand);

std::string to_json(const ExperimentConfig& c);
/// Keys absent from the document keep the values already in `base`.
/// Throws std::invalid_argument on malformed input.
ExperimentConfig from_json(std::string_view text, ExperimentConfig base);
ExperimentConfig load_config(const std::string& path, ExperimentConfig base);

/// "all" or a comma-separated list of names.
std::vector<Distribution> parse_distribution_list(std::string_view text);

}  // namespace rfg::app
