#pragma once

// Gradient descent and Polyak heavy ball driven by randomized forward
// gradients, plus the multi-run driver used by the experiments.

#include "rfg/distributions.hpp"
#include "rfg/rfg_estimator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace rfg {

struct GDState {
  Eigen::VectorXd x;
  long k = 0;
};

struct PHBState {
  Eigen::VectorXd x;
  Eigen::VectorXd x_prev;
  long k = 0;
};

struct LRSchedule {
  enum class Kind { constant, staircase_exponential };

  Kind kind = Kind::constant;
  double base = 1e-3;
  double decay_rate = 1.0;
  long decay_step = 1;

  static LRSchedule constant(double eta) { return {Kind::constant, eta, 1.0, 1}; }
  static LRSchedule staircase(double base, double rate, long step) {
    return {Kind::staircase_exponential, base, rate, step};
  }

  /// Learning rate used for the step taken at iteration k (0-based).
  double at(long k) const;
  void validate() const;
  bool operator==(const LRSchedule&) const = default;
};

/// One step x - eta * rfg(f, x, z, h) with a fresh z ~ cfg.distribution.
GDState gd_step(const GDState& state, const Objective& f, const RFGConfig& cfg, double eta,
                RngStream& rng);
/// Same update with the direction supplied by the caller.
GDState gd_step_along(const GDState& state, const Objective& f, double h, double eta,
                      const Eigen::VectorXd& z);

/// x' = x - eta * rfg(f, x, z, h) + mu (x - x_prev); x_prev' = x.
PHBState phb_step(const PHBState& state, const Objective& f, const RFGConfig& cfg, double eta,
                  double mu, RngStream& rng);
PHBState phb_step_along(const PHBState& state, const Objective& f, double h, double eta,
                        double mu, const Eigen::VectorXd& z);

enum class OptimizerKind { gd, phb };

struct RunOptions {
  OptimizerKind kind = OptimizerKind::gd;
  LRSchedule schedule = LRSchedule::constant(1e-3);
  double mu = 0.0;
  Eigen::VectorXd x0;
  /// PHB only; defaults to x0.
  std::optional<Eigen::VectorXd> x_minus1;
  long max_iters = 1;
  /// Stop once ||x - x*|| <= tolerance (needs a known minimizer).
  std::optional<double> tolerance;
  /// Runs whose tracked quantity exceeds this (or turns non-finite) are
  /// stopped and flagged as diverged.
  double divergence_threshold = 1e12;
};

struct IterationRow {
  long k = 0;
  /// ||x^(k) - x*||^2, NaN when the minimizer is unknown.
  double squared_error = 0.0;
  /// ||x^(k) - x*||^2 + ||x^(k-1) - x*||^2 for PHB, NaN otherwise.
  double stacked_error = 0.0;
  double objective = 0.0;
};

struct ExperimentRecord {
  long run_index = 0;
  std::uint64_t seed = 0;
  IterationRow initial;
  /// Post-step rows k = 1, 2, ...; shorter than max_iters only when the run
  /// stopped early (tolerance) or diverged.
  std::vector<IterationRow> rows;
  bool diverged = false;
  Eigen::VectorXd final_x;
};

ExperimentRecord run(const Objective& f, const RFGConfig& cfg, const RunOptions& opts,
                     RngStream& rng);

/// Independent runs on streams derived from (master_seed, run_index).
/// Runs execute in parallel; the result is ordered by run index and does
/// not depend on the thread count.
std::vector<ExperimentRecord> run_many(const Objective& f, const RFGConfig& cfg,
                                       const RunOptions& opts, std::uint64_t master_seed,
                                       int runs);
/// Serial reference for run_many.
std::vector<ExperimentRecord> run_many_serial(const Objective& f, const RFGConfig& cfg,
                                              const RunOptions& opts, std::uint64_t master_seed,
                                              int runs);

/// Per-iteration statistics across runs; diverged runs are excluded from the
/// moments and counted instead.
struct AggregateRow {
  long k = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double standard_error = 0.0;
  int included = 0;
  int diverged = 0;
};

enum class TrackedQuantity { squared_error, stacked_error, objective };

std::vector<AggregateRow> aggregate(const std::vector<ExperimentRecord>& records,
                                    TrackedQuantity quantity);

/// Least-squares slope of log(mean) against k over rows with k_min <= k <= k_max
/// and a positive finite mean. NaN when fewer than two rows qualify.
double log_linear_slope(const std::vector<AggregateRow>& rows, long k_min, long k_max);

}  // namespace rfg
