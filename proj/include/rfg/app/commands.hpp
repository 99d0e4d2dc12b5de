#pragma once

#include "rfg/app/config.hpp"
#include "rfg/optimizers.hpp"
#include "rfg/problems.hpp"
#include "rfg/quadratic_theory.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace rfg::app {

enum ExitCode { kOk = 0, kVerificationFailed = 1, kUsageError = 2 };

/// Variance for one distribution: the configured value or 1/(d + k4 - 1).
DistributionSpec resolve_spec(const ValueOrOptimal& sigma2, Distribution kind, int d);

/// Test-function runs from x0 = (0.5, 0.5). Without an explicit schedule or
/// eta, Rosenbrock uses 0.1 decayed by 0.1 every 25 steps and Ackley a
/// constant 2.4e-3.
std::vector<ExperimentRecord> testfn_runs(const std::string& problem, Distribution kind,
                                          const ExperimentConfig& cfg);
LRSchedule testfn_schedule(const std::string& problem, const ExperimentConfig& cfg);

struct FaTrace {
  std::uint64_t seed = 0;
  std::vector<double> rfg_loss;  // k = 0..iters (shorter if diverged)
  std::vector<double> gd_loss;
  bool rfg_diverged = false;
  bool gd_diverged = false;
  Eigen::VectorXd rfg_theta;
  Eigen::VectorXd gd_theta;
};

/// RFG-GD alone; directions come from derive(seed, 0, run).
ExperimentRecord fa_rfg_run(const FaProblem& fa, const ExperimentConfig& cfg, Distribution kind,
                            std::uint64_t seed);

/// RFG-GD and exact-gradient GD from the same initial parameters.
FaTrace fa_train(const FaProblem& fa, const ExperimentConfig& cfg, Distribution kind,
                 std::uint64_t seed);
FaOptions fa_options(const ExperimentConfig& cfg);

struct PhbChoice {
  double mu = 0.0;
  double eta = 0.0;
  bool from_grid = false;
};

/// Uses the configured pair, or a coarse grid search over whatever is unset.
PhbChoice choose_phb_hyperparameters(const QuadraticProblem& p, const DistributionSpec& spec,
                                     const ExperimentConfig& cfg);

int cmd_verify_moments(const ExperimentConfig& cfg);
int cmd_gd_quadratic(const ExperimentConfig& cfg);
int cmd_phb(const ExperimentConfig& cfg);
int cmd_phb_grid(const ExperimentConfig& cfg);
int cmd_testfn(const ExperimentConfig& cfg);
int cmd_fa(const ExperimentConfig& cfg);
int cmd_bench(const ExperimentConfig& cfg);

int dispatch(const ExperimentConfig& cfg);

/// Full command line entry point.
int cli_main(int argc, char** argv);

}  // namespace rfg::app
