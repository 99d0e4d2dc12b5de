// Pilot runs that fix the thresholds used by the acceptance test. Seeds
// 1..5 here; the acceptance test uses fresh seeds.

#include "rfg/app/commands.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>

using namespace rfg;
using namespace rfg::app;
using nlohmann::json;

namespace {

constexpr int kPilotSeeds = 5;
constexpr double kThresholdFactor = 10.0;
constexpr double kBudgetFactor = 1.5;
constexpr long kFaMaxIters = 150000;

json testfn_threshold(const std::string& problem) {
  ExperimentConfig cfg = defaults_for("testfn");
  cfg.runs = 1;
  json finals = json::array();
  double worst = 0.0;
  bool any_diverged = false;
  for (int s = 1; s <= kPilotSeeds; ++s) {
    cfg.seed = static_cast<std::uint64_t>(s);
    const ExperimentRecord rec = testfn_runs(problem, Distribution::bernoulli, cfg).front();
    if (rec.diverged) {
      any_diverged = true;
      finals.push_back(nullptr);
      continue;
    }
    const double v = rec.rows.back().objective;
    finals.push_back(v);
    worst = std::max(worst, v);
  }
  json out;
  out["pilot_finals"] = finals;
  out["iters"] = cfg.iters;
  out["threshold"] = any_diverged ? json(nullptr) : json(kThresholdFactor * worst);
  std::cerr << problem << ": worst " << worst << (any_diverged ? " (diverged)" : "") << "\n";
  return out;
}

json fa_budget() {
  ExperimentConfig cfg = defaults_for("fa");
  cfg.iters = kFaMaxIters;
  const FaOptions fo = fa_options(cfg);
  json hits = json::array();
  long worst = 0;
  bool missed = false;
  for (int s = 1; s <= kPilotSeeds; ++s) {
    const FaProblem fa = make_fa_problem(fo, static_cast<std::uint64_t>(s));
    const ExperimentRecord rec = fa_rfg_run(fa, cfg, Distribution::bernoulli, s);
    const double target = rec.initial.objective / 10.0;
    const auto it = std::find_if(rec.rows.begin(), rec.rows.end(),
                                 [&](const IterationRow& r) { return r.objective <= target; });
    if (it == rec.rows.end()) {
      missed = true;
      hits.push_back(nullptr);
    } else {
      hits.push_back(it->k);
      worst = std::max(worst, it->k);
    }
    std::cerr << "fa seed " << s << ": hit " << hits.back() << "\n";
  }
  json out;
  out["eta"] = cfg.eta.value;
  out["pilot_hits"] = hits;
  const long budget = static_cast<long>(std::ceil(kBudgetFactor * worst / 1000.0)) * 1000;
  out["budget"] = missed ? json(nullptr) : json(budget);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: rfg_pilot OUT.json\n";
    return 2;
  }
  json j;
  j["pilot_seeds"] = {1, 2, 3, 4, 5};
  j["threshold_factor"] = kThresholdFactor;
  j["budget_factor"] = kBudgetFactor;
  j["rosenbrock"] = testfn_threshold("rosenbrock");
  j["ackley"] = testfn_threshold("ackley");
  j["fa"] = fa_budget();
  std::ofstream out(argv[1]);
  if (!out) {
    std::cerr << "cannot write " << argv[1] << "\n";
    return 1;
  }
  out << j.dump(2) << "\n";
  return 0;
}
