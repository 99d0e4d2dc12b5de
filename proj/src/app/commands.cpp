#include "rfg/app/commands.hpp"

#include "rfg/csv.hpp"
#include "rfg/moment_oracle.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <stdexcept>

namespace rfg::app {

namespace {

// CSV goes to --out when given (text report to stdout), otherwise CSV takes
// stdout and the text report moves to stderr.
struct Sink {
  std::ofstream file;
  std::ostream* csv = &std::cout;
  std::ostream* text = &std::cerr;

  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file = open_output(path);
      csv = &file;
      text = &std::cout;
    }
  }
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::uint64_t distribution_seed(std::uint64_t seed, Distribution kind) {
  return seed * 16 + static_cast<std::uint64_t>(kind);
}

void export_quadratic(const QuadraticProblem& p, const std::string& path) {
  if (path.empty()) return;
  std::ofstream out = open_output(path);
  Eigen::MatrixXd ab(p.A.rows(), p.A.cols() + 1);
  ab << p.A, p.b;
  write_matrix_csv(out, ab, "rfg.quadratic-Ab/v1");
}

}  // namespace

DistributionSpec resolve_spec(const ValueOrOptimal& sigma2, Distribution kind, int d) {
  if (sigma2.optimal) return {kind, optimal_variance(d, kind)};
  if (!(sigma2.value > 0.0)) throw std::invalid_argument("sigma2 must be > 0");
  return {kind, sigma2.value};
}

// ---------------------------------------------------------------------------

int cmd_verify_moments(const ExperimentConfig& cfg) {
  Sink sink(cfg.out);
  if (cfg.samples < 10000) {
    *sink.text << "warning: n = " << cfg.samples
               << " is below 1e4; 3-SE bands are too wide to be meaningful\n";
  }
  VerificationOptions opts;
  opts.n_samples = cfg.samples;
  opts.heavy_tail_samples = 10 * cfg.samples;
  opts.kinds = cfg.distributions;
  opts.seed = cfg.seed;
  const auto reports = run_verification_suite(opts);

  CsvWriter csv(*sink.csv, "rfg.verify-moments/v1",
                {"identity", "analytic", "estimate", "standard_error", "n_samples", "is_bound",
                 "pass", "detail"});
  int failures = 0;
  std::ostream& t = *sink.text;
  char line[256];
  std::snprintf(line, sizeof line, "%-40s %14s %14s %11s %9s %s\n", "identity", "analytic",
                "estimate", "se", "n", "result");
  t << line;
  for (const auto& r : reports) {
    csv.row(r.identity, r.analytic, r.estimate, r.standard_error, r.n_samples, int(r.is_bound),
            int(r.pass), r.detail);
    std::snprintf(line, sizeof line, "%-40s %14.6g %14.6g %11.3g %9ld %s%s%s\n",
                  r.identity.c_str(), r.analytic, r.estimate, r.standard_error, r.n_samples,
                  r.pass ? "pass" : "FAIL", r.is_bound ? " (bound)" : "",
                  r.detail.empty() ? "" : (" " + r.detail).c_str());
    t << line;
    if (!r.pass) ++failures;
  }
  t << reports.size() - failures << "/" << reports.size() << " checks passed\n";
  return failures == 0 ? kOk : kVerificationFailed;
}

// ---------------------------------------------------------------------------

int cmd_gd_quadratic(const ExperimentConfig& cfg) {
  const QuadraticProblem p = make_gd_quadratic(cfg.d, cfg.seed);
  export_quadratic(p, cfg.export_matrix);
  const Objective f = quadratic_objective(p);
  Sink sink(cfg.out);
  CsvWriter csv(*sink.csv, "rfg.gd-quadratic/v1",
                {"distribution", "sigma2", "eta", "k", "mean", "stddev", "standard_error",
                 "included", "diverged", "bound", "rate_prediction"});
  std::ostream& t = *sink.text;
  t << "d=" << cfg.d << " cond(A^T A)=" << fmt("%.6g", p.kappa_A) << " h=" << cfg.h << "\n";

  RunOptions opts;
  opts.kind = OptimizerKind::gd;
  opts.x0 = Eigen::VectorXd::Zero(cfg.d);
  opts.max_iters = cfg.iters;
  const double e0sq = (opts.x0 - p.x_star).squaredNorm();

  for (Distribution kind : cfg.distributions) {
    const DistributionSpec spec = resolve_spec(cfg.sigma2, kind, cfg.d);
    const double eta = cfg.eta.optimal ? optimal_gd_lr(p, spec) : cfg.eta.value;
    opts.schedule = cfg.schedule.value_or(LRSchedule::constant(eta));
    const auto records =
        run_many(f, RFGConfig{cfg.h, spec}, opts, distribution_seed(cfg.seed, kind), cfg.runs);
    const auto rows = aggregate(records, TrackedQuantity::squared_error);
    const double r = gd_rate(cfg.d, kurtosis(kind), p.kappa_A);
    for (const auto& row : rows) {
      const GdRateBound b = gd_rate_and_bound(p, spec, cfg.h, row.k, e0sq);
      csv.row(std::string(to_string(kind)), spec.variance, eta, row.k, row.mean, row.stddev,
              row.standard_error, row.included, row.diverged, b.bound,
              std::pow(r, static_cast<double>(row.k)) * e0sq);
    }
    const double slope = log_linear_slope(rows, 0, cfg.iters);
    t << to_string(kind) << ": sigma2=" << fmt("%.6g", spec.variance) << " eta=" << fmt("%.6g", eta)
      << " rate=" << fmt("%.8f", r) << " fitted=" << fmt("%.8f", std::exp(slope))
      << " final mean=" << fmt("%.6g", rows.back().mean) << " diverged=" << rows.back().diverged
      << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------

PhbChoice choose_phb_hyperparameters(const QuadraticProblem& p, const DistributionSpec& spec,
                                     const ExperimentConfig& cfg) {
  PhbChoice c;
  if (cfg.mu && !cfg.eta.optimal) {
    c.mu = *cfg.mu;
    c.eta = cfg.eta.value;
    return c;
  }
  PhbGrid grid = PhbGrid::linear_log(-0.95, 0.95, 39, -5.0, -2.0, 61);
  if (cfg.mu) grid.mu = {*cfg.mu};
  if (!cfg.eta.optimal) grid.eta = {cfg.eta.value};
  const GridSearchResult best = grid_search(p, spec, grid, cfg.k_target);
  c.mu = best.mu_star;
  c.eta = best.eta_star;
  c.from_grid = true;
  return c;
}

int cmd_phb(const ExperimentConfig& cfg) {
  const QuadraticProblem p = make_phb_quadratic(cfg.d, cfg.seed);
  export_quadratic(p, cfg.export_matrix);
  const Objective f = quadratic_objective(p);
  Sink sink(cfg.out);
  CsvWriter csv(*sink.csv, "rfg.phb/v1",
                {"distribution", "mu", "eta", "k", "mean", "stddev", "standard_error", "included",
                 "diverged", "prediction"});
  std::ostream& t = *sink.text;

  RunOptions opts;
  opts.kind = OptimizerKind::phb;
  opts.x0 = Eigen::VectorXd::Zero(cfg.d);
  opts.max_iters = cfg.iters;
  Eigen::VectorXd e0(2 * cfg.d);
  e0 << opts.x0 - p.x_star, opts.x0 - p.x_star;

  for (Distribution kind : cfg.distributions) {
    const DistributionSpec spec = resolve_spec(cfg.sigma2, kind, cfg.d);
    const PhbChoice hp = choose_phb_hyperparameters(p, spec, cfg);
    opts.mu = hp.mu;
    opts.schedule = cfg.schedule.value_or(LRSchedule::constant(hp.eta));
    const auto records =
        run_many(f, RFGConfig{cfg.h, spec}, opts, distribution_seed(cfg.seed, kind), cfg.runs);
    const auto rows = aggregate(records, TrackedQuantity::stacked_error);
    const PhbPrediction pred = phb_error_curve(p, hp.mu, hp.eta, spec, e0, cfg.iters, cfg.h,
                                               PhbNoiseOptions{cfg.samples, cfg.seed});
    for (const auto& row : rows) {
      csv.row(std::string(to_string(kind)), hp.mu, hp.eta, row.k, row.mean, row.stddev,
              row.standard_error, row.included, row.diverged,
              pred.values[static_cast<std::size_t>(row.k)]);
    }
    t << to_string(kind) << ": mu=" << fmt("%.6g", hp.mu) << " eta=" << fmt("%.6g", hp.eta)
      << (hp.from_grid ? " (grid)" : "") << "\n";
    for (long k : {10L, 50L, 100L}) {
      if (k >= static_cast<long>(rows.size())) continue;
      const auto& row = rows[static_cast<std::size_t>(k)];
      const double pv = pred.values[static_cast<std::size_t>(k)];
      t << "  k=" << k << " mean=" << fmt("%.6g", row.mean) << " se=" << fmt("%.3g", row.standard_error)
        << " predicted=" << fmt("%.6g", pv) << " |z|=" << fmt("%.2f", std::abs(row.mean - pv) / row.standard_error)
        << "\n";
    }
  }
  return kOk;
}

int cmd_phb_grid(const ExperimentConfig& cfg) {
  QuadraticProblem p;
  if (cfg.problem == "phb" || cfg.problem.empty()) {
    p = make_phb_quadratic(cfg.d, cfg.seed);
  } else if (cfg.problem == "gd") {
    p = make_gd_quadratic(cfg.d, cfg.seed);
  } else {
    throw std::invalid_argument("phb-grid: unknown problem '" + cfg.problem + "' (expected phb|gd)");
  }
  export_quadratic(p, cfg.export_matrix);
  if (cfg.distributions.size() != 1) throw std::invalid_argument("phb-grid takes one distribution");
  const DistributionSpec spec = resolve_spec(cfg.sigma2, cfg.distributions.front(), cfg.d);
  const GridSearchResult res = grid_search(p, spec, PhbGrid::standard(), cfg.k_target);
  Sink sink(cfg.out);
  CsvWriter csv(*sink.csv, "rfg.phb-grid/v1", {"mu", "eta", "max_eigenvalue", "log_max_eigenvalue"});
  for (const auto& c : res.cells) csv.row(c.mu, c.eta, c.max_eigenvalue, c.log_max_eigenvalue);
  *sink.text << "cells=" << res.cells.size() << " k=" << cfg.k_target
             << " mu*=" << fmt("%.4g", res.mu_star) << " eta*=" << fmt("%.6g", res.eta_star)
             << " max eigenvalue=" << fmt("%.6g", res.best_value) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

LRSchedule testfn_schedule(const std::string& problem, const ExperimentConfig& cfg) {
  if (cfg.schedule) return *cfg.schedule;
  if (!cfg.eta.optimal) return LRSchedule::constant(cfg.eta.value);
  if (problem == "rosenbrock") return LRSchedule::staircase(0.1, 0.1, 25);
  return LRSchedule::constant(2.4e-3);
}

namespace {

Objective testfn_objective(const std::string& problem) {
  if (problem == "rosenbrock") return rosenbrock_objective();
  if (problem == "ackley") return ackley_objective(false);
  if (problem == "ackley-printed") return ackley_objective(true);
  throw std::invalid_argument("unknown test function '" + problem +
                              "' (expected rosenbrock|ackley|ackley-printed|all)");
}

}  // namespace

std::vector<ExperimentRecord> testfn_runs(const std::string& problem, Distribution kind,
                                          const ExperimentConfig& cfg) {
  const Objective f = testfn_objective(problem);
  RunOptions opts;
  opts.kind = cfg.optimizer;
  opts.mu = cfg.mu.value_or(0.0);
  opts.schedule = testfn_schedule(problem, cfg);
  opts.x0 = Eigen::Vector2d(0.5, 0.5);
  opts.max_iters = cfg.iters;
  const DistributionSpec spec = resolve_spec(cfg.sigma2, kind, 2);
  return run_many(f, RFGConfig{cfg.h, spec}, opts, distribution_seed(cfg.seed, kind), cfg.runs);
}

int cmd_testfn(const ExperimentConfig& cfg) {
  std::vector<std::string> problems;
  if (cfg.problem == "all" || cfg.problem.empty()) {
    problems = {"rosenbrock", "ackley"};
  } else {
    problems = {cfg.problem};
  }
  for (const auto& name : problems) testfn_objective(name);

  Sink sink(cfg.out);
  CsvWriter csv(*sink.csv, "rfg.testfn/v1",
                {"problem", "distribution", "k", "mean_objective", "stddev", "standard_error",
                 "included", "diverged"});
  std::ostream& t = *sink.text;
  for (const auto& name : problems) {
    for (Distribution kind : cfg.distributions) {
      const auto records = testfn_runs(name, kind, cfg);
      const auto rows = aggregate(records, TrackedQuantity::objective);
      for (const auto& row : rows) {
        csv.row(name, std::string(to_string(kind)), row.k, row.mean, row.stddev,
                row.standard_error, row.included, row.diverged);
      }
      t << name << " " << to_string(kind) << ": final";
      for (const auto& rec : records) {
        t << " " << (rec.diverged ? std::string("diverged")
                                  : fmt("%.4g", rec.rows.empty() ? rec.initial.objective
                                                                 : rec.rows.back().objective));
      }
      t << "\n";
    }
  }
  return kOk;
}

// ---------------------------------------------------------------------------

FaOptions fa_options(const ExperimentConfig& cfg) {
  FaOptions o;
  o.samples = static_cast<int>(cfg.samples);
  o.width = cfg.width;
  o.depth = cfg.depth;
  return o;
}

namespace {

LRSchedule fa_schedule(const ExperimentConfig& cfg) {
  return cfg.schedule.value_or(LRSchedule::constant(cfg.eta.optimal ? 2.0 : cfg.eta.value));
}

}  // namespace

ExperimentRecord fa_rfg_run(const FaProblem& fa, const ExperimentConfig& cfg, Distribution kind,
                            std::uint64_t seed) {
  const Objective& f = fa.objective;
  RunOptions opts;
  opts.kind = OptimizerKind::gd;
  opts.schedule = fa_schedule(cfg);
  opts.x0 = fa.initial.flatten();
  opts.max_iters = cfg.iters;
  RngStream rng = RngStream::derive(seed, 0, stream_tag::run);
  return run(f, RFGConfig{cfg.h, resolve_spec(cfg.sigma2, kind, f.dimension)}, opts, rng);
}

FaTrace fa_train(const FaProblem& fa, const ExperimentConfig& cfg, Distribution kind,
                 std::uint64_t seed) {
  const Objective& f = fa.objective;
  FaTrace tr;
  tr.seed = seed;
  const ExperimentRecord rec = fa_rfg_run(fa, cfg, kind, seed);
  tr.rfg_loss.push_back(rec.initial.objective);
  for (const auto& row : rec.rows) tr.rfg_loss.push_back(row.objective);
  tr.rfg_diverged = rec.diverged;
  tr.rfg_theta = rec.final_x;

  const double divergence_threshold = RunOptions{}.divergence_threshold;
  Eigen::VectorXd theta = fa.initial.flatten();
  tr.gd_loss.push_back(f.evaluate(theta));
  for (long k = 0; k < cfg.iters; ++k) {
    Eigen::VectorXd next = theta - cfg.baseline_eta * f.gradient(theta);
    const double loss = f.evaluate(next);
    if (!std::isfinite(loss) || loss > divergence_threshold) {
      tr.gd_diverged = true;
      break;
    }
    theta = std::move(next);
    tr.gd_loss.push_back(loss);
  }
  tr.gd_theta = theta;
  return tr;
}

int cmd_fa(const ExperimentConfig& cfg) {
  const FaOptions fo = fa_options(cfg);
  Sink sink(cfg.out);
  std::vector<FaTrace> traces;
  std::vector<FaProblem> problems;
  for (int r = 0; r < cfg.runs; ++r) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(r);
    problems.push_back(make_fa_problem(fo, seed));
    traces.push_back(fa_train(problems.back(), cfg, cfg.distributions.front(), seed));
  }
  {
    CsvWriter csv(*sink.csv, "rfg.fa/v1", {"method", "seed", "k", "loss"});
    for (const auto& tr : traces) {
      for (std::size_t k = 0; k < tr.rfg_loss.size(); ++k) csv.row("rfg", tr.seed, k, tr.rfg_loss[k]);
      for (std::size_t k = 0; k < tr.gd_loss.size(); ++k) csv.row("gd", tr.seed, k, tr.gd_loss[k]);
    }
  }
  {
    CsvWriter csv(*sink.csv, "rfg.fa-predictions/v1", {"seed", "x", "target", "rfg", "gd"});
    Eigen::MatrixXd grid(1, 201);
    for (int i = 0; i < 201; ++i) grid(0, i) = fo.lo + (fo.hi - fo.lo) * i / 200.0;
    for (std::size_t r = 0; r < traces.size(); ++r) {
      const MlpParameters& shape = problems[r].initial;
      const Eigen::MatrixXd u_rfg = mlp_forward(shape.unflatten(traces[r].rfg_theta), grid);
      const Eigen::MatrixXd u_gd = mlp_forward(shape.unflatten(traces[r].gd_theta), grid);
      for (int i = 0; i < 201; ++i)
        csv.row(traces[r].seed, grid(0, i), fa_target(grid(0, i)), u_rfg(0, i), u_gd(0, i));
    }
  }
  for (const auto& tr : traces) {
    *sink.text << "seed " << tr.seed << ": initial " << fmt("%.6g", tr.rfg_loss.front())
               << " rfg " << (tr.rfg_diverged ? "diverged" : fmt("%.6g", tr.rfg_loss.back()))
               << " gd " << (tr.gd_diverged ? "diverged" : fmt("%.6g", tr.gd_loss.back())) << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_bench(const ExperimentConfig& cfg) {
  using clock = std::chrono::steady_clock;
  Sink sink(cfg.out);
  CsvWriter csv(*sink.csv, "rfg.bench/v1",
                {"N", "L", "baseline_iters_per_sec", "rfg_iters_per_sec", "delta_pct"});
  std::ostream& t = *sink.text;
  char line[160];
  std::snprintf(line, sizeof line, "%6s %4s %14s %14s %9s\n", "N", "L", "baseline", "RFG", "Δ%");
  t << line;
  const double eta = cfg.eta.optimal ? 1e-3 : cfg.eta.value;
  for (auto [n, l] : cfg.bench_sizes) {
    FaOptions fo = fa_options(cfg);
    fo.width = n;
    fo.depth = l;
    const FaProblem fa = make_fa_problem(fo, cfg.seed);
    const Objective& f = fa.objective;
    const DistributionSpec spec = resolve_spec(cfg.sigma2, cfg.distributions.front(), f.dimension);
    const auto time_loop = [&](auto&& step) {
      Eigen::VectorXd theta = fa.initial.flatten();
      step(theta);  // warm-up
      const auto t0 = clock::now();
      for (long k = 0; k < cfg.iters; ++k) step(theta);
      const double secs = std::chrono::duration<double>(clock::now() - t0).count();
      return static_cast<double>(cfg.iters) / secs;
    };
    const double base = time_loop([&](Eigen::VectorXd& th) { th -= eta * f.gradient(th); });
    RngStream rng = RngStream::derive(cfg.seed, 0, stream_tag::run);
    const double fwd = time_loop([&](Eigen::VectorXd& th) {
      const Eigen::VectorXd z = sample_vector(spec, f.dimension, rng);
      th -= eta * rfg(f, th, z, cfg.h);
    });
    const double delta = 100.0 * (fwd - base) / base;
    csv.row(n, l, base, fwd, delta);
    std::snprintf(line, sizeof line, "%6d %4d %14.2f %14.2f %+8.1f%%\n", n, l, base, fwd, delta);
    t << line;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int dispatch(const ExperimentConfig& cfg) {
  if (cfg.d < 1 || cfg.runs < 1 || cfg.iters < 1 || cfg.samples < 1 || cfg.k_target < 0 ||
      cfg.width < 1 || cfg.depth < 1) {
    throw std::invalid_argument("d, runs, iters, samples, width and depth must be positive");
  }
  if (!(cfg.h >= 0.0)) throw std::invalid_argument("h must be >= 0");
  if (cfg.distributions.empty()) throw std::invalid_argument("no distribution selected");
  const std::string& s = cfg.subcommand;
  if (s == "verify-moments") return cmd_verify_moments(cfg);
  if (s == "gd-quadratic") return cmd_gd_quadratic(cfg);
  if (s == "phb") return cmd_phb(cfg);
  if (s == "phb-grid") return cmd_phb_grid(cfg);
  if (s == "testfn") return cmd_testfn(cfg);
  if (s == "fa") return cmd_fa(cfg);
  if (s == "bench") return cmd_bench(cfg);
  throw std::invalid_argument("unknown subcommand '" + s + "'");
}

namespace {

struct Flags {
  std::optional<std::string> dist, sigma2, eta, out, config, problem, export_matrix, optimizer;
  std::optional<double> h, mu, baseline_eta;
  std::optional<int> d, runs, width, depth;
  std::optional<long> iters, samples, k_target;
  std::optional<std::uint64_t> seed;
  bool print_config = false;
};

void add_flags(CLI::App* sub, Flags& f) {
  // --h is the forward-difference step, so help is long-form only.
  sub->set_help_flag("--help", "Print this help message and exit");
  sub->add_option("--dist", f.dist, "Distribution(s): bernoulli|uniform|wigner|gaussian|laplace, comma list or all");
  sub->add_option("--sigma2", f.sigma2, "Coordinate variance, or 'optimal' for 1/(d + k4 - 1)");
  sub->add_option("--h", f.h, "Forward-difference step; 0 uses the exact directional derivative");
  sub->add_option("--eta", f.eta, "Learning rate, or 'optimal'");
  sub->add_option("--mu", f.mu, "Heavy-ball momentum");
  sub->add_option("--baseline-eta", f.baseline_eta, "Learning rate of the backprop GD baseline (fa)");
  sub->add_option("--d", f.d, "Problem dimension");
  sub->add_option("--runs", f.runs, "Independent runs (or seeds for fa)");
  sub->add_option("--iters", f.iters, "Iterations per run");
  sub->add_option("--seed", f.seed, "Master seed");
  sub->add_option("--out", f.out, "CSV output path (default: stdout)");
  sub->add_option("--config", f.config, "JSON config file; flags override it");
  sub->add_option("--samples", f.samples, "Monte-Carlo samples, or data points for fa/bench");
  sub->add_option("--k-target", f.k_target, "Power of the second-moment map used by grid search");
  sub->add_option("--width", f.width, "Network width (fa, bench)");
  sub->add_option("--depth", f.depth, "Number of affine layers (fa, bench)");
  sub->add_option("--problem", f.problem, "testfn: rosenbrock|ackley|ackley-printed|all; phb-grid: phb|gd");
  sub->add_option("--optimizer", f.optimizer, "gd|phb (testfn)");
  sub->add_option("--export-matrix", f.export_matrix, "Write the generated [A | b] to this CSV");
  sub->add_flag("--print-config", f.print_config, "Print the resolved config as JSON and exit");
}

ExperimentConfig resolve(const std::string& name, const Flags& f) {
  ExperimentConfig c = defaults_for(name);
  if (f.config) c = load_config(*f.config, c);
  c.subcommand = name;
  if (f.dist) c.distributions = parse_distribution_list(*f.dist);
  if (f.sigma2) c.sigma2 = ValueOrOptimal::parse(*f.sigma2);
  if (f.h) c.h = *f.h;
  if (f.eta) c.eta = ValueOrOptimal::parse(*f.eta);
  if (f.mu) c.mu = *f.mu;
  if (f.baseline_eta) c.baseline_eta = *f.baseline_eta;
  if (f.d) c.d = *f.d;
  if (f.runs) c.runs = *f.runs;
  if (f.iters) c.iters = *f.iters;
  if (f.seed) c.seed = *f.seed;
  if (f.out) c.out = *f.out;
  if (f.samples) c.samples = *f.samples;
  if (f.k_target) c.k_target = *f.k_target;
  if (f.width) c.width = *f.width;
  if (f.depth) c.depth = *f.depth;
  if (f.width || f.depth) c.bench_sizes = {{c.width, c.depth}};
  if (f.problem) c.problem = *f.problem;
  if (f.export_matrix) c.export_matrix = *f.export_matrix;
  if (f.optimizer) {
    if (*f.optimizer == "gd") c.optimizer = OptimizerKind::gd;
    else if (*f.optimizer == "phb") c.optimizer = OptimizerKind::phb;
    else throw std::invalid_argument("unknown optimizer '" + *f.optimizer + "'");
  }
  return c;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Randomized forward-gradient experiments"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  std::vector<std::unique_ptr<Flags>> flags;
  std::vector<CLI::App*> subs;
  const char* help[] = {
      "Monte-Carlo check of every closed-form moment",
      "RFG gradient descent on a conditioned quadratic",
      "RFG heavy ball with the predicted error curve",
      "(mu, eta) value map of the heavy-ball second-moment map",
      "Rosenbrock and Ackley runs",
      "Function approximation: RFG-GD against backprop GD",
      "Iterations per second: RFG against backprop"};
  for (std::size_t i = 0; i < std::size(kSubcommands); ++i) {
    flags.push_back(std::make_unique<Flags>());
    subs.push_back(app.add_subcommand(std::string(kSubcommands[i]), help[i]));
    add_flags(subs.back(), *flags.back());
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  std::size_t which = 0;
  while (which < subs.size() && !subs[which]->parsed()) ++which;
  ExperimentConfig cfg;
  try {
    cfg = resolve(std::string(kSubcommands[which]), *flags[which]);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  }
  if (flags[which]->print_config) {
    std::cout << to_json(cfg) << "\n";
    return kOk;
  }
  try {
    return dispatch(cfg);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kVerificationFailed;
  }
}

}  // namespace rfg::app
