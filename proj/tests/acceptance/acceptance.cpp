// One pass/fail line per acceptance criterion. With no arguments every
// criterion runs; otherwise only the listed numbers.

#include "rfg/app/commands.hpp"
#include "rfg/moment_oracle.hpp"
#include "rfg/problems.hpp"
#include "rfg/quadratic_theory.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#ifndef RFG_PILOT_THRESHOLDS
#define RFG_PILOT_THRESHOLDS "tests/data/pilot_thresholds.json"
#endif

using namespace rfg;
using namespace rfg::app;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

const std::vector<std::uint64_t> kFreshSeeds{101, 102, 103, 104, 105};

nlohmann::json load_pilot() {
  std::ifstream in(RFG_PILOT_THRESHOLDS);
  if (!in) throw std::runtime_error("cannot read " + std::string(RFG_PILOT_THRESHOLDS));
  return nlohmann::json::parse(in);
}

// ---------------------------------------------------------------------------

// Random polynomial p(x) = sum_t c_t prod_j x_j^e_tj, composed as
// q(p) = p^3 - 2p + sin(p).
struct Poly {
  std::vector<double> c;
  std::vector<std::vector<int>> e;

  template <class T>
  T eval(std::span<const T> x) const {
    T s = 0.0;
    for (std::size_t t = 0; t < c.size(); ++t) {
      T term = c[t];
      for (std::size_t j = 0; j < x.size(); ++j)
        for (int r = 0; r < e[t][j]; ++r) term = term * x[j];
      s += term;
    }
    return s;
  }
  double directional(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const {
    double d = 0.0;
    for (std::size_t t = 0; t < c.size(); ++t) {
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        const int ej = e[t][static_cast<std::size_t>(j)];
        if (ej == 0) continue;
        double term = c[t] * ej * std::pow(x[j], ej - 1);
        for (Eigen::Index m = 0; m < x.size(); ++m)
          if (m != j) term *= std::pow(x[m], e[t][static_cast<std::size_t>(m)]);
        d += term * v[j];
      }
    }
    return d;
  }
};

Outcome criterion1() {
  const auto scaled = [](std::span<const Dual> x) {
    Dual s = 0.0;
    for (const Dual& xi : x) s += (2.0 * xi) * (2.0 * xi);
    return 0.5 * s;
  };
  const TangentEvaluation t = jvp(scaled, Eigen::Vector3d(0, 4, 6), Eigen::Vector3d(1, 1, 1));
  bool ok = std::abs(t.value - 104) <= 1e-12 * 104 && std::abs(t.directional_derivative - 40) <= 1e-12 * 40;
  RngStream rng(1);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + static_cast<int>(rng.uniform01() * 5);
    Poly p;
    const int terms = 1 + static_cast<int>(rng.uniform01() * 6);
    for (int k = 0; k < terms; ++k) {
      p.c.push_back(rng.normal());
      std::vector<int> ex(static_cast<std::size_t>(d));
      for (int& v : ex) v = static_cast<int>(rng.uniform01() * 4);
      p.e.push_back(ex);
    }
    Eigen::VectorXd x(d), v(d);
    for (int i = 0; i < d; ++i) {
      x[i] = rng.uniform01() * 2 - 1;
      v[i] = rng.normal();
    }
    const auto q = [&p](std::span<const Dual> xs) {
      const Dual y = p.eval(xs);
      return pow(y, 3) - 2.0 * y + sin(y);
    };
    const double y = p.eval(std::span<const double>(x.data(), static_cast<std::size_t>(d)));
    const double expected = (3 * y * y - 2 + std::cos(y)) * p.directional(x, v);
    const double got = jvp(q, x, v).directional_derivative;
    const double rel = std::abs(got - expected) / std::max(std::abs(expected), 1e-300);
    if (std::abs(expected) > 1e-8) worst = std::max(worst, rel);
  }
  ok = ok && worst <= 1e-12;
  return {ok, "instance (" + fmt("%.17g", t.value) + ", " + fmt("%.17g", t.directional_derivative) +
                  "), worst polynomial rel err " + fmt("%.2e", worst)};
}

Outcome criterion2() {
  const auto reports = run_verification_suite(VerificationOptions{});
  int failed = 0;
  std::string first_fail;
  bool spot1 = false, spot3 = false;
  for (const auto& r : reports) {
    if (!r.pass) {
      ++failed;
      if (first_fail.empty()) first_fail = " first failure: " + r.identity;
    }
    if (r.identity.rfind("spot moment1", 0) == 0) spot1 = r.pass && std::abs(r.analytic - 5) < 1e-12;
    if (r.identity.rfind("spot moment3", 0) == 0) spot3 = r.pass && std::abs(r.analytic - 48) < 1e-12;
  }
  return {failed == 0 && spot1 && spot3,
          std::to_string(reports.size() - failed) + "/" + std::to_string(reports.size()) +
              " checks, spot values " + (spot1 && spot3 ? "ok" : "missing") + first_fail};
}

Outcome criterion3() {
  const int d = 10;
  const QuadraticProblem p = make_gd_quadratic(d, 31);
  const Objective f = quadratic_objective(p);
  const DistributionSpec spec{Distribution::bernoulli, optimal_variance(d, Distribution::bernoulli)};
  const MomentCheckReport r = check_relative_error(f, Eigen::VectorXd::Zero(d), spec, 1000000, 32);
  return {r.pass && std::abs(r.analytic - 0.9) < 1e-12,
          "analytic " + fmt("%.6f", r.analytic) + " estimate " + fmt("%.6f", r.estimate) + " se " +
              fmt("%.2e", r.standard_error)};
}

struct GdSetup {
  QuadraticProblem p = make_gd_quadratic(5, 1);
  Objective f = quadratic_objective(p);
  RunOptions opts;
  double h = 1e-6;
  GdSetup() {
    opts.x0 = Eigen::VectorXd::Zero(5);
    opts.max_iters = 2000;
  }
  std::vector<AggregateRow> rows(Distribution kind) {
    const DistributionSpec spec{kind, 1.0};
    opts.schedule = LRSchedule::constant(optimal_gd_lr(p, spec));
    const auto recs = run_many(f, RFGConfig{h, spec}, opts, 16 + static_cast<std::uint64_t>(kind), 100);
    return aggregate(recs, TrackedQuantity::squared_error);
  }
};

Outcome criterion4() {
  GdSetup s;
  const auto rows = s.rows(Distribution::bernoulli);
  const DistributionSpec spec{Distribution::bernoulli, 1.0};
  const double r = gd_rate(5, 1.0, s.p.kappa_A);
  const double slope = log_linear_slope(rows, 0, 2000);
  const double rel = std::abs(slope - std::log(r)) / std::abs(std::log(r));
  const double e0 = (s.opts.x0 - s.p.x_star).squaredNorm();
  long violations = 0;
  for (const auto& row : rows) {
    const double bound = gd_rate_and_bound(s.p, spec, s.h, row.k, e0).bound;
    // Same 1e-9 relative roundoff floor as the Monte-Carlo bands (k = 0 has SE ~ 0).
    if (row.mean > bound + 2 * row.standard_error + 1e-9 * (1 + std::abs(bound))) ++violations;
  }
  return {rel <= 0.05 && violations == 0 && rows.back().diverged == 0,
          "cond " + fmt("%.4g", s.p.kappa_A) + " eta " + fmt("%.6g", optimal_gd_lr(s.p, spec)) +
              " fitted rate " + fmt("%.8f", std::exp(slope)) + " predicted " + fmt("%.8f", r) +
              " slope rel err " + fmt("%.2e", rel) + ", bound violations " + std::to_string(violations)};
}

Outcome criterion5() {
  GdSetup s;
  std::vector<std::vector<AggregateRow>> all;
  for (Distribution k : kAllDistributions) all.push_back(s.rows(k));
  bool ok = true;
  std::string detail;
  for (long k : {500L, 1000L, 2000L}) {
    const auto at = [&](std::size_t i) { return all[i][static_cast<std::size_t>(k)].mean; };
    std::size_t best = 0;
    for (std::size_t i = 1; i < all.size(); ++i)
      if (!(at(i) >= at(best))) best = i;
    ok = ok && best == 0;
    detail += "k=" + std::to_string(k) + " min " + std::string(to_string(kAllDistributions[best])) + " ";
  }
  return {ok, detail};
}

Outcome criterion6() {
  RngStream rng(6);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + trial % 8;
    const QuadraticProblem p = make_phb_quadratic(std::max(d, 2), 600 + static_cast<std::uint64_t>(trial));
    const int n = p.dim();
    const PhbHyperparams hp{rng.uniform01() * 1.8 - 0.9, std::pow(10.0, -4 + 2 * rng.uniform01()),
                            0.5 + rng.uniform01(), 1.0};
    std::vector<PsiTriple> st(static_cast<std::size_t>(n));
    PhbStateMatrix S = PhbStateMatrix::zero(n);
    for (int i = 0; i < n; ++i) {
      // Each 2x2 mode block [s1 s2; s2 s3] is PSD.
      const double a = rng.normal(), b = rng.normal(), c = rng.normal();
      PsiTriple& t = st[static_cast<std::size_t>(i)];
      t = {a * a, a * b, b * b + c * c};
      S.s1(i, i) = t.s1;
      S.s2(i, i) = t.s2;
      S.s3(i, i) = t.s3;
    }
    std::vector<double> pooled;
    for (const PsiBlock& b : psi_blocks(st, hp, p)) {
      Eigen::Matrix2d m;
      m << b.h1, b.h2, b.h2, b.h3;
      const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(m).eigenvalues();
      pooled.push_back(ev[0]);
      pooled.push_back(ev[1]);
    }
    std::sort(pooled.begin(), pooled.end());
    const Eigen::VectorXd dense =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(phi_map(S, hp, p).full()).eigenvalues();
    for (std::size_t i = 0; i < pooled.size(); ++i) {
      const double err = std::abs(pooled[i] - dense[static_cast<Eigen::Index>(i)]) /
                         std::max(1.0, std::abs(dense[static_cast<Eigen::Index>(i)]));
      worst = std::max(worst, err);
    }
  }
  return {worst <= 1e-10, "worst eigenvalue mismatch " + fmt("%.2e", worst)};
}

Outcome criterion7() {
  ExperimentConfig cfg = defaults_for("phb");
  cfg.h = 0.0;
  const QuadraticProblem p = make_phb_quadratic(3, cfg.seed);
  const Objective f = quadratic_objective(p);
  const DistributionSpec spec{Distribution::bernoulli, 1.0};
  const PhbChoice hp = choose_phb_hyperparameters(p, spec, cfg);
  RunOptions o;
  o.kind = OptimizerKind::phb;
  o.mu = hp.mu;
  o.schedule = LRSchedule::constant(hp.eta);
  o.x0 = Eigen::VectorXd::Zero(3);
  o.max_iters = 100;
  const auto rows = aggregate(run_many(f, RFGConfig{0.0, spec}, o, 70, 1000), TrackedQuantity::stacked_error);
  Eigen::VectorXd e0(6);
  e0 << -p.x_star, -p.x_star;
  const PhbPrediction pred = phb_error_curve(p, hp.mu, hp.eta, spec, e0, 100, 0.0);
  bool ok = !pred.divergent;
  std::string detail = "mu " + fmt("%.3g", hp.mu) + " eta " + fmt("%.4g", hp.eta);
  for (long k : {10L, 50L, 100L}) {
    const auto& row = rows[static_cast<std::size_t>(k)];
    const double pv = pred.values[static_cast<std::size_t>(k)];
    ok = ok && within_band(row.mean, pv, row.standard_error);
    detail += ", k=" + std::to_string(k) + " |z| " + fmt("%.2f", std::abs(row.mean - pv) / row.standard_error);
  }
  return {ok, detail};
}

Outcome criterion8() {
  const QuadraticProblem p = make_gd_quadratic(3, 80);
  RngStream rng(81);
  bool ok = true;
  std::string detail;
  for (Distribution kind : {Distribution::bernoulli, Distribution::gaussian}) {
    Eigen::MatrixXd L(6, 6);
    for (auto& v : L.reshaped()) v = rng.normal();
    const PhbStateMatrix S = PhbStateMatrix::from_full(L * L.transpose());
    const MomentCheckReport r = check_phi_map(p, S, 0.6, 5e-3, {kind, 1.0}, 100000, 82);
    ok = ok && r.pass;
    detail += std::string(to_string(kind)) + " " + (r.pass ? "ok" : "FAIL") + " (" + r.detail + ") ";
  }
  return {ok, detail};
}

Outcome criterion9() {
  RngStream rng(9);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + trial % 7;
    Eigen::MatrixXd A(d, d);
    Eigen::VectorXd b(d), x(d), z(d);
    for (auto& v : A.reshaped()) v = rng.normal();
    A += 2.0 * Eigen::MatrixXd::Identity(d, d);
    for (int i = 0; i < d; ++i) {
      b[i] = rng.normal();
      x[i] = rng.normal();
      z[i] = rng.normal();
    }
    const double h = std::pow(10.0, -2 + 2 * rng.uniform01());
    const QuadraticProblem p = make_quadratic_problem(A, b);
    const Eigen::VectorXd direct = rfg::rfg(quadratic_objective(p), x, z, h);
    const Eigen::VectorXd sum = rfg_decomposition(p, x, z, h).sum();
    worst = std::max(worst, (direct - sum).norm() / std::max(direct.norm(), 1e-300));
  }
  return {worst <= 1e-9, "worst relative difference " + fmt("%.2e", worst)};
}

Outcome criterion10() {
  const nlohmann::json pilot = load_pilot();
  bool ok = true;
  std::string detail;
  for (const std::string name : {"rosenbrock", "ackley"}) {
    const auto& th = pilot.at(name).at("threshold");
    ExperimentConfig cfg = defaults_for("testfn");
    cfg.runs = 1;
    double worst = 0.0;
    int diverged = 0;
    for (std::uint64_t s : kFreshSeeds) {
      cfg.seed = s;
      const ExperimentRecord rec = testfn_runs(name, Distribution::bernoulli, cfg).front();
      if (rec.diverged) {
        ++diverged;
        continue;
      }
      worst = std::max(worst, rec.rows.back().objective);
    }
    if (th.is_null()) {
      ok = false;
      detail += name + ": no pilot threshold (pilot runs diverged), fresh diverged " +
                std::to_string(diverged) + "/5; ";
      continue;
    }
    const bool pass = diverged == 0 && worst < th.get<double>();
    ok = ok && pass;
    detail += name + ": worst final " + fmt("%.4g", worst) + " threshold " +
              fmt("%.4g", th.get<double>()) + (pass ? " ok; " : " FAIL; ");
  }
  return {ok, detail};
}

Outcome criterion11() {
  const nlohmann::json pilot = load_pilot();
  const ExperimentConfig base = defaults_for("fa");
  const FaOptions fo = fa_options(base);
  double jvp_err = 0.0, fd_err = 0.0;
  for (std::uint64_t s : kFreshSeeds) {
    const FaProblem fa = make_fa_problem(fo, s);
    const Eigen::VectorXd th = fa.initial.flatten();
    const Eigen::VectorXd g = fa.objective.gradient(th);
    RngStream rng(s);
    for (int probe = 0; probe < 10; ++probe) {
      Eigen::VectorXd v(th.size());
      for (auto& vi : v) vi = rng.normal();
      const double jv = fa.objective.jvp(th, v).directional_derivative;
      jvp_err = std::max(jvp_err, std::abs(jv - g.dot(v)) / std::max(1.0, std::abs(jv)));
    }
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < th.size(); ++i) {
      Eigen::VectorXd tp = th, tm = th;
      tp[i] += h;
      tm[i] -= h;
      const double fd = (fa.objective.evaluate(tp) - fa.objective.evaluate(tm)) / (2 * h);
      fd_err = std::max(fd_err, std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])));
    }
  }
  std::string detail = "jvp err " + fmt("%.2e", jvp_err) + " fd err " + fmt("%.2e", fd_err);
  bool ok = jvp_err <= 1e-8 && fd_err <= 1e-5;
  const auto& budget_json = pilot.at("fa").at("budget");
  if (budget_json.is_null()) return {false, detail + ", no pilot budget"};
  ExperimentConfig cfg = base;
  cfg.iters = budget_json.get<long>();
  detail += ", budget " + std::to_string(cfg.iters) + ", hits";
  for (std::uint64_t s : kFreshSeeds) {
    const FaProblem fa = make_fa_problem(fo, s);
    const ExperimentRecord rec = fa_rfg_run(fa, cfg, Distribution::bernoulli, s);
    const double target = rec.initial.objective / 10.0;
    const auto it = std::find_if(rec.rows.begin(), rec.rows.end(),
                                 [&](const IterationRow& r) { return r.objective <= target; });
    if (it == rec.rows.end()) {
      ok = false;
      detail += " none";
    } else {
      detail += " " + std::to_string(it->k);
    }
  }
  return {ok, detail};
}

Outcome criterion12() {
  const auto out = std::filesystem::temp_directory_path() / "rfg_acceptance_bench.csv";
  ExperimentConfig cfg = defaults_for("bench");
  cfg.out = out.string();
  const int code = dispatch(cfg);
  std::ifstream in(out);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  std::filesystem::remove(out);
  const bool shape = lines.size() == 4 &&
                     lines[1] == "N,L,baseline_iters_per_sec,rfg_iters_per_sec,delta_pct" &&
                     lines[2].rfind("100,4,", 0) == 0 && lines[3].rfind("200,4,", 0) == 0;
  return {code == 0 && shape, "exit " + std::to_string(code) + (shape ? ", table shape ok" : ", bad table")};
}

const std::vector<std::pair<const char*, std::function<Outcome()>>> kCriteria{
    {"forward-mode jvp exactness", criterion1},
    {"direction moment suite", criterion2},
    {"optimal-variance relative error", criterion3},
    {"gd rate and bound on the d=5 quadratic", criterion4},
    {"bernoulli has the lowest mean error", criterion5},
    {"psi blocks match the dense phi spectrum", criterion6},
    {"heavy-ball error prediction", criterion7},
    {"phi map against sampling", criterion8},
    {"quadratic forward-difference decomposition", criterion9},
    {"test functions under pilot thresholds", criterion10},
    {"function approximation gradients and budget", criterion11},
    {"bench table", criterion12},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty())
    for (int i = 1; i <= static_cast<int>(kCriteria.size()); ++i) which.push_back(i);
  int failures = 0;
  for (int n : which) {
    if (n < 1 || n > static_cast<int>(kCriteria.size())) {
      std::cerr << "no criterion " << n << "\n";
      return 2;
    }
    const auto& [name, fn] = kCriteria[static_cast<std::size_t>(n - 1)];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d %s  %s: %s [%.1fs]\n", n, o.pass ? "PASS" : "FAIL", name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
