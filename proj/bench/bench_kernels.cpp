// Wall time of the OpenMP kernels against their serial references. Each
// pair must produce identical results; a mismatch is reported and fails.

#include "rfg/moment_oracle.hpp"
#include "rfg/optimizers.hpp"
#include "rfg/problems.hpp"
#include "rfg/quadratic_theory.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>

namespace {

double seconds(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool report(const char* name, double par, double ser, bool same) {
  std::printf("%-28s %10.4f %10.4f %8.2fx  %s\n", name, ser, par, ser / par,
              same ? "identical" : "MISMATCH");
  return same;
}

}  // namespace

int main() {
  using namespace rfg;
  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-28s %10s %10s %9s\n", "kernel", "serial s", "openmp s", "speedup");
  bool ok = true;

  {
    const QuadraticProblem p = make_phb_quadratic(30, 7);
    const DistributionSpec spec{Distribution::bernoulli, 1.0};
    const PhbGrid grid = PhbGrid::linear_log(-0.99, 0.99, 67, -5.0, -2.0, 101);
    GridSearchResult a, b;
    const double tp = seconds([&] { a = grid_search(p, spec, grid, 2000); });
    const double ts = seconds([&] { b = grid_search_serial(p, spec, grid, 2000); });
    bool same = a.mu_star == b.mu_star && a.eta_star == b.eta_star;
    for (std::size_t i = 0; same && i < a.cells.size(); ++i)
      same = a.cells[i].log_max_eigenvalue == b.cells[i].log_max_eigenvalue;
    ok &= report("grid_search 67x101 k=2000", tp, ts, same);
  }
  {
    const DistributionSpec spec{Distribution::laplace, 1.0};
    const Eigen::MatrixXd A = Eigen::MatrixXd::Random(5, 5);
    SampleFn fn = [&](RngStream& rng, Eigen::Ref<Eigen::VectorXd> o) {
      const Eigen::VectorXd z = sample_vector(spec, 5, rng);
      const double n2 = (A * z).squaredNorm();
      o[0] = n2 * n2 * z.squaredNorm();
    };
    McEstimate a, b;
    const double tp = seconds([&] { a = monte_carlo(fn, 1, 2000000, 3); });
    const double ts = seconds([&] { b = monte_carlo_serial(fn, 1, 2000000, 3); });
    ok &= report("monte_carlo n=2e6", tp, ts,
                 a.mean == b.mean && a.standard_error == b.standard_error);
  }
  {
    const QuadraticProblem p = make_gd_quadratic(10, 1);
    const Objective f = quadratic_objective(p);
    const DistributionSpec spec{Distribution::bernoulli, 1.0};
    RunOptions opts;
    opts.x0 = Eigen::VectorXd::Zero(10);
    opts.max_iters = 2000;
    opts.schedule = LRSchedule::constant(optimal_gd_lr(p, spec));
    std::vector<ExperimentRecord> a, b;
    const RFGConfig cfg{1e-6, spec};
    const double tp = seconds([&] { a = run_many(f, cfg, opts, 5, 64); });
    const double ts = seconds([&] { b = run_many_serial(f, cfg, opts, 5, 64); });
    bool same = a.size() == b.size();
    for (std::size_t r = 0; same && r < a.size(); ++r) same = a[r].final_x == b[r].final_x;
    ok &= report("run_many 64 x 2000 (d=10)", tp, ts, same);
  }
  return ok ? 0 : 1;
}
