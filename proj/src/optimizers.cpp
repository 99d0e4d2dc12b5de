#include "rfg/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>

namespace rfg {

double LRSchedule::at(long k) const {
  if (kind == Kind::constant) return base;
  return base * std::pow(decay_rate, static_cast<double>(k / decay_step));
}

void LRSchedule::validate() const {
  if (!(base >= 0.0)) throw std::invalid_argument("LRSchedule: base must be >= 0");
  if (kind == Kind::staircase_exponential) {
    if (!(decay_rate > 0.0 && decay_rate <= 1.0)) {
      throw std::invalid_argument("LRSchedule: decay_rate must lie in (0, 1]");
    }
    if (decay_step < 1) throw std::invalid_argument("LRSchedule: decay_step must be >= 1");
  }
}

GDState gd_step_along(const GDState& state, const Objective& f, double h, double eta,
                      const Eigen::VectorXd& z) {
  return {state.x - eta * rfg(f, state.x, z, h), state.k + 1};
}

GDState gd_step(const GDState& state, const Objective& f, const RFGConfig& cfg, double eta,
                RngStream& rng) {
  const Eigen::VectorXd z = sample_vector(cfg.distribution, static_cast<int>(state.x.size()), rng);
  return gd_step_along(state, f, cfg.h, eta, z);
}

PHBState phb_step_along(const PHBState& state, const Objective& f, double h, double eta,
                        double mu, const Eigen::VectorXd& z) {
  if (state.x.size() != state.x_prev.size()) {
    throw std::invalid_argument("phb_step: x and x_prev differ in dimension");
  }
  Eigen::VectorXd next = state.x - eta * rfg(f, state.x, z, h) + mu * (state.x - state.x_prev);
  return {std::move(next), state.x, state.k + 1};
}

PHBState phb_step(const PHBState& state, const Objective& f, const RFGConfig& cfg, double eta,
                  double mu, RngStream& rng) {
  const Eigen::VectorXd z = sample_vector(cfg.distribution, static_cast<int>(state.x.size()), rng);
  return phb_step_along(state, f, cfg.h, eta, mu, z);
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

IterationRow make_row(const Objective& f, long k, const Eigen::VectorXd& x,
                      const Eigen::VectorXd* x_prev) {
  IterationRow row{k, kNaN, kNaN, f.evaluate(x)};
  if (f.minimizer) {
    row.squared_error = (x - *f.minimizer).squaredNorm();
    if (x_prev) row.stacked_error = row.squared_error + (*x_prev - *f.minimizer).squaredNorm();
  }
  return row;
}

double tracked(const Objective& f, const IterationRow& row) {
  return f.minimizer ? row.squared_error : row.objective;
}

}  // namespace

ExperimentRecord run(const Objective& f, const RFGConfig& cfg, const RunOptions& opts,
                     RngStream& rng) {
  if (opts.max_iters < 1) throw std::invalid_argument("run: max_iters must be >= 1");
  if (opts.x0.size() != f.dimension) throw std::invalid_argument("run: x0 dimension mismatch");
  if (opts.tolerance && !f.minimizer) {
    throw std::invalid_argument("run: tolerance stop needs a known minimizer");
  }
  opts.schedule.validate();

  ExperimentRecord rec;
  PHBState state{opts.x0, opts.x_minus1.value_or(opts.x0), 0};
  if (state.x_prev.size() != state.x.size()) {
    throw std::invalid_argument("run: x_minus1 dimension mismatch");
  }
  const bool phb = opts.kind == OptimizerKind::phb;
  rec.initial = make_row(f, 0, state.x, phb ? &state.x_prev : nullptr);
  rec.rows.reserve(static_cast<std::size_t>(opts.max_iters));

  for (long k = 0; k < opts.max_iters; ++k) {
    const double eta = opts.schedule.at(k);
    PHBState next;
    if (phb) {
      next = phb_step(state, f, cfg, eta, opts.mu, rng);
    } else {
      GDState g = gd_step(GDState{state.x, state.k}, f, cfg, eta, rng);
      next = PHBState{std::move(g.x), state.x, g.k};
    }
    if (!next.x.allFinite()) {
      rec.diverged = true;
      break;
    }
    IterationRow row = make_row(f, next.k, next.x, phb ? &next.x_prev : nullptr);
    const double q = tracked(f, row);
    if (!std::isfinite(q) || q > opts.divergence_threshold) {
      rec.diverged = true;
      break;
    }
    state = std::move(next);
    rec.rows.push_back(row);
    if (opts.tolerance && std::sqrt(row.squared_error) <= *opts.tolerance) break;
  }
  rec.final_x = state.x;
  return rec;
}

std::vector<ExperimentRecord> run_many(const Objective& f, const RFGConfig& cfg,
                                       const RunOptions& opts, std::uint64_t master_seed,
                                       int runs) {
  if (runs < 1) throw std::invalid_argument("run_many: runs must be >= 1");
  std::vector<ExperimentRecord> out(static_cast<std::size_t>(runs));
  // Exceptions cannot cross the parallel region; capture the first one.
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < runs; ++r) {
    try {
      RngStream rng = RngStream::derive(master_seed, static_cast<std::uint64_t>(r), stream_tag::run);
      out[r] = run(f, cfg, opts, rng);
      out[r].run_index = r;
      out[r].seed = master_seed;
    } catch (...) {
#pragma omp critical
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<ExperimentRecord> run_many_serial(const Objective& f, const RFGConfig& cfg,
                                              const RunOptions& opts, std::uint64_t master_seed,
                                              int runs) {
  if (runs < 1) throw std::invalid_argument("run_many: runs must be >= 1");
  std::vector<ExperimentRecord> out;
  out.reserve(static_cast<std::size_t>(runs));
  for (int r = 0; r < runs; ++r) {
    RngStream rng = RngStream::derive(master_seed, static_cast<std::uint64_t>(r), stream_tag::run);
    out.push_back(run(f, cfg, opts, rng));
    out.back().run_index = r;
    out.back().seed = master_seed;
  }
  return out;
}

std::vector<AggregateRow> aggregate(const std::vector<ExperimentRecord>& records,
                                    TrackedQuantity quantity) {
  const auto pick = [quantity](const IterationRow& row) {
    switch (quantity) {
      case TrackedQuantity::squared_error: return row.squared_error;
      case TrackedQuantity::stacked_error: return row.stacked_error;
      case TrackedQuantity::objective: return row.objective;
    }
    return kNaN;
  };

  int diverged = 0;
  std::size_t longest = 0;
  for (const auto& rec : records) {
    if (rec.diverged) {
      ++diverged;
    } else {
      longest = std::max(longest, rec.rows.size());
    }
  }

  std::vector<AggregateRow> out;
  out.reserve(longest + 1);
  for (std::size_t i = 0; i <= longest; ++i) {
    AggregateRow agg;
    agg.k = static_cast<long>(i);
    agg.diverged = diverged;
    std::vector<double> values;
    values.reserve(records.size());
    for (const auto& rec : records) {
      if (rec.diverged || i > rec.rows.size()) continue;
      values.push_back(pick(i == 0 ? rec.initial : rec.rows[i - 1]));
    }
    agg.included = static_cast<int>(values.size());
    if (values.empty()) {
      agg.mean = agg.stddev = agg.standard_error = kNaN;
    } else {
      const double n = static_cast<double>(values.size());
      double sum = 0.0;
      for (double v : values) sum += v;
      agg.mean = sum / n;
      double ss = 0.0;
      for (double v : values) ss += (v - agg.mean) * (v - agg.mean);
      agg.stddev = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
      agg.standard_error = agg.stddev / std::sqrt(n);
    }
    out.push_back(agg);
  }
  return out;
}

double log_linear_slope(const std::vector<AggregateRow>& rows, long k_min, long k_max) {
  double n = 0.0, sk = 0.0, sy = 0.0;
  for (const auto& r : rows) {
    if (r.k < k_min || r.k > k_max || !(r.mean > 0.0) || !std::isfinite(r.mean)) continue;
    n += 1.0;
    sk += static_cast<double>(r.k);
    sy += std::log(r.mean);
  }
  if (n < 2.0) return kNaN;
  const double kbar = sk / n, ybar = sy / n;
  double num = 0.0, den = 0.0;
  for (const auto& r : rows) {
    if (r.k < k_min || r.k > k_max || !(r.mean > 0.0) || !std::isfinite(r.mean)) continue;
    const double dk = static_cast<double>(r.k) - kbar;
    num += dk * (std::log(r.mean) - ybar);
    den += dk * dk;
  }
  return num / den;
}

}  // namespace rfg
