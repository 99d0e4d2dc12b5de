#include "rfg/app/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rfg::app {

using nlohmann::json;

ValueOrOptimal ValueOrOptimal::parse(std::string_view text) {
  if (text == "optimal") return best();
  double v = 0.0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw std::invalid_argument("expected a number or 'optimal', got '" + std::string(text) + "'");
  }
  return of(v);
}

std::string ValueOrOptimal::to_string() const {
  if (optimal) return "optimal";
  std::ostringstream os;
  os.precision(17);
  os << value;
  return os.str();
}

std::vector<Distribution> parse_distribution_list(std::string_view text) {
  if (text == "all") return {kAllDistributions.begin(), kAllDistributions.end()};
  std::vector<Distribution> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    out.push_back(parse_distribution(text.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

ExperimentConfig defaults_for(std::string_view subcommand) {
  ExperimentConfig c;
  c.subcommand = std::string(subcommand);
  const std::vector<Distribution> all{kAllDistributions.begin(), kAllDistributions.end()};
  if (subcommand == "verify-moments") {
    c.distributions = all;
    c.seed = 2024;
  } else if (subcommand == "gd-quadratic") {
    c.distributions = all;
  } else if (subcommand == "phb") {
    c.optimizer = OptimizerKind::phb;
    c.distributions = {Distribution::bernoulli};
    c.d = 3;
    c.runs = 1000;
    c.iters = 100;
    c.samples = 100000;
    c.k_target = 1000;
  } else if (subcommand == "phb-grid") {
    c.optimizer = OptimizerKind::phb;
    c.problem = "phb";
    c.distributions = {Distribution::bernoulli};
    c.d = 30;
  } else if (subcommand == "testfn") {
    c.problem = "all";
    c.distributions = all;
    c.sigma2 = ValueOrOptimal::best();
    c.h = 0.0;
    c.d = 2;
    c.runs = 5;
    c.iters = 1000;
  } else if (subcommand == "fa") {
    c.distributions = {Distribution::bernoulli};
    c.sigma2 = ValueOrOptimal::best();
    c.h = 0.0;
    c.eta = ValueOrOptimal::of(2.0);
    c.runs = 5;
    c.iters = 50000;
    c.samples = 100;
  } else if (subcommand == "bench") {
    c.distributions = {Distribution::bernoulli};
    c.sigma2 = ValueOrOptimal::best();
    c.h = 0.0;
    c.eta = ValueOrOptimal::of(1e-3);
    c.iters = 50;
    c.samples = 100;
    c.bench_sizes = {{100, 4}, {200, 4}};
  } else {
    throw std::invalid_argument("unknown subcommand '" + std::string(subcommand) + "'");
  }
  return c;
}

namespace {

const char* optimizer_name(OptimizerKind k) { return k == OptimizerKind::phb ? "phb" : "gd"; }

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "gd") return OptimizerKind::gd;
  if (s == "phb") return OptimizerKind::phb;
  throw std::invalid_argument("unknown optimizer '" + s + "' (expected gd|phb)");
}

json schedule_json(const LRSchedule& s) {
  return {{"kind", s.kind == LRSchedule::Kind::constant ? "constant" : "staircase"},
          {"base", s.base},
          {"decay_rate", s.decay_rate},
          {"decay_step", s.decay_step}};
}

LRSchedule parse_schedule(const json& j) {
  LRSchedule s;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") {
    s.kind = LRSchedule::Kind::constant;
  } else if (kind == "staircase") {
    s.kind = LRSchedule::Kind::staircase_exponential;
  } else {
    throw std::invalid_argument("unknown schedule kind '" + kind + "'");
  }
  s.base = j.at("base").get<double>();
  s.decay_rate = j.value("decay_rate", 1.0);
  s.decay_step = j.value("decay_step", 1L);
  s.validate();
  return s;
}

ValueOrOptimal parse_value(const json& j) {
  if (j.is_string()) return ValueOrOptimal::parse(j.get<std::string>());
  return ValueOrOptimal::of(j.get<double>());
}

json value_json(const ValueOrOptimal& v) {
  if (v.optimal) return "optimal";
  return v.value;
}

}  // namespace

std::string to_json(const ExperimentConfig& c) {
  json j;
  j["subcommand"] = c.subcommand;
  j["problem"] = c.problem;
  json dists = json::array();
  for (auto k : c.distributions) dists.push_back(std::string(to_string(k)));
  j["distributions"] = dists;
  j["sigma2"] = value_json(c.sigma2);
  j["h"] = c.h;
  j["optimizer"] = optimizer_name(c.optimizer);
  j["eta"] = value_json(c.eta);
  j["baseline_eta"] = c.baseline_eta;
  j["mu"] = c.mu ? json(*c.mu) : json(nullptr);
  j["schedule"] = c.schedule ? schedule_json(*c.schedule) : json(nullptr);
  j["d"] = c.d;
  j["runs"] = c.runs;
  j["iters"] = c.iters;
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["samples"] = c.samples;
  j["k_target"] = c.k_target;
  j["width"] = c.width;
  j["depth"] = c.depth;
  json sizes = json::array();
  for (auto [n, l] : c.bench_sizes) sizes.push_back({n, l});
  j["bench_sizes"] = sizes;
  j["export_matrix"] = c.export_matrix;
  return j.dump(2);
}

ExperimentConfig from_json(std::string_view text, ExperimentConfig c) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  try {
    if (j.contains("subcommand")) c.subcommand = j["subcommand"].get<std::string>();
    if (j.contains("problem")) c.problem = j["problem"].get<std::string>();
    if (j.contains("distributions")) {
      c.distributions.clear();
      for (const auto& name : j["distributions"])
        c.distributions.push_back(parse_distribution(name.get<std::string>()));
    }
    if (j.contains("sigma2")) c.sigma2 = parse_value(j["sigma2"]);
    if (j.contains("h")) c.h = j["h"].get<double>();
    if (j.contains("optimizer")) c.optimizer = parse_optimizer(j["optimizer"].get<std::string>());
    if (j.contains("eta")) c.eta = parse_value(j["eta"]);
    if (j.contains("baseline_eta")) c.baseline_eta = j["baseline_eta"].get<double>();
    if (j.contains("mu")) {
      c.mu = j["mu"].is_null() ? std::nullopt : std::optional<double>(j["mu"].get<double>());
    }
    if (j.contains("schedule")) {
      c.schedule = j["schedule"].is_null() ? std::nullopt
                                            : std::optional<LRSchedule>(parse_schedule(j["schedule"]));
    }
    if (j.contains("d")) c.d = j["d"].get<int>();
    if (j.contains("runs")) c.runs = j["runs"].get<int>();
    if (j.contains("iters")) c.iters = j["iters"].get<long>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    if (j.contains("samples")) c.samples = j["samples"].get<long>();
    if (j.contains("k_target")) c.k_target = j["k_target"].get<long>();
    if (j.contains("width")) c.width = j["width"].get<int>();
    if (j.contains("depth")) c.depth = j["depth"].get<int>();
    if (j.contains("bench_sizes")) {
      c.bench_sizes.clear();
      for (const auto& p : j["bench_sizes"])
        c.bench_sizes.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
    }
    if (j.contains("export_matrix")) c.export_matrix = j["export_matrix"].get<std::string>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str(), std::move(base));
}

}  // namespace rfg::app
