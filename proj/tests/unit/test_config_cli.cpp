#include "rfg/app/commands.hpp"
#include "rfg/app/config.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace rfg;
using namespace rfg::app;

namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rfg");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("rfg_unit_" + name);
}

}  // namespace

TEST_CASE("config round-trip for every subcommand") {
  for (std::string_view sub : kSubcommands) {
    ExperimentConfig c = defaults_for(sub);
    CHECK(from_json(to_json(c), ExperimentConfig{}) == c);
    c.mu = 0.25;
    c.schedule = LRSchedule::staircase(0.1, 0.5, 10);
    c.sigma2 = ValueOrOptimal::of(0.125);
    c.eta = ValueOrOptimal::of(1.0 / 3.0);
    c.out = "x.csv";
    CHECK(from_json(to_json(c), ExperimentConfig{}) == c);
  }
}

TEST_CASE("config parsing errors") {
  CHECK_THROWS_AS(from_json("{", ExperimentConfig{}), std::invalid_argument);
  CHECK_THROWS_AS(from_json("[1]", ExperimentConfig{}), std::invalid_argument);
  CHECK_THROWS_AS(from_json(R"({"distributions": ["cauchy"]})", ExperimentConfig{}),
                  std::invalid_argument);
  CHECK_THROWS_AS(ValueOrOptimal::parse("fast"), std::invalid_argument);
  CHECK(ValueOrOptimal::parse("optimal").optimal);
  CHECK(ValueOrOptimal::parse("0.5").value == 0.5);
  CHECK(parse_distribution_list("bernoulli,laplace").size() == 2);
  CHECK(parse_distribution_list("all").size() == 5);
}

TEST_CASE("usage errors exit 2") {
  CHECK(run_cli({}) == kUsageError);
  CHECK(run_cli({"frobnicate"}) == kUsageError);
  CHECK(run_cli({"verify-moments", "--dist", "cauchy"}) == kUsageError);
  CHECK(run_cli({"gd-quadratic", "--eta", "fast"}) == kUsageError);
  CHECK(run_cli({"gd-quadratic", "--config", "/nonexistent/cfg.json"}) == kUsageError);
}

TEST_CASE("output failure exits 1") {
  CHECK(run_cli({"gd-quadratic", "--runs", "1", "--iters", "2", "--out", "/nonexistent/dir/x.csv"}) ==
        kVerificationFailed);
}

TEST_CASE("gd-quadratic writes a versioned csv, reproducibly") {
  const auto a = temp_path("gd_a.csv"), b = temp_path("gd_b.csv");
  const std::vector<std::string> common{"gd-quadratic", "--dist", "bernoulli", "--runs", "3",
                                        "--iters", "20", "--seed", "4"};
  auto args = common;
  args.insert(args.end(), {"--out", a.string()});
  CHECK(run_cli(args) == kOk);
  args = common;
  args.insert(args.end(), {"--out", b.string()});
  CHECK(run_cli(args) == kOk);
  const std::string sa = slurp(a);
  CHECK(sa == slurp(b));
  CHECK(sa.rfind("# schema: rfg.gd-quadratic/v1\n", 0) == 0);
  std::filesystem::remove(a);
  std::filesystem::remove(b);
}

TEST_CASE("config file layers under flags") {
  const auto cfg = temp_path("cfg.json"), out = temp_path("cfg_out.csv");
  {
    std::ofstream f(cfg);
    f << R"({"runs": 2, "iters": 5, "distributions": ["gaussian"], "d": 3})";
  }
  CHECK(run_cli({"gd-quadratic", "--config", cfg.string(), "--iters", "7", "--out", out.string()}) ==
        kOk);
  const std::string s = slurp(out);
  CHECK(s.find("gaussian") != std::string::npos);
  CHECK(s.find("bernoulli") == std::string::npos);
  CHECK(s.find("\ngaussian,1,") != std::string::npos);
  std::filesystem::remove(cfg);
  std::filesystem::remove(out);
}

TEST_CASE("phb-grid on a non-aligned problem is a usage error") {
  CHECK(run_cli({"phb-grid", "--problem", "gd", "--d", "3", "--k-target", "10", "--out",
                 temp_path("grid.csv").string()}) == kUsageError);
}

TEST_CASE("bench emits the table shape") {
  const auto out = temp_path("bench.csv");
  CHECK(run_cli({"bench", "--iters", "2", "--out", out.string()}) == kOk);
  const std::string s = slurp(out);
  CHECK(s.find("N,L,baseline_iters_per_sec,rfg_iters_per_sec,delta_pct") != std::string::npos);
  std::filesystem::remove(out);
}
