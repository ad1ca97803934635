#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "dronefusion/errors.hpp"
#include "dronefusion/sim/csv.hpp"
#include "dronefusion/sim/runner.hpp"
#include "dronefusion/sim/scenario.hpp"
#include "dronefusion/sim/verify.hpp"

#ifndef DRONEFUSION_VERSION
#define DRONEFUSION_VERSION "0.0.0"
#endif
#ifndef DRONEFUSION_BUILD_ID
#define DRONEFUSION_BUILD_ID "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

std::string iso_timestamp_utc() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw dronefusion::ConfigError("cannot read config file: " + path);
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw dronefusion::ConfigError("config file " + path + ": " + e.what());
  }
}

/// Seed precedence: config file < DRONEFUSION_SEED < --set seed=... overrides.
void apply_env_and_overrides(json& j, const std::vector<std::string>& sets) {
  if (const char* env = std::getenv("DRONEFUSION_SEED")) {
    const std::string text(env);
    std::size_t used = 0;
    std::uint64_t value = 0;
    try {
      value = std::stoull(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (text.empty() || used != text.size()) {
      throw dronefusion::ConfigError("DRONEFUSION_SEED must be a non-negative integer, got '" +
                                     text + "'");
    }
    j["seed"] = value;
  }
  for (const std::string& assignment : sets) {
    dronefusion::sim::apply_override(j, assignment);
  }
}

std::uint64_t env_seed_or(std::uint64_t fallback) {
  json j;
  j["seed"] = fallback;
  apply_env_and_overrides(j, {});
  return j["seed"].get<std::uint64_t>();
}

/// Creates (or reuses) the output directory, refusing one that already holds
/// a run, and writes the manifest before anything executes.
void prepare_output_dir(const fs::path& dir, const std::string& config_path,
                        const dronefusion::sim::ScenarioConfig& config) {
  fs::create_directories(dir);
  const fs::path manifest_path = dir / "manifest.json";
  if (fs::exists(manifest_path)) {
    throw dronefusion::ConfigError("output directory " + dir.string() +
                                   " already contains manifest.json; pick a fresh directory");
  }
  json manifest;
  manifest["config"] = config_path;
  manifest["output_dir"] = dir.string();
  manifest["tool_version"] = DRONEFUSION_VERSION;
  manifest["build_id"] = DRONEFUSION_BUILD_ID;
  manifest["seed"] = config.seed;
  manifest["started"] = iso_timestamp_utc();
  std::ofstream out(manifest_path);
  out << manifest.dump(2) << '\n';
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::vector<std::string>& sets) {
  json raw = load_config_file(config_path);
  apply_env_and_overrides(raw, sets);
  const dronefusion::sim::ScenarioConfig config = dronefusion::sim::parse_config(raw);

  const fs::path dir(out_dir);
  prepare_output_dir(dir, config_path, config);

  const dronefusion::sim::ScenarioLog log = dronefusion::sim::run_scenario(config);
  {
    std::ofstream csv(dir / "log.csv");
    dronefusion::sim::write_csv(csv, log);
  }

  json metrics;
  if (!log.steps.empty()) {
    metrics = dronefusion::sim::metrics_to_json(dronefusion::sim::compute_metrics(log));
  } else {
    metrics["failed"] = log.failed;
    metrics["failure_reason"] = log.failure_reason;
    metrics["steps"] = 0;
  }
  metrics["config"] = dronefusion::sim::to_json(config);
  write_json_file(dir / "metrics.json", metrics);

  for (const std::string& event : log.events) {
    std::cerr << "note: " << event << '\n';
  }
  if (log.failed) {
    std::cerr << "run failed: " << log.failure_reason << " (partial log retained)\n";
    return kExitNumeric;
  }
  std::cout << "wrote " << (dir / "log.csv").string() << " (" << log.steps.size()
            << " rows) and " << (dir / "metrics.json").string() << '\n';
  return kExitOk;
}

int cmd_montecarlo(const std::string& config_path, const std::string& out_dir, int seeds,
                   int jobs, const std::vector<std::string>& sets) {
  json raw = load_config_file(config_path);
  apply_env_and_overrides(raw, sets);
  const dronefusion::sim::ScenarioConfig config = dronefusion::sim::parse_config(raw);

  const fs::path dir(out_dir);
  prepare_output_dir(dir, config_path, config);

  const dronefusion::sim::AggregateMetrics agg =
      dronefusion::sim::run_montecarlo(config, seeds, jobs);
  json out = dronefusion::sim::aggregate_to_json(agg);
  out["config"] = dronefusion::sim::to_json(config);
  write_json_file(dir / "aggregate.json", out);

  if (agg.failed_runs > 0) {
    std::cerr << agg.failed_runs << " of " << seeds
              << " runs failed; see aggregate.json for the survivors\n";
    return kExitNumeric;
  }
  std::cout << "wrote " << (dir / "aggregate.json").string() << " (" << seeds << " seeds)\n";
  return kExitOk;
}

int cmd_verify(const std::string& suite) {
  const std::uint64_t seed = env_seed_or(1);
  const std::vector<dronefusion::sim::VerifyResult> results =
      dronefusion::sim::run_verify(suite, seed);
  bool all_passed = true;
  for (const auto& result : results) {
    for (const auto& check : result.checks) {
      all_passed = all_passed && check.passed;
      std::printf("[%s] %s: %-45s %s\n", check.passed ? "PASS" : "FAIL", result.suite.c_str(),
                  check.name.c_str(), check.detail.c_str());
    }
  }
  std::printf("verify: %s\n", all_passed ? "all checks passed" : "FAILURES present");
  return all_passed ? kExitOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dronefusion: quadrotor state-estimation scenario runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string suite = "all";
  std::vector<std::string> sets;
  int seeds = 1;
  int jobs = 1;

  CLI::App* run = app.add_subcommand("run", "Run one scenario from a JSON config");
  run->add_option("--config", config_path, "Scenario config file (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory for manifest/log/metrics")->required();
  run->add_option("--set", sets, "Override a config field, dotted.path=value (repeatable)");

  CLI::App* verify =
      app.add_subcommand("verify", "Run built-in verification suites and print a table");
  verify->add_option("suite", suite,
                     "jacobians | linear-equivalence | consistency | all (default all)");

  CLI::App* mc = app.add_subcommand("montecarlo", "Run many seeded scenarios and aggregate");
  mc->add_option("--config", config_path, "Scenario config file (JSON)")->required();
  mc->add_option("--out", out_dir, "Output directory for manifest/aggregate")->required();
  mc->add_option("--seeds", seeds, "Number of seeded runs (run i uses seed+i)")
      ->check(CLI::PositiveNumber);
  mc->add_option("--jobs", jobs, "Worker threads; results merge in seed order regardless")
      ->check(CLI::PositiveNumber);
  mc->add_option("--set", sets, "Override a config field, dotted.path=value (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) {
      return cmd_run(config_path, out_dir, sets);
    }
    if (verify->parsed()) {
      return cmd_verify(suite);
    }
    return cmd_montecarlo(config_path, out_dir, seeds, jobs, sets);
  } catch (const dronefusion::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const dronefusion::DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const dronefusion::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const dronefusion::Error& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return kExitNumeric;
  }
}
