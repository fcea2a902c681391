#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "carm/dataset.hpp"
#include "carm/evolution.hpp"
#include "carm/experiment.hpp"
#include "carm/rule_model.hpp"

namespace carm {

/// "IF a=label AND ... THEN class=label".
std::string render_rule(const Chromosome& rule, const Dataset& dataset);

/// Attribute names, kinds, codes and labels, plus class counts.
nlohmann::json describe_dataset(const Dataset& dataset);

/// Value of a `--set KEY=VALUE` pair: JSON when it parses as JSON, otherwise a string.
std::pair<std::string, nlohmann::json> parse_assignment(const std::string& text);

/// Applies assignments in order, so a later key wins. Unknown keys raise ConfigError.
RunConfig apply_overrides(RunConfig config, const std::vector<std::string>& assignments);

/// CARM_OUT when set, otherwise "carm-out".
std::filesystem::path default_output_dir();

// Exit codes.
inline constexpr int exit_ok = 0;
inline constexpr int exit_config_error = 1;
inline constexpr int exit_runtime_error = 2;

struct RunOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::string> preset;
  std::optional<std::string> objectives;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  std::filesystem::path out;
};

/// Resolves the configuration: preset defaults, then the config file, then
/// --objectives and --seed, then every --set in order.
RunConfig resolve_run_config(const RunOptions& options);

/// Writes run.json, rules.txt, front.csv and report.txt under `options.out`.
int cmd_run(const RunOptions& options, std::ostream& out, std::ostream& err);

struct ExperimentOptions {
  std::filesystem::path plan;
  std::optional<std::uint64_t> seed;
  /// Plan keys (repetitions, threads, ...) or run keys, which go to the plan's overrides.
  std::vector<std::string> sets;
  std::filesystem::path out;
};

ExperimentPlan resolve_plan(const ExperimentOptions& options);

/// Writes experiment.json, report.txt and front.csv under `options.out`.
/// A failed run still writes the rows completed before it.
int cmd_experiment(const ExperimentOptions& options, std::ostream& out, std::ostream& err);

struct InspectOptions {
  std::string dataset = "iris";
  std::optional<std::string> schema_preset;
  bool json = false;
};

int cmd_inspect(const InspectOptions& options, std::ostream& out, std::ostream& err);

struct ServeOptions {
  int port = 8077;
  std::string host = "127.0.0.1";
  std::filesystem::path out;
  /// Directory served at "/"; empty disables static files.
  std::filesystem::path ui_dir;
  std::size_t max_concurrent = 2;
};

int cmd_serve(const ServeOptions& options, std::ostream& out, std::ostream& err);

/// File contents written by cmd_run, exposed for tests.
std::string rules_listing(const RunResult& result, const Dataset& dataset);
std::string front_csv(const RunResult& result);
std::string run_report(const RunResult& result);

}  // namespace carm
