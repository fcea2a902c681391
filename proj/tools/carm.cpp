#include <iostream>

#include <CLI11.hpp>

#include "carm/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Cultural-algorithm classification rule miner"};
  app.require_subcommand(1);

  carm::RunOptions run;
  std::string run_config, run_preset, run_objectives, run_out;
  std::uint64_t run_seed = 0;
  auto* run_cmd = app.add_subcommand("run", "Run one evolution and write its artifacts");
  run_cmd->add_option("--config", run_config, "RunConfig JSON file")->check(CLI::ExistingFile);
  run_cmd->add_option("--preset", run_preset, "Dataset preset: iris, ljb or wbc");
  run_cmd->add_option("--objectives", run_objectives, "Comma-separated objectives, e.g. coverage,confidence");
  auto* run_seed_opt = run_cmd->add_option("--seed", run_seed, "Random seed");
  run_cmd->add_option("--set", run.sets, "KEY=VALUE override (repeatable, last wins)");
  run_cmd->add_option("--out", run_out, "Output directory (default $CARM_OUT or carm-out)");

  carm::ExperimentOptions exp;
  std::string exp_plan, exp_out;
  std::uint64_t exp_seed = 0;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a repetition plan and write the aggregate report");
  exp_cmd->add_option("--config,--plan", exp_plan, "Plan JSON file")->required()->check(CLI::ExistingFile);
  auto* exp_seed_opt = exp_cmd->add_option("--seed", exp_seed, "Base seed");
  exp_cmd->add_option("--set", exp.sets, "KEY=VALUE override (repeatable, last wins)");
  exp_cmd->add_option("--out", exp_out, "Output directory (default $CARM_OUT or carm-out)");

  carm::InspectOptions inspect;
  auto* inspect_cmd = app.add_subcommand("inspect", "Describe a dataset's attributes and classes");
  inspect_cmd->add_option("dataset", inspect.dataset, "Preset name or CSV path");
  std::string inspect_schema;
  inspect_cmd->add_option("--schema-preset", inspect_schema, "Preset schema for a CSV path");
  inspect_cmd->add_flag("--json", inspect.json, "Print JSON");

  carm::ServeOptions serve;
  std::string serve_out, serve_ui;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API and UI bundle");
  serve_cmd->add_option("--port", serve.port, "Port")->capture_default_str();
  serve_cmd->add_option("--host", serve.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--out", serve_out, "Directory for persisted runs");
  serve_cmd->add_option("--ui", serve_ui, "UI bundle directory served at /");
  serve_cmd->add_option("--max-runs", serve.max_concurrent, "Concurrent run limit")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : carm::exit_config_error;
  }

  if (*run_cmd) {
    if (!run_config.empty()) run.config = run_config;
    if (!run_preset.empty()) run.preset = run_preset;
    if (!run_objectives.empty()) run.objectives = run_objectives;
    if (*run_seed_opt) run.seed = run_seed;
    run.out = run_out.empty() ? carm::default_output_dir() : std::filesystem::path(run_out);
    return carm::cmd_run(run, std::cout, std::cerr);
  }
  if (*exp_cmd) {
    exp.plan = exp_plan;
    if (*exp_seed_opt) exp.seed = exp_seed;
    exp.out = exp_out.empty() ? carm::default_output_dir() : std::filesystem::path(exp_out);
    return carm::cmd_experiment(exp, std::cout, std::cerr);
  }
  if (*inspect_cmd) {
    if (!inspect_schema.empty()) inspect.schema_preset = inspect_schema;
    return carm::cmd_inspect(inspect, std::cout, std::cerr);
  }
  serve.out = serve_out.empty() ? carm::default_output_dir() : std::filesystem::path(serve_out);
  serve.ui_dir = serve_ui;
  return carm::cmd_serve(serve, std::cout, std::cerr);
}
