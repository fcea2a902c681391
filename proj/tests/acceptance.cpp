// One PASS/FAIL line per acceptance criterion.
//
//   carm_acceptance [--only NAME] [--carm PATH] [--plan PATH]
//
// Exit status is non-zero when any selected criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "carm/classifier.hpp"
#include "carm/dataset.hpp"
#include "carm/evolution.hpp"
#include "carm/experiment.hpp"
#include "oracles.hpp"

using namespace carm;
namespace fs = std::filesystem;

namespace {

// Pinned limits.
constexpr std::size_t metric_cases = 1000;
constexpr double metric_budget_s = 5.0;
constexpr std::size_t pareto_sets = 500;
constexpr double pareto_budget_s = 5.0;
constexpr double trend_budget_s = 600.0;
constexpr std::size_t floor_runs = 10;
constexpr double floor_accuracy = 0.85;
constexpr double floor_budget_s = 120.0;
constexpr std::size_t monotonicity_cases = 10000;
constexpr std::size_t fuzz_cycles = 10000;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Outcome metric_oracle() {
  const auto t0 = Clock::now();
  const auto failure = oracle::metric_sweep(metric_cases, 20240601);
  const double s = seconds_since(t0);
  return {failure.empty() && s < metric_budget_s,
          std::to_string(metric_cases) + " cases in " + fixed(s) + " s" +
              (failure.empty() ? "" : "; " + failure)};
}

Outcome pareto_oracle() {
  const auto t0 = Clock::now();
  const auto failure = oracle::pareto_sweep(pareto_sets, 20240602);
  const double s = seconds_since(t0);
  return {failure.empty() && s < pareto_budget_s,
          std::to_string(pareto_sets) + " sets in " + fixed(s) + " s" +
              (failure.empty() ? "" : "; " + failure)};
}

Outcome discretization() {
  struct Golden {
    const char* preset;
    const char* attribute;
    double value;
    Code code;
  };
  // Every printed boundary plus an interior value of each interval.
  static const Golden goldens[] = {
      {"iris", "sepal_length", 4.0, 1},  {"iris", "sepal_length", 5.5, 1},  {"iris", "sepal_length", 5.6, 2},
      {"iris", "sepal_length", 6.2, 2},  {"iris", "sepal_length", 6.8, 2},  {"iris", "sepal_length", 6.9, 3},
      {"iris", "sepal_length", 7.9, 3},  {"iris", "sepal_width", 2.0, 1},   {"iris", "sepal_width", 2.8, 1},
      {"iris", "sepal_width", 2.9, 2},   {"iris", "sepal_width", 3.3, 2},   {"iris", "sepal_width", 3.7, 2},
      {"iris", "sepal_width", 3.8, 3},   {"iris", "sepal_width", 4.4, 3},   {"iris", "petal_length", 1.0, 1},
      {"iris", "petal_length", 3.0, 1},  {"iris", "petal_length", 3.1, 2},  {"iris", "petal_length", 4.0, 2},
      {"iris", "petal_length", 5.0, 2},  {"iris", "petal_length", 5.1, 3},  {"iris", "petal_length", 6.9, 3},
      {"iris", "petal_width", 0.1, 1},   {"iris", "petal_width", 0.8, 1},   {"iris", "petal_width", 0.9, 2},
      {"iris", "petal_width", 1.3, 2},   {"iris", "petal_width", 1.7, 2},   {"iris", "petal_width", 1.8, 3},
      {"iris", "petal_width", 2.5, 3},   {"ljb", "age", 20, 1},             {"ljb", "age", 39, 1},
      {"ljb", "age", 40, 2},             {"ljb", "age", 45, 2},             {"ljb", "age", 49, 2},
      {"ljb", "age", 50, 3},             {"ljb", "age", 59, 3},             {"ljb", "age", 60, 4},
      {"ljb", "age", 79, 4},             {"ljb", "tumor_size", 0, 1},       {"ljb", "tumor_size", 9, 1},
      {"ljb", "tumor_size", 10, 2},      {"ljb", "tumor_size", 19, 2},      {"ljb", "tumor_size", 20, 3},
      {"ljb", "tumor_size", 29, 3},      {"ljb", "tumor_size", 30, 4},      {"ljb", "tumor_size", 39, 4},
      {"ljb", "tumor_size", 40, 5},      {"ljb", "tumor_size", 49, 5},      {"ljb", "tumor_size", 50, 6},
      {"ljb", "tumor_size", 59, 6},      {"ljb", "inv_nodes", 0, 1},        {"ljb", "inv_nodes", 2, 1},
      {"ljb", "inv_nodes", 3, 2},        {"ljb", "inv_nodes", 5, 2},        {"ljb", "inv_nodes", 6, 3},
      {"ljb", "inv_nodes", 8, 3},        {"ljb", "inv_nodes", 9, 4},        {"ljb", "inv_nodes", 11, 4},
      {"ljb", "inv_nodes", 12, 5},       {"ljb", "inv_nodes", 14, 5},       {"ljb", "inv_nodes", 15, 6},
      {"ljb", "inv_nodes", 17, 6},       {"ljb", "inv_nodes", 24, 7},       {"ljb", "inv_nodes", 26, 7},
  };
  std::size_t wrong = 0;
  std::string first;
  for (const auto& g : goldens) {
    const auto schema = preset_schema(g.preset);
    for (const auto& a : schema.attributes) {
      if (a.name != g.attribute) continue;
      const auto got = discretize(g.value, a);
      if (got != g.code) {
        if (!wrong) first = std::string(g.attribute) + " " + fixed(g.value, 2) + " -> " + std::to_string(got);
        ++wrong;
      }
    }
  }
  const auto n = sizeof goldens / sizeof goldens[0];
  return {wrong == 0, std::to_string(n - wrong) + "/" + std::to_string(n) + " goldens exact" +
                          (wrong ? "; first miss " + first : "")};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const std::string& carm_binary) {
  if (carm_binary.empty()) return {false, "no carm binary given (--carm)"};
  const auto root = fs::temp_directory_path() / "carm-acceptance-determinism";
  fs::remove_all(root);
  std::vector<std::string> docs;
  for (const char* name : {"a", "b"}) {
    const auto out = root / name;
    const std::string cmd = "\"" + carm_binary + "\" run --preset iris --seed 42 --set generations=20 --out \"" +
                            out.string() + "\" > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "carm run failed: " + cmd};
    docs.push_back(slurp(out / "run.json"));
  }
  const bool same = !docs[0].empty() && docs[0] == docs[1];
  return {same, std::to_string(docs[0].size()) + " bytes, " + (same ? "identical" : "different")};
}

const CellSummary* cell_at(const ExperimentReport& r, const std::string& dataset, std::size_t k) {
  for (const auto& c : r.cells) {
    if (c.dataset == dataset && c.objectives.size() == k && !c.probe) return &c;
  }
  return nullptr;
}

Outcome trend_replication(const fs::path& plan_path) {
  std::ifstream in(plan_path);
  if (!in) return {false, "cannot open plan " + plan_path.string()};
  const auto plan = plan_from_json(nlohmann::json::parse(in));
  const auto t0 = Clock::now();
  const auto report = run_plan(plan);
  const double s = seconds_since(t0);

  bool a = true, b = true;
  std::string detail;
  for (const auto& d : plan.datasets) {
    const auto* c2 = cell_at(report, d, 2);
    const auto* c4 = cell_at(report, d, 4);
    const auto* c5 = cell_at(report, d, 5);
    if (!c2 || !c4 || !c5) return {false, "plan lacks a 2, 4 or 5 objective cell for " + d};
    const bool da = c2->rules_hks.mean > c5->rules_hks.mean;
    const bool db = c4->accuracy.mean >= c5->accuracy.mean;
    a = a && da;
    b = b && db;
    detail += d + ": hks " + fixed(c2->rules_hks.mean, 2) + " vs " + fixed(c5->rules_hks.mean, 2) +
              (da ? "" : " (a fails)") + ", acc4 " + fixed(c4->accuracy.mean, 4) + " vs acc5 " +
              fixed(c5->accuracy.mean, 4) + (db ? "" : " (b fails)") + "; ";
  }
  detail += std::to_string(report.rows.size()) + " runs in " + fixed(s, 1) + " s";
  if (s >= trend_budget_s) detail += " (over budget)";
  return {a && b && s < trend_budget_s, detail};
}

Outcome iris_floor() {
  const auto dataset = load_preset("iris");
  auto config = preset_config("iris");
  config.objectives = parse_objective_list("coverage,confidence,interest,surprise");
  config.generations = 50;
  const auto t0 = Clock::now();
  double sum = 0;
  std::string each;
  for (std::size_t r = 0; r < floor_runs; ++r) {
    config.rng_seed = 1 + r;
    const auto result = run(config, dataset);
    sum += result.accuracy;
    each += (r ? " " : "") + fixed(result.accuracy, 3);
  }
  const double s = seconds_since(t0);
  const double mean = sum / floor_runs;
  return {mean >= floor_accuracy && s < floor_budget_s,
          "mean " + fixed(mean, 4) + " (floor " + fixed(floor_accuracy, 2) + ") over [" + each + "] in " +
              fixed(s, 1) + " s"};
}

Outcome classifier_suite() {
  const Row row{1, 2, 1, 1, 1};
  const bool majority = classify(row, RuleSet{{Chromosome{{3, 3, 3, 3}, 3}}, 2}, 0.75) == 2;
  const bool single =
      classify(row, RuleSet{{Chromosome{{3, 3, 3, 3}, 3}, Chromosome{{1, 2, 1, 3}, 2}}, 1}, 0.75) == 2;
  const bool modal = classify(row,
                              RuleSet{{Chromosome{{1, 2, 1, 1}, 1}, Chromosome{{1, 2, 1, 2}, 1},
                                       Chromosome{{1, 2, 1, 1}, 3}},
                                      2},
                              0.75) == 1;
  const auto failure = oracle::threshold_sweep(monotonicity_cases, 20240603);
  std::string detail = std::string("majority ") + (majority ? "ok" : "wrong") + ", single " +
                       (single ? "ok" : "wrong") + ", modal " + (modal ? "ok" : "wrong") + ", " +
                       std::to_string(monotonicity_cases) + " monotonicity cases " +
                       (failure.empty() ? "ok" : failure);
  return {majority && single && modal && failure.empty(), detail};
}

Outcome belief_fuzz() {
  const auto failure = oracle::belief_fuzz(fuzz_cycles, 20240604);
  return {failure.empty(), std::to_string(fuzz_cycles) + " accept cycles" + (failure.empty() ? "" : "; " + failure)};
}

Outcome reference_trends() {
  const auto verdicts = trend_check(reference_report());
  bool all = verdicts.size() == 3;
  std::string detail;
  for (const auto& v : verdicts) {
    all = all && v.hks_decreases && v.accuracy_peaks_at_four && v.rks_trend;
    detail += v.dataset + " " + (v.hks_decreases ? "T" : "F") + (v.accuracy_peaks_at_four ? "T" : "F") +
              (v.rks_trend ? "T" : "F") + " ";
  }
  return {all, detail + "(hks, accuracy, rks)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string only, carm_binary;
  std::string plan = std::string(CARM_SOURCE_DIR) + "/plans/table5.json";
  app.add_option("--only", only, "Run a single criterion");
  app.add_option("--carm", carm_binary, "Path to the carm executable");
  app.add_option("--plan", plan, "Replication plan");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"metric_oracle", metric_oracle},
      {"pareto_oracle", pareto_oracle},
      {"discretization_goldens", discretization},
      {"determinism", [&] { return determinism(carm_binary); }},
      {"trend_replication", [&] { return trend_replication(plan); }},
      {"iris_accuracy_floor", iris_floor},
      {"classifier_suite", classifier_suite},
      {"belief_space_fuzz", belief_fuzz},
      {"reference_trend_check", reference_trends},
  };

  bool ok = true, matched = false;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && only != name) continue;
    matched = true;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    ok = ok && o.pass;
  }
  if (!matched) {
    std::cerr << "unknown criterion: " << only << "\n";
    return 2;
  }
  return ok ? 0 : 1;
}
