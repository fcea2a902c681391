#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "carm/evolution.hpp"

namespace carm {

struct ExperimentPlan {
  std::vector<std::string> datasets{"iris", "ljb", "wbc"};
  std::vector<std::vector<Objective>> objective_sets;
  std::size_t repetitions = 10;
  /// Repetition r runs with seed base_seed + r.
  std::uint64_t base_seed = 1;
  /// Applied on top of every dataset's preset configuration.
  nlohmann::json overrides = nlohmann::json::object();
  /// Per-dataset overrides, applied after `overrides`.
  std::map<std::string, nlohmann::json> dataset_overrides;
  /// Adds a six-objective cell per dataset: every metric plus a minimized rule_difference.
  /// Reported, never used by trend_check.
  bool six_objective_probe = false;
  /// 0 uses the hardware concurrency.
  unsigned threads = 0;
};

/// Coverage, confidence, interest, surprise, rule_difference and rule_difference:min.
std::vector<Objective> six_objective_set();

std::vector<FieldError> validate(const ExperimentPlan& plan);
ExperimentPlan plan_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ExperimentPlan& plan);

/// Every (dataset, objective set) pair in run order, probe cells last per dataset.
struct CellKey {
  std::string dataset;
  std::vector<Objective> objectives;
  bool probe = false;
};
std::vector<CellKey> plan_cells(const ExperimentPlan& plan);
RunConfig cell_config(const ExperimentPlan& plan, const CellKey& cell, std::size_t repetition);

struct RepetitionRow {
  std::string dataset;
  std::vector<Objective> objectives;
  bool probe = false;
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  double rules_rks = 0;
  double rules_hks = 0;
  double cpu_time_ms = 0;
  double accuracy = 0;
  double train_accuracy = 0;
  std::vector<FrontMember> front;
};

struct Summary {
  double mean = 0;
  /// Sample standard deviation; 0 for a single row.
  double sd = 0;
};

Summary summarize(const std::vector<double>& values);

struct CellSummary {
  std::string dataset;
  std::vector<Objective> objectives;
  bool probe = false;
  std::size_t rows = 0;
  Summary rules_rks;
  Summary rules_hks;
  Summary cpu_time_ms;
  Summary accuracy;
  Summary train_accuracy;
};

struct ExperimentReport {
  ExperimentPlan plan;
  std::vector<CellSummary> cells;
  std::vector<RepetitionRow> rows;
};

/// Groups rows by (dataset, objective set) in first-seen order.
std::vector<CellSummary> aggregate(const std::vector<RepetitionRow>& rows);

/// Thrown when a run fails; carries the rows completed before the failure.
class ExperimentError : public std::runtime_error {
 public:
  ExperimentError(const std::string& message, ExperimentReport partial)
      : std::runtime_error(message), partial_(std::move(partial)) {}
  const ExperimentReport& partial() const { return partial_; }

 private:
  ExperimentReport partial_;
};

using RowObserver = std::function<void(const RepetitionRow&, std::size_t done, std::size_t total)>;

/// Repetitions may run in parallel; rows and cells come back in plan order regardless.
ExperimentReport run_plan(const ExperimentPlan& plan, const RowObserver& observer = {});

struct TrendVerdict {
  std::string dataset;
  /// Mean HKS count strictly decreases across increasing objective counts.
  bool hks_decreases = false;
  /// Mean accuracy at four objectives is at least every other cell's.
  bool accuracy_peaks_at_four = false;
  /// Iris: more RKS rules at the largest objective count than at the smallest. Others: fewer.
  bool rks_trend = false;
};

class CoverageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Probe cells are ignored. Throws CoverageError when a dataset has fewer
/// than two objective-set sizes.
std::vector<TrendVerdict> trend_check(const ExperimentReport& report);

/// `timing` includes cpu_time_ms fields.
nlohmann::json to_json(const ExperimentReport& report, bool timing = true);
nlohmann::json to_json(const std::vector<TrendVerdict>& verdicts);
/// Plain-text table with one line per cell.
std::string render_table(const ExperimentReport& report);
/// One line per final dominator: dataset, objective count, repetition, rule id, metric values.
std::string front_csv(const ExperimentReport& report);

/// Reference averages for iris, ljb and wbc at 2, 4 and 5 objectives (means only,
/// no raw rows). trend_check on it is all-true.
ExperimentReport reference_report();

}  // namespace carm
