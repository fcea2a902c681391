#include "carm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

namespace carm {

using nlohmann::json;

namespace {

std::vector<std::vector<Objective>> default_objective_sets() {
  return {parse_objective_list("coverage,confidence"),
          parse_objective_list("coverage,confidence,interest,surprise"),
          parse_objective_list("coverage,confidence,interest,surprise,rule_difference")};
}

std::vector<Objective> objectives_from(const json& j) {
  if (j.is_string()) return parse_objective_list(j.get<std::string>());
  std::vector<Objective> out;
  for (const auto& item : j) out.push_back(parse_objective(item.get<std::string>()));
  return out;
}

json objectives_to_json(const std::vector<Objective>& objectives) {
  json out = json::array();
  for (const auto& o : objectives) out.push_back(to_string(o));
  return out;
}

bool same_cell(const RepetitionRow& row, const CellSummary& cell) {
  return row.dataset == cell.dataset && row.objectives == cell.objectives && row.probe == cell.probe;
}

}  // namespace

std::vector<Objective> six_objective_set() {
  return parse_objective_list(
      "coverage,confidence,interest,surprise,rule_difference,rule_difference:min");
}

std::vector<FieldError> validate(const ExperimentPlan& plan) {
  std::vector<FieldError> errors;
  if (plan.repetitions < 1) errors.push_back({"repetitions", "must be at least 1"});
  if (plan.objective_sets.empty()) errors.push_back({"objective_sets", "must not be empty"});
  for (std::size_t i = 0; i < plan.objective_sets.size(); ++i) {
    if (plan.objective_sets[i].empty()) {
      errors.push_back({"objective_sets[" + std::to_string(i) + "]", "must not be empty"});
    }
  }
  if (plan.datasets.empty()) errors.push_back({"datasets", "must not be empty"});
  for (const auto& name : plan.datasets) {
    if (!is_preset(name) && !std::filesystem::exists(name)) {
      errors.push_back({"datasets", "unknown preset or missing file: '" + name + "'"});
    }
  }
  for (const auto& [name, doc] : plan.dataset_overrides) {
    if (std::find(plan.datasets.begin(), plan.datasets.end(), name) == plan.datasets.end()) {
      errors.push_back({"dataset_overrides", "'" + name + "' is not in datasets"});
    }
    if (!doc.is_object()) errors.push_back({"dataset_overrides", "'" + name + "' must be an object"});
  }
  if (!plan.overrides.is_object()) errors.push_back({"overrides", "must be an object"});
  if (!errors.empty()) return errors;

  // Surface configuration problems before any run starts.
  for (const auto& cell : plan_cells(plan)) {
    try {
      const auto config = cell_config(plan, cell, 0);
      for (auto e : validate(config)) {
        e.field = cell.dataset + "." + e.field;
        errors.push_back(std::move(e));
      }
    } catch (const ConfigError& e) {
      for (auto fe : e.errors()) {
        fe.field = cell.dataset + "." + fe.field;
        errors.push_back(std::move(fe));
      }
    }
  }
  return errors;
}

ExperimentPlan plan_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError(std::vector<FieldError>{{"plan", "expected a JSON object"}});
  ExperimentPlan plan;
  plan.objective_sets.clear();
  std::vector<FieldError> errors;
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "datasets") {
        plan.datasets = value.is_string() ? std::vector<std::string>{value.get<std::string>()}
                                          : value.get<std::vector<std::string>>();
      } else if (key == "objective_sets") {
        for (const auto& set : value) plan.objective_sets.push_back(objectives_from(set));
      } else if (key == "repetitions") {
        const auto r = value.get<std::int64_t>();
        if (r < 1) {
          errors.push_back({key, "must be at least 1"});
        } else {
          plan.repetitions = static_cast<std::size_t>(r);
        }
      } else if (key == "base_seed") {
        plan.base_seed = value.get<std::uint64_t>();
      } else if (key == "overrides") {
        plan.overrides = value;
      } else if (key == "dataset_overrides") {
        for (const auto& [name, o] : value.items()) plan.dataset_overrides[name] = o;
      } else if (key == "six_objective_probe") {
        plan.six_objective_probe = value.get<bool>();
      } else if (key == "threads") {
        plan.threads = value.get<unsigned>();
      } else {
        errors.push_back({key, "unknown plan key"});
      }
    } catch (const std::exception& e) {
      errors.push_back({key, e.what()});
    }
  }
  if (!doc.contains("objective_sets")) plan.objective_sets = default_objective_sets();
  if (!errors.empty()) throw ConfigError(std::move(errors));
  if (auto v = validate(plan); !v.empty()) throw ConfigError(std::move(v));
  return plan;
}

json to_json(const ExperimentPlan& plan) {
  json sets = json::array();
  for (const auto& s : plan.objective_sets) sets.push_back(objectives_to_json(s));
  json per_dataset = json::object();
  for (const auto& [name, o] : plan.dataset_overrides) per_dataset[name] = o;
  return {{"datasets", plan.datasets},
          {"objective_sets", std::move(sets)},
          {"repetitions", plan.repetitions},
          {"base_seed", plan.base_seed},
          {"overrides", plan.overrides},
          {"dataset_overrides", std::move(per_dataset)},
          {"six_objective_probe", plan.six_objective_probe},
          {"threads", plan.threads}};
}

std::vector<CellKey> plan_cells(const ExperimentPlan& plan) {
  std::vector<CellKey> cells;
  for (const auto& name : plan.datasets) {
    for (const auto& set : plan.objective_sets) cells.push_back({name, set, false});
    if (plan.six_objective_probe) cells.push_back({name, six_objective_set(), true});
  }
  return cells;
}

RunConfig cell_config(const ExperimentPlan& plan, const CellKey& cell, std::size_t repetition) {
  RunConfig base;
  if (is_preset(cell.dataset)) {
    base = preset_config(cell.dataset);
  } else {
    base.dataset = cell.dataset;
  }
  auto config = run_config_from_json(plan.overrides, base);
  if (auto it = plan.dataset_overrides.find(cell.dataset); it != plan.dataset_overrides.end()) {
    config = run_config_from_json(it->second, config);
  }
  config.objectives = cell.objectives;
  config.rng_seed = plan.base_seed + repetition;
  return config;
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  double sum = 0;
  for (const double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0;
    for (const double v : values) sq += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::vector<CellSummary> aggregate(const std::vector<RepetitionRow>& rows) {
  std::vector<CellSummary> cells;
  for (const auto& row : rows) {
    const bool known = std::any_of(cells.begin(), cells.end(),
                                   [&](const CellSummary& c) { return same_cell(row, c); });
    if (known) continue;
    CellSummary cell;
    cell.dataset = row.dataset;
    cell.objectives = row.objectives;
    cell.probe = row.probe;
    cells.push_back(std::move(cell));
  }
  for (auto& cell : cells) {
    std::vector<double> rks, hks, time, acc, train;
    for (const auto& row : rows) {
      if (!same_cell(row, cell)) continue;
      rks.push_back(row.rules_rks);
      hks.push_back(row.rules_hks);
      time.push_back(row.cpu_time_ms);
      acc.push_back(row.accuracy);
      train.push_back(row.train_accuracy);
    }
    cell.rows = rks.size();
    cell.rules_rks = summarize(rks);
    cell.rules_hks = summarize(hks);
    cell.cpu_time_ms = summarize(time);
    cell.accuracy = summarize(acc);
    cell.train_accuracy = summarize(train);
  }
  return cells;
}

ExperimentReport run_plan(const ExperimentPlan& plan, const RowObserver& observer) {
  if (auto errors = validate(plan); !errors.empty()) throw ConfigError(std::move(errors));

  const auto cells = plan_cells(plan);
  struct Job {
    std::size_t cell;
    std::size_t repetition;
    RunConfig config;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t r = 0; r < plan.repetitions; ++r) {
      jobs.push_back({c, r, cell_config(plan, cells[c], r)});
    }
  }

  std::map<std::string, Dataset> datasets;
  for (const auto& job : jobs) {
    if (!datasets.count(job.config.dataset)) datasets.emplace(job.config.dataset, load_dataset(job.config));
  }

  std::vector<std::optional<RepetitionRow>> slots(jobs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex mu;
  std::string failure;
  std::size_t done = 0;

  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      const auto& job = jobs[i];
      try {
        const auto result = run(job.config, datasets.at(job.config.dataset));
        RepetitionRow row;
        row.dataset = cells[job.cell].dataset;
        row.objectives = cells[job.cell].objectives;
        row.probe = cells[job.cell].probe;
        row.repetition = job.repetition;
        row.seed = job.config.rng_seed;
        row.rules_rks = static_cast<double>(result.rks_count);
        row.rules_hks = static_cast<double>(result.hks_count);
        row.cpu_time_ms = result.wall_time_ms;
        row.accuracy = result.accuracy;
        row.train_accuracy = result.train_accuracy;
        row.front = result.final_front;
        std::lock_guard lock(mu);
        slots[i] = std::move(row);
        ++done;
        if (observer) observer(*slots[i], done, jobs.size());
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        if (!failed.exchange(true)) {
          failure = cells[job.cell].dataset + " repetition " + std::to_string(job.repetition) + ": " + e.what();
        }
      }
    }
  };

  unsigned threads = plan.threads ? plan.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs.size()));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  ExperimentReport report;
  report.plan = plan;
  for (auto& slot : slots) {
    if (slot) report.rows.push_back(std::move(*slot));
  }
  report.cells = aggregate(report.rows);
  if (failed) throw ExperimentError(failure, std::move(report));
  return report;
}

std::vector<TrendVerdict> trend_check(const ExperimentReport& report) {
  std::vector<std::string> order;
  std::map<std::string, std::map<std::size_t, const CellSummary*>> by_size;
  for (const auto& cell : report.cells) {
    if (cell.probe) continue;
    if (!by_size.count(cell.dataset)) order.push_back(cell.dataset);
    auto& slot = by_size[cell.dataset][cell.objectives.size()];
    if (slot) {
      throw CoverageError("dataset '" + cell.dataset + "' has two cells with " +
                          std::to_string(cell.objectives.size()) + " objectives");
    }
    slot = &cell;
  }
  if (order.empty()) throw CoverageError("report has no cells");

  std::vector<TrendVerdict> verdicts;
  for (const auto& name : order) {
    const auto& sizes = by_size[name];
    if (sizes.size() < 2) {
      throw CoverageError("dataset '" + name + "' needs at least two objective-set sizes");
    }
    TrendVerdict v;
    v.dataset = name;

    v.hks_decreases = true;
    const CellSummary* prev = nullptr;
    for (const auto& [size, cell] : sizes) {
      if (prev && !(cell->rules_hks.mean < prev->rules_hks.mean)) v.hks_decreases = false;
      prev = cell;
    }

    if (auto it = sizes.find(4); it != sizes.end()) {
      v.accuracy_peaks_at_four = std::all_of(sizes.begin(), sizes.end(), [&](const auto& entry) {
        return it->second->accuracy.mean >= entry.second->accuracy.mean;
      });
    }

    const double first = sizes.begin()->second->rules_rks.mean;
    const double last = sizes.rbegin()->second->rules_rks.mean;
    v.rks_trend = name == "iris" ? last > first : last < first;
    verdicts.push_back(std::move(v));
  }
  return verdicts;
}

namespace {

json summary_json(const Summary& s) { return {{"mean", s.mean}, {"sd", s.sd}}; }

json front_json(const std::vector<FrontMember>& front, const std::vector<Objective>& objectives) {
  json out = json::array();
  for (const auto& m : front) {
    json values = json::array();
    for (std::size_t i = 0; i < objectives.size() && i < m.metrics.size(); ++i) {
      values.push_back(natural_value(objectives[i], m.metrics[i]));
    }
    out.push_back({{"rule_id", m.id.value}, {"metrics", std::move(values)}});
  }
  return out;
}

}  // namespace

json to_json(const ExperimentReport& report, bool timing) {
  json cells = json::array();
  for (const auto& c : report.cells) {
    json entry = {{"dataset", c.dataset},
                  {"objectives", objectives_to_json(c.objectives)},
                  {"objective_count", c.objectives.size()},
                  {"probe", c.probe},
                  {"rows", c.rows},
                  {"rules_rks", summary_json(c.rules_rks)},
                  {"rules_hks", summary_json(c.rules_hks)},
                  {"accuracy", summary_json(c.accuracy)},
                  {"train_accuracy", summary_json(c.train_accuracy)}};
    if (timing) entry["cpu_time_ms"] = summary_json(c.cpu_time_ms);
    cells.push_back(std::move(entry));
  }
  json rows = json::array();
  for (const auto& r : report.rows) {
    json entry = {{"dataset", r.dataset},
                  {"objectives", objectives_to_json(r.objectives)},
                  {"probe", r.probe},
                  {"repetition", r.repetition},
                  {"seed", r.seed},
                  {"rules_rks", r.rules_rks},
                  {"rules_hks", r.rules_hks},
                  {"accuracy", r.accuracy},
                  {"train_accuracy", r.train_accuracy},
                  {"front", front_json(r.front, r.objectives)}};
    if (timing) entry["cpu_time_ms"] = r.cpu_time_ms;
    rows.push_back(std::move(entry));
  }
  json doc = {{"plan", to_json(report.plan)}, {"cells", std::move(cells)}, {"rows", std::move(rows)}};
  try {
    doc["trends"] = to_json(trend_check(report));
  } catch (const CoverageError& e) {
    doc["trends"] = nullptr;
    doc["trends_error"] = e.what();
  }
  return doc;
}

json to_json(const std::vector<TrendVerdict>& verdicts) {
  json out = json::array();
  for (const auto& v : verdicts) {
    out.push_back({{"dataset", v.dataset},
                   {"hks_decreases", v.hks_decreases},
                   {"accuracy_peaks_at_four", v.accuracy_peaks_at_four},
                   {"rks_trend", v.rks_trend}});
  }
  return out;
}

std::string render_table(const ExperimentReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-8s %10s %16s %16s %20s %16s\n", "dataset", "objectives",
                "rules (RKS)", "rules (HKS)", "time ms", "accuracy %");
  out += line;
  std::string last;
  for (const auto& c : report.cells) {
    const std::string name = c.dataset == last ? "" : c.dataset;
    last = c.dataset;
    std::string count = std::to_string(c.objectives.size());
    if (c.probe) count += "*";
    std::snprintf(line, sizeof line, "%-8s %10s %8.1f ±%6.1f %8.2f ±%6.2f %11.1f ±%7.1f %7.2f ±%6.2f\n",
                  name.c_str(), count.c_str(), c.rules_rks.mean, c.rules_rks.sd, c.rules_hks.mean,
                  c.rules_hks.sd, c.cpu_time_ms.mean, c.cpu_time_ms.sd, 100 * c.accuracy.mean,
                  100 * c.accuracy.sd);
    out += line;
  }
  if (std::any_of(report.cells.begin(), report.cells.end(), [](const auto& c) { return c.probe; })) {
    out += "* six-objective probe, excluded from trends\n";
  }
  if (!report.rows.empty()) {
    std::snprintf(line, sizeof line, "means over %zu repetitions per cell; time is wall clock\n",
                  report.plan.repetitions);
    out += line;
  }
  try {
    const auto verdicts = trend_check(report);
    out += "\ntrends              hks_decreases  accuracy_peaks_at_four  rks_trend\n";
    for (const auto& v : verdicts) {
      std::snprintf(line, sizeof line, "%-19s %-14s %-23s %s\n", v.dataset.c_str(),
                    v.hks_decreases ? "yes" : "no", v.accuracy_peaks_at_four ? "yes" : "no",
                    v.rks_trend ? "yes" : "no");
      out += line;
    }
  } catch (const CoverageError& e) {
    out += std::string("\ntrends unavailable: ") + e.what() + "\n";
  }
  return out;
}

std::string front_csv(const ExperimentReport& report) {
  const Metric columns[] = {Metric::coverage, Metric::confidence, Metric::interest, Metric::surprise,
                            Metric::rule_difference};
  std::string out = "dataset,objective_count,probe,repetition,rule_id";
  for (const auto m : columns) out += "," + std::string(to_string(m));
  out += "\n";
  char buf[64];
  for (const auto& row : report.rows) {
    for (const auto& member : row.front) {
      out += row.dataset + "," + std::to_string(row.objectives.size()) + "," +
             (row.probe ? "1" : "0") + "," + std::to_string(row.repetition) + "," +
             std::to_string(member.id.value);
      for (const auto m : columns) {
        out += ",";
        for (std::size_t i = 0; i < row.objectives.size() && i < member.metrics.size(); ++i) {
          if (row.objectives[i].metric != m) continue;
          std::snprintf(buf, sizeof buf, "%.17g", natural_value(row.objectives[i], member.metrics[i]));
          out += buf;
          break;
        }
      }
      out += "\n";
    }
  }
  return out;
}

ExperimentReport reference_report() {
  struct Line {
    const char* dataset;
    const char* objectives;
    double rks, hks, time, accuracy;
  };
  static const Line lines[] = {
      {"iris", "coverage,confidence", 91.7, 6.6, 1472.5, 0.958},
      {"iris", "coverage,confidence,interest,surprise", 95.3, 5.8, 2023.5, 0.968},
      {"iris", "coverage,confidence,interest,surprise,rule_difference", 95.7, 1.58, 2726.7, 0.928},
      {"ljb", "coverage,confidence", 134.8, 6.6, 7295.5, 0.9468},
      {"ljb", "coverage,confidence,interest,surprise", 125.2, 2.1, 2906.9, 0.9513},
      {"ljb", "coverage,confidence,interest,surprise,rule_difference", 115.1, 1.4, 2511.0, 0.6344},
      {"wbc", "coverage,confidence", 317.5, 16.2, 13154.0, 0.9487},
      {"wbc", "coverage,confidence,interest,surprise", 211, 11.5, 11710.0, 0.9518},
      {"wbc", "coverage,confidence,interest,surprise,rule_difference", 214.6, 3.1, 10285.1, 0.9355},
  };
  ExperimentReport report;
  report.plan.objective_sets = default_objective_sets();
  for (const auto& l : lines) {
    CellSummary c;
    c.dataset = l.dataset;
    c.objectives = parse_objective_list(l.objectives);
    c.rows = 10;
    c.rules_rks.mean = l.rks;
    c.rules_hks.mean = l.hks;
    c.cpu_time_ms.mean = l.time;
    c.accuracy.mean = l.accuracy;
    report.cells.push_back(std::move(c));
  }
  return report;
}

}  // namespace carm
