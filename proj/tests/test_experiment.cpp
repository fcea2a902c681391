#include <doctest.h>

#include <cmath>
#include <numeric>

#include "carm/experiment.hpp"

using namespace carm;

namespace {

ExperimentPlan tiny_plan() {
  ExperimentPlan plan;
  plan.datasets = {"iris"};
  plan.objective_sets = {parse_objective_list("coverage,confidence")};
  plan.repetitions = 1;
  plan.overrides = {{"generations", 4}, {"population_size", 40}};
  return plan;
}

RepetitionRow row(const std::string& dataset, std::size_t objectives, double rks, double hks,
                  double acc) {
  RepetitionRow r;
  r.dataset = dataset;
  r.objectives.assign(objectives, Objective{});
  for (std::size_t i = 0; i < objectives; ++i) r.objectives[i].metric = static_cast<Metric>(i % 5);
  r.rules_rks = rks;
  r.rules_hks = hks;
  r.accuracy = acc;
  return r;
}

ExperimentReport report_of(std::vector<RepetitionRow> rows) {
  ExperimentReport r;
  r.rows = std::move(rows);
  r.cells = aggregate(r.rows);
  return r;
}

}  // namespace

TEST_CASE("summary uses the sample standard deviation") {
  const auto s = summarize({2, 4, 4, 4, 5, 5, 7, 9});
  CHECK(s.mean == 5);
  CHECK(s.sd == doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(summarize({3.5}).sd == 0);
  CHECK(summarize({3.5}).mean == 3.5);
}

TEST_CASE("aggregate recomputes from raw rows") {
  std::vector<RepetitionRow> rows;
  for (int i = 0; i < 7; ++i) rows.push_back(row("iris", 2, 90 + i, 6 - 0.3 * i, 0.9 + 0.01 * i));
  for (int i = 0; i < 5; ++i) rows.push_back(row("ljb", 4, 120 + 2 * i, 3 + i, 0.7));
  const auto cells = aggregate(rows);
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].dataset == "iris");
  CHECK(cells[0].rows == 7);
  CHECK(cells[1].rows == 5);
  std::vector<double> rks;
  for (int i = 0; i < 7; ++i) rks.push_back(rows[i].rules_rks);
  const double mean = std::accumulate(rks.begin(), rks.end(), 0.0) / 7;
  double ss = 0;
  for (double x : rks) ss += (x - mean) * (x - mean);
  CHECK(cells[0].rules_rks.mean == doctest::Approx(mean).epsilon(1e-15));
  CHECK(cells[0].rules_rks.sd == doctest::Approx(std::sqrt(ss / 6)).epsilon(1e-15));
  CHECK(cells[1].accuracy.sd == doctest::Approx(0.0));
}

TEST_CASE("reference numbers pass every trend") {
  const auto verdicts = trend_check(reference_report());
  REQUIRE(verdicts.size() == 3);
  for (const auto& v : verdicts) {
    CHECK(v.hks_decreases);
    CHECK(v.accuracy_peaks_at_four);
    CHECK(v.rks_trend);
  }
}

TEST_CASE("trend_check coverage errors") {
  CHECK_THROWS_AS(trend_check(report_of({row("iris", 2, 1, 1, 1)})), CoverageError);
  CHECK_THROWS_AS(trend_check(ExperimentReport{}), CoverageError);
  // Two different objective sets of the same size.
  auto other = row("iris", 2, 1, 1, 1);
  other.objectives[1].metric = Metric::interest;
  CHECK_THROWS_AS(trend_check(report_of({row("iris", 2, 1, 1, 1), other, row("iris", 4, 1, 1, 1)})),
                  CoverageError);
}

TEST_CASE("a constant report fails the strict trends") {
  std::vector<RepetitionRow> rows;
  for (const char* d : {"iris", "ljb"}) {
    for (std::size_t k : {2u, 4u, 5u}) rows.push_back(row(d, k, 10, 3, 0.9));
  }
  for (const auto& v : trend_check(report_of(rows))) {
    CHECK_FALSE(v.hks_decreases);
    CHECK_FALSE(v.rks_trend);
    CHECK(v.accuracy_peaks_at_four);
  }
}

TEST_CASE("probe cells stay out of the verdicts") {
  std::vector<RepetitionRow> rows{row("wbc", 2, 300, 16, 0.94), row("wbc", 5, 200, 3, 0.93)};
  auto probe = row("wbc", 6, 1, 100, 0.1);
  probe.probe = true;
  rows.push_back(probe);
  const auto v = trend_check(report_of(rows));
  REQUIRE(v.size() == 1);
  CHECK(v[0].hks_decreases);
  CHECK(v[0].rks_trend);
  // No four-objective cell to peak at.
  CHECK_FALSE(v[0].accuracy_peaks_at_four);
}

TEST_CASE("plan JSON") {
  const auto plan = plan_from_json({{"datasets", {"iris", "wbc"}}, {"repetitions", 3}});
  CHECK(plan.objective_sets.size() == 3);
  CHECK(plan.objective_sets[2].size() == 5);
  CHECK(plan_from_json(to_json(plan)).repetitions == 3);
  CHECK(to_json(plan_from_json(to_json(plan))) == to_json(plan));
  CHECK_THROWS_AS(plan_from_json({{"repeats", 3}}), ConfigError);
  CHECK_THROWS_AS(plan_from_json({{"repetitions", 0}}), ConfigError);
  CHECK_THROWS_AS(plan_from_json({{"datasets", {"mushroom"}}}), ConfigError);
  CHECK_THROWS_AS(plan_from_json({{"overrides", {{"population_size", 1}}}}), ConfigError);
  CHECK(six_objective_set().size() == 6);
}

TEST_CASE("cells and seeds follow the plan") {
  auto plan = tiny_plan();
  plan.datasets = {"iris", "ljb"};
  plan.objective_sets.push_back(parse_objective_list("coverage,confidence,interest,surprise"));
  plan.six_objective_probe = true;
  plan.dataset_overrides["ljb"] = {{"population_size", 30}};
  const auto cells = plan_cells(plan);
  REQUIRE(cells.size() == 6);
  CHECK(cells[0].dataset == "iris");
  CHECK(cells[2].probe);
  CHECK(cells[2].objectives.size() == 6);
  CHECK(cells[3].dataset == "ljb");
  const auto c = cell_config(plan, cells[4], 2);
  CHECK(c.rng_seed == plan.base_seed + 2);
  CHECK(c.population_size == 30);
  CHECK(c.generations == 4);
  CHECK(c.objectives.size() == 4);
}

TEST_CASE("one repetition aggregates to itself") {
  const auto report = run_plan(tiny_plan());
  REQUIRE(report.rows.size() == 1);
  REQUIRE(report.cells.size() == 1);
  const auto& r = report.rows[0];
  const auto& c = report.cells[0];
  CHECK(c.rules_rks.mean == r.rules_rks);
  CHECK(c.rules_hks.mean == r.rules_hks);
  CHECK(c.accuracy.mean == r.accuracy);
  CHECK(c.rules_rks.sd == 0);
  CHECK(r.seed == 1);
  CHECK(r.rules_hks == double(r.front.size()));
}

TEST_CASE("reports are reproducible regardless of thread count") {
  auto plan = tiny_plan();
  plan.repetitions = 3;
  plan.objective_sets.push_back(parse_objective_list("coverage,confidence,interest,surprise"));
  plan.threads = 1;
  const auto serial = to_json(run_plan(plan), false);
  plan.threads = 4;
  std::size_t calls = 0;
  const auto parallel = to_json(run_plan(plan, [&](const RepetitionRow&, std::size_t done, std::size_t total) {
                                  ++calls;
                                  CHECK(done <= total);
                                }),
                                false);
  auto without_threads = [](nlohmann::json doc) {
    doc["plan"].erase("threads");
    return doc;
  };
  CHECK(without_threads(serial) == without_threads(parallel));
  CHECK(calls == 6);
  CHECK(serial.at("trends").is_array());
}

TEST_CASE("table and csv renderings") {
  auto plan = tiny_plan();
  plan.objective_sets.push_back(parse_objective_list("coverage,confidence,interest,surprise"));
  const auto report = run_plan(plan);
  const auto table = render_table(report);
  CHECK(table.find("iris") != std::string::npos);
  const auto csv = front_csv(report);
  CHECK(csv.rfind("dataset,objective_count,probe,repetition,rule_id", 0) == 0);
  std::size_t lines = 0;
  for (char ch : csv) lines += ch == '\n';
  std::size_t members = 0;
  for (const auto& r : report.rows) members += r.front.size();
  CHECK(lines == members + 1);
}
