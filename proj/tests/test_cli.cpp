#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "carm/cli.hpp"

using namespace carm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "carm-cli-tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("rules render with interval labels") {
  const auto iris = load_preset("iris");
  CHECK(render_rule(Chromosome{{1, 2, 1, 1}, 1}, iris) ==
        "IF sepal_length=(-inf,5.5] AND sepal_width=(2.8,3.7] AND petal_length=(-inf,3.0] AND "
        "petal_width=(-inf,0.8] THEN class=Iris-setosa");
  CHECK(render_rule(Chromosome{{3, 3, 3, 3}, 3}, iris).find("sepal_length=(6.8,+inf)") != std::string::npos);
  const auto wbc = load_preset("wbc");
  CHECK(render_rule(Chromosome{{1, 2, 3, 4, 5, 6, 7, 8, 9}, 4}, wbc).find("mitoses=9 THEN class=malignant") !=
        std::string::npos);
}

TEST_CASE("dataset description") {
  const auto doc = describe_dataset(load_preset("iris"));
  CHECK(doc["name"] == "iris");
  CHECK(doc["instances"] == 150);
  CHECK(doc["attributes"].size() == 4);
  CHECK(doc["attributes"][0]["values"].size() == 3);
  CHECK(doc["class_attribute"]["name"] == "class");
}

TEST_CASE("assignment parsing") {
  CHECK(parse_assignment("generations=20") == std::pair<std::string, nlohmann::json>{"generations", 20});
  CHECK(parse_assignment("dataset=iris").second == "iris");
  CHECK(parse_assignment("holdout=false").second == false);
  CHECK(parse_assignment("objectives=[\"coverage\"]").second.is_array());
  CHECK_THROWS(parse_assignment("generations"));
}

TEST_CASE("override precedence: preset, file, flags, then sets in order") {
  const auto dir = scratch("precedence");
  std::ofstream(dir / "cfg.json") << R"({"dataset":"ljb","generations":7,"mutation_rate":0.3,"rng_seed":5})";
  RunOptions o;
  o.config = dir / "cfg.json";
  auto c = resolve_run_config(o);
  CHECK(c.population_size == 300);
  CHECK(c.generations == 7);
  CHECK(c.rng_seed == 5);

  o.seed = 9;
  o.objectives = "coverage,confidence,interest";
  o.sets = {"generations=11", "mutation_rate=0.1", "generations=13"};
  c = resolve_run_config(o);
  CHECK(c.rng_seed == 9);
  CHECK(c.objectives.size() == 3);
  CHECK(c.generations == 13);
  CHECK(c.mutation_rate == 0.1);

  o.sets.push_back("rng_seed=77");
  CHECK(resolve_run_config(o).rng_seed == 77);

  RunOptions p;
  p.preset = "wbc";
  CHECK(resolve_run_config(p).population_size == 500);
  CHECK(resolve_run_config(p).dataset == "wbc");
}

TEST_CASE("configuration mistakes exit with 1") {
  const auto dir = scratch("errors");
  std::ostringstream out, err;
  RunOptions unknown;
  unknown.preset = "iris";
  unknown.sets = {"warp=9"};
  unknown.out = dir;
  CHECK(cmd_run(unknown, out, err) == exit_config_error);
  CHECK(err.str().find("warp") != std::string::npos);

  std::ofstream(dir / "bad.json") << "{ not json";
  RunOptions malformed;
  malformed.config = dir / "bad.json";
  malformed.out = dir;
  CHECK(cmd_run(malformed, out, err) == exit_config_error);

  RunOptions missing;
  missing.preset = "mushroom";
  missing.out = dir;
  CHECK(cmd_run(missing, out, err) == exit_config_error);

  std::ofstream(dir / "plan.json") << R"({"datasets":["iris","mushroom"]})";
  ExperimentOptions plan;
  plan.plan = dir / "plan.json";
  plan.out = dir;
  CHECK(cmd_experiment(plan, out, err) == exit_config_error);

  InspectOptions inspect;
  inspect.dataset = "mushroom";
  CHECK(cmd_inspect(inspect, out, err) == exit_config_error);
  CHECK_FALSE(fs::exists(dir / "run.json"));
}

TEST_CASE("run writes reproducible artifacts") {
  const auto a = scratch("run-a"), b = scratch("run-b");
  RunOptions o;
  o.preset = "iris";
  o.seed = 42;
  o.sets = {"generations=6", "population_size=50"};
  std::ostringstream out, err;
  o.out = a;
  REQUIRE(cmd_run(o, out, err) == exit_ok);
  o.out = b;
  REQUIRE(cmd_run(o, out, err) == exit_ok);
  for (const char* f : {"run.json", "rules.txt", "front.csv", "report.txt"}) CHECK(fs::exists(a / f));
  CHECK(slurp(a / "run.json") == slurp(b / "run.json"));
  CHECK(slurp(a / "rules.txt") == slurp(b / "rules.txt"));
  const auto doc = nlohmann::json::parse(slurp(a / "run.json"));
  CHECK(doc["config"]["rng_seed"] == 42);
  CHECK(doc["generations_completed"] == 6);
  CHECK(slurp(a / "front.csv").rfind("rule_id,coverage,confidence\n", 0) == 0);
  CHECK(out.str().find("dominators (HKS)") != std::string::npos);
}

TEST_CASE("inspect prints the discretization") {
  std::ostringstream out, err;
  InspectOptions o;
  o.dataset = "ljb";
  o.json = true;
  REQUIRE(cmd_inspect(o, out, err) == exit_ok);
  const auto doc = nlohmann::json::parse(out.str());
  CHECK(doc["instances"] == 277);
  std::ostringstream text;
  o.json = false;
  REQUIRE(cmd_inspect(o, text, err) == exit_ok);
  CHECK(text.str().find("inv_nodes") != std::string::npos);
}

TEST_CASE("experiment writes its report") {
  const auto dir = scratch("experiment");
  std::ofstream(dir / "plan.json") << R"({"datasets":["iris"],"repetitions":2,
    "objective_sets":[["coverage","confidence"],["coverage","confidence","interest","surprise"]],
    "overrides":{"generations":3,"population_size":30}})";
  ExperimentOptions o;
  o.plan = dir / "plan.json";
  o.sets = {"repetitions=1", "threads=1"};
  o.out = dir / "out";
  std::ostringstream out, err;
  REQUIRE(cmd_experiment(o, out, err) == exit_ok);
  const auto doc = nlohmann::json::parse(slurp(dir / "out" / "experiment.json"));
  CHECK(doc["rows"].size() == 2);
  CHECK(doc["plan"]["repetitions"] == 1);
  CHECK(fs::exists(dir / "out" / "report.txt"));
  CHECK(fs::exists(dir / "out" / "front.csv"));
}
