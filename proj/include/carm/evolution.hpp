#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <stop_token>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "carm/belief_space.hpp"
#include "carm/classifier.hpp"
#include "carm/dataset.hpp"
#include "carm/random.hpp"
#include "carm/rule_model.hpp"

namespace carm {

enum class AgentTrait { risk_taker, imitator, cautious };

std::string_view to_string(AgentTrait trait);

struct AgentPool {
  int risk_takers = 3;
  int imitators = 3;
  int cautious = 3;

  int total() const { return risk_takers + imitators + cautious; }
  /// One entry per agent: risk takers first, then imitators, then cautious.
  std::vector<AgentTrait> roster() const;
  bool operator==(const AgentPool&) const = default;
};

struct RunConfig {
  std::size_t population_size = 200;
  std::size_t generations = 50;
  double crossover_rate = 0.8;
  double mutation_rate = 0.2;
  std::vector<Objective> objectives{{Metric::coverage}, {Metric::confidence}};
  /// Empty pattern means all wildcards for the loaded dataset.
  RuleSchema schema;
  AgentPool agents;
  std::uint64_t rng_seed = 42;
  /// Preset name or CSV path.
  std::string dataset = "iris";
  /// Preset schema applied to a CSV path; empty infers an all-nominal schema.
  std::string schema_preset;
  double train_fraction = 0.8;
  /// False trains and tests on the full dataset (resubstitution).
  bool holdout = true;
  double match_threshold = 0.75;
  bool strict_match = false;
  bool tks_count_matches = false;
  /// Dominated DKS entries kept; 0 means twice the population size.
  std::size_t dks_capacity = 0;
  /// Agents return the nondominated offspring of each consequent class
  /// rather than of the whole offspring set.
  bool class_wise_best = false;
  RuleSetMode ruleset = RuleSetMode::class_fronts;

  std::size_t effective_dks_capacity() const {
    return dks_capacity == 0 ? 2 * population_size : dks_capacity;
  }
};

struct FieldError {
  std::string field;
  std::string message;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<FieldError> errors);
  const std::vector<FieldError>& errors() const { return errors_; }

 private:
  std::vector<FieldError> errors_;
};

std::vector<FieldError> validate(const RunConfig& config);
/// Layout checks that need the loaded dataset (schema width, attribute count).
std::vector<FieldError> validate(const RunConfig& config, const Dataset& dataset);

nlohmann::json to_json(const RunConfig& config);
/// Overlays `doc` on `base`. Unknown keys and malformed values raise ConfigError.
RunConfig run_config_from_json(const nlohmann::json& doc, RunConfig base = {});
/// Table 1 parameters for a preset dataset.
RunConfig preset_config(std::string_view dataset);

Dataset load_dataset(const RunConfig& config);

// Reproduction operators.
std::vector<Chromosome> seed_population(const RunConfig& config, const NormativeKS& nks, Rng& rng);
std::pair<Chromosome, Chromosome> select_parents(AgentTrait trait, const BeliefSpace& beliefs,
                                                 Rng& rng);
/// Children swap every slot from `point` onward, class included. 1 <= point < genes.size().
std::pair<Chromosome, Chromosome> crossover_at(const Chromosome& p1, const Chromosome& p2,
                                               std::size_t point);
std::pair<Chromosome, Chromosome> crossover(const Chromosome& p1, const Chromosome& p2, Rng& rng);
Chromosome mutate_at(const Chromosome& c, std::size_t slot, const NormativeKS& nks, Rng& rng);
Chromosome mutate(const Chromosome& c, const NormativeKS& nks, Rng& rng);

/// Offspring per agent: equal shares of `total`, remainder round-robin from the first agent.
std::vector<std::size_t> agent_quotas(std::size_t total, std::size_t agents);

struct Generation {
  std::size_t index = 0;
  std::vector<Chromosome> population;
  std::vector<MetricVector> evaluations;
  std::vector<RuleId> front_ids;
  std::size_t accepted = 0;
  std::size_t rks_size = 0;
  double wall_time_ms = 0;
};

struct FrontMember {
  RuleId id;
  Chromosome rule;
  MetricVector metrics;
};

struct GenerationRecord {
  std::size_t index = 0;
  std::size_t distinct_offspring = 0;
  std::size_t accepted = 0;
  std::size_t rks_size = 0;
  std::vector<RuleId> front;
  double wall_time_ms = 0;
};

struct RunResult {
  RunConfig config;
  std::string dataset;
  std::size_t generations_completed = 0;
  bool stopped = false;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::vector<GenerationRecord> generations;
  std::vector<FrontMember> final_front;
  std::vector<FrontMember> ruleset;
  /// Distinct rules accepted into the rule knowledge source.
  std::size_t rks_count = 0;
  /// Dominators held in the history knowledge source when the run ends.
  std::size_t hks_count = 0;
  std::size_t front_size = 0;
  /// Distinct rules that were dominators in any generation.
  std::size_t history_rules = 0;
  double accuracy = 0;
  double train_accuracy = 0;
  double wall_time_ms = 0;
};

/// `timing` adds wall-clock fields, which breaks byte-level reproducibility.
nlohmann::json to_json(const RunResult& result, bool timing = false);

/// Generation-boundary view handed to observers.
struct GenerationEvent {
  const Generation& generation;
  const BeliefSpace& beliefs;
  double elapsed_ms = 0;
};

using RunObserver = std::function<void(const GenerationEvent&)>;

/// State of one run: split, belief space, agent streams, evaluation cache.
class Engine {
 public:
  Engine(RunConfig config, const Dataset& dataset);

  /// Runs the next generation. Generation 0 evaluates the seeded population.
  const Generation& step();
  bool done() const { return next_index_ >= config_.generations; }
  std::size_t completed() const { return next_index_; }

  RunResult finish(bool stopped) const;
  /// Every rule in the rule knowledge source with its metric vector, by id.
  std::vector<FrontMember> all_rules() const;

  const BeliefSpace& beliefs() const { return beliefs_; }
  const RunConfig& config() const { return config_; }
  const Dataset& dataset() const { return dataset_; }
  std::span<const Row> train_rows() const { return train_; }
  std::span<const Row> test_rows() const { return test_; }

 private:
  const MetricVector& evaluate_cached(const Chromosome& rule);
  std::vector<Candidate> best_of(std::span<const Chromosome> offspring);
  std::vector<Chromosome> reproduce(AgentTrait trait, std::size_t quota, Rng& rng);

  RunConfig config_;
  const Dataset& dataset_;
  std::vector<Row> train_;
  std::vector<Row> test_;
  BeliefSpace beliefs_;
  Rng seeding_rng_;
  std::vector<AgentTrait> roster_;
  std::vector<Rng> agent_rngs_;
  std::map<Chromosome, MetricVector> cache_;
  std::size_t next_index_ = 0;
  Generation last_;
  std::vector<GenerationRecord> records_;
  double elapsed_ms_ = 0;
};

RunResult run(const RunConfig& config, const Dataset& dataset, const RunObserver& observer = {},
              std::stop_token stop = {});

}  // namespace carm
