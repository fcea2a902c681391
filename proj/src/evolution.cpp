#include "carm/evolution.hpp"

#include <algorithm>
#include <chrono>
#include <set>

namespace carm {

using nlohmann::json;

std::string_view to_string(AgentTrait trait) {
  switch (trait) {
    case AgentTrait::risk_taker:
      return "risk_taker";
    case AgentTrait::imitator:
      return "imitator";
    case AgentTrait::cautious:
      return "cautious";
  }
  return "risk_taker";
}

std::vector<AgentTrait> AgentPool::roster() const {
  std::vector<AgentTrait> out;
  out.insert(out.end(), static_cast<std::size_t>(std::max(risk_takers, 0)), AgentTrait::risk_taker);
  out.insert(out.end(), static_cast<std::size_t>(std::max(imitators, 0)), AgentTrait::imitator);
  out.insert(out.end(), static_cast<std::size_t>(std::max(cautious, 0)), AgentTrait::cautious);
  return out;
}

namespace {

std::string describe(const std::vector<FieldError>& errors) {
  std::string msg = "invalid configuration";
  for (const auto& e : errors) msg += "; " + e.field + ": " + e.message;
  return msg;
}

json schema_to_json(const RuleSchema& schema) {
  if (schema.pattern.empty() && !schema.class_code) return "*";
  return to_text(schema);
}

RuleSchema schema_from_json(const json& j) {
  if (j.is_string()) {
    const auto text = j.get<std::string>();
    if (text.empty() || text == "*") return {};
    return parse_schema_text(text);
  }
  if (j.is_object()) {
    RuleSchema schema;
    for (const auto& slot : j.at("pattern")) {
      if (slot.is_string() && slot.get<std::string>() == "*") {
        schema.pattern.emplace_back();
      } else if (slot.is_null()) {
        schema.pattern.emplace_back();
      } else {
        schema.pattern.emplace_back(slot.get<Code>());
      }
    }
    if (auto it = j.find("class"); it != j.end() && !it->is_null() &&
                                   !(it->is_string() && it->get<std::string>() == "*")) {
      schema.class_code = it->get<Code>();
    }
    return schema;
  }
  throw std::invalid_argument("expected schema text or object");
}

std::vector<Objective> objectives_from_json(const json& j) {
  if (j.is_string()) return parse_objective_list(j.get<std::string>());
  std::vector<Objective> out;
  for (const auto& item : j) {
    if (item.is_string()) {
      out.push_back(parse_objective(item.get<std::string>()));
    } else {
      Objective o;
      o.metric = metric_from_string(item.at("metric").get<std::string>());
      if (auto it = item.find("orientation"); it != item.end()) {
        const auto dir = it->get<std::string>();
        if (dir == "minimize" || dir == "min") {
          o.orientation = Orientation::minimize;
        } else if (dir != "maximize" && dir != "max") {
          throw std::invalid_argument("unknown orientation '" + dir + "'");
        }
      }
      out.push_back(o);
    }
  }
  return out;
}

AgentPool agents_from_json(const json& j) {
  AgentPool pool;
  if (j.is_string()) {
    const auto text = j.get<std::string>();
    int r = 0, i = 0, c = 0;
    char extra = 0;
    if (std::sscanf(text.c_str(), "%d,%d,%d%c", &r, &i, &c, &extra) != 3) {
      throw std::invalid_argument("expected 'risk_takers,imitators,cautious'");
    }
    return AgentPool{r, i, c};
  }
  if (j.is_array()) {
    if (j.size() != 3) throw std::invalid_argument("expected three agent counts");
    return AgentPool{j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
  }
  for (const auto& [key, value] : j.items()) {
    if (key == "risk_takers") {
      pool.risk_takers = value.get<int>();
    } else if (key == "imitators") {
      pool.imitators = value.get<int>();
    } else if (key == "cautious") {
      pool.cautious = value.get<int>();
    } else {
      throw std::invalid_argument("unknown agent type '" + key + "'");
    }
  }
  return pool;
}

}  // namespace

ConfigError::ConfigError(std::vector<FieldError> errors)
    : std::runtime_error(describe(errors)), errors_(std::move(errors)) {}

std::vector<FieldError> validate(const RunConfig& c) {
  std::vector<FieldError> errors;
  if (c.population_size < 2) errors.push_back({"population_size", "must be at least 2"});
  if (c.generations < 1) errors.push_back({"generations", "must be at least 1"});
  if (!(c.crossover_rate >= 0.0 && c.crossover_rate <= 1.0)) {
    errors.push_back({"crossover_rate", "must lie in [0, 1]"});
  }
  if (!(c.mutation_rate >= 0.0 && c.mutation_rate <= 1.0)) {
    errors.push_back({"mutation_rate", "must lie in [0, 1]"});
  }
  if (c.objectives.empty()) errors.push_back({"objectives", "at least one metric is required"});
  for (std::size_t i = 0; i < c.objectives.size(); ++i) {
    for (std::size_t j = i + 1; j < c.objectives.size(); ++j) {
      if (c.objectives[i] == c.objectives[j]) {
        errors.push_back({"objectives", "duplicate objective " + to_string(c.objectives[i])});
      }
    }
  }
  if (c.agents.risk_takers < 0 || c.agents.imitators < 0 || c.agents.cautious < 0) {
    errors.push_back({"agents", "agent counts must be non-negative"});
  } else if (c.agents.total() < 1) {
    errors.push_back({"agents", "at least one agent is required"});
  }
  if (c.holdout && !(c.train_fraction > 0.0 && c.train_fraction < 1.0)) {
    errors.push_back({"train_fraction", "must lie in (0, 1)"});
  }
  if (!(c.match_threshold >= 0.0 && c.match_threshold <= 1.0)) {
    errors.push_back({"match_threshold", "must lie in [0, 1]"});
  }
  if (c.dataset.empty()) errors.push_back({"dataset", "a preset name or CSV path is required"});
  if (!c.schema_preset.empty() && !is_preset(c.schema_preset)) {
    errors.push_back({"schema_preset", "unknown preset '" + c.schema_preset + "'"});
  }
  return errors;
}

std::vector<FieldError> validate(const RunConfig& c, const Dataset& dataset) {
  auto errors = validate(c);
  if (dataset.attribute_count() < 2) {
    errors.push_back({"dataset", "one-point crossover needs at least two attributes"});
  }
  if (!c.schema.pattern.empty() || c.schema.class_code) {
    RuleSchema s = c.schema;
    if (s.pattern.empty()) s.pattern.resize(dataset.attribute_count());
    if (s.pattern.size() != dataset.attribute_count()) {
      errors.push_back({"schema", "expected " + std::to_string(dataset.attribute_count()) +
                                      " slots, found " + std::to_string(s.pattern.size())});
    } else if (!is_valid(s, dataset)) {
      errors.push_back({"schema", "holds a code outside an attribute's admissible values"});
    }
  }
  return errors;
}

json to_json(const RunConfig& c) {
  json objectives = json::array();
  for (const auto& o : c.objectives) objectives.push_back(to_string(o));
  return json{
      {"population_size", c.population_size},
      {"generations", c.generations},
      {"crossover_rate", c.crossover_rate},
      {"mutation_rate", c.mutation_rate},
      {"objectives", std::move(objectives)},
      {"schema", schema_to_json(c.schema)},
      {"agents",
       {{"risk_takers", c.agents.risk_takers},
        {"imitators", c.agents.imitators},
        {"cautious", c.agents.cautious}}},
      {"rng_seed", c.rng_seed},
      {"dataset", c.dataset},
      {"schema_preset", c.schema_preset},
      {"train_fraction", c.train_fraction},
      {"holdout", c.holdout},
      {"match_threshold", c.match_threshold},
      {"strict_match", c.strict_match},
      {"tks_count_matches", c.tks_count_matches},
      {"dks_capacity", c.dks_capacity},
      {"class_wise_best", c.class_wise_best},
      {"ruleset", std::string(to_string(c.ruleset))},
  };
}

RunConfig run_config_from_json(const json& doc, RunConfig c) {
  if (!doc.is_object()) throw ConfigError(std::vector<FieldError>{{"", "configuration must be a JSON object"}});
  std::vector<FieldError> errors;
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "population_size") {
        c.population_size = value.get<std::size_t>();
        if (value.get<double>() < 0) throw std::invalid_argument("must be non-negative");
      } else if (key == "generations") {
        c.generations = value.get<std::size_t>();
        if (value.get<double>() < 0) throw std::invalid_argument("must be non-negative");
      } else if (key == "crossover_rate") {
        c.crossover_rate = value.get<double>();
      } else if (key == "mutation_rate") {
        c.mutation_rate = value.get<double>();
      } else if (key == "objectives" || key == "metrics") {
        c.objectives = objectives_from_json(value);
      } else if (key == "schema") {
        c.schema = schema_from_json(value);
      } else if (key == "agents") {
        c.agents = agents_from_json(value);
      } else if (key == "rng_seed" || key == "seed") {
        c.rng_seed = value.get<std::uint64_t>();
      } else if (key == "dataset") {
        c.dataset = value.get<std::string>();
      } else if (key == "schema_preset") {
        c.schema_preset = value.get<std::string>();
      } else if (key == "train_fraction") {
        c.train_fraction = value.get<double>();
      } else if (key == "holdout") {
        c.holdout = value.get<bool>();
      } else if (key == "match_threshold") {
        c.match_threshold = value.get<double>();
      } else if (key == "strict_match") {
        c.strict_match = value.get<bool>();
      } else if (key == "tks_count_matches") {
        c.tks_count_matches = value.get<bool>();
      } else if (key == "dks_capacity") {
        c.dks_capacity = value.get<std::size_t>();
      } else if (key == "class_wise_best") {
        c.class_wise_best = value.get<bool>();
      } else if (key == "ruleset") {
        c.ruleset = ruleset_mode_from_string(value.get<std::string>());
      } else {
        errors.push_back({key, "unknown field"});
      }
    } catch (const json::exception& e) {
      errors.push_back({key, "wrong type: " + std::string(e.what())});
    } catch (const std::exception& e) {
      errors.push_back({key, e.what()});
    }
  }
  if (errors.empty()) errors = validate(c);
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

RunConfig preset_config(std::string_view dataset) {
  RunConfig c;
  c.dataset = std::string(dataset);
  if (dataset == "iris") {
    c.population_size = 200;
  } else if (dataset == "ljb") {
    c.population_size = 300;
  } else if (dataset == "wbc") {
    c.population_size = 500;
  } else {
    throw ConfigError(std::vector<FieldError>{{"dataset", "unknown preset '" + std::string(dataset) + "'"}});
  }
  return c;
}

Dataset load_dataset(const RunConfig& config) {
  if (is_preset(config.dataset)) return load_preset(config.dataset);
  if (!config.schema_preset.empty()) {
    return load_csv(config.dataset, preset_schema(config.schema_preset));
  }
  return load_csv_inferred(config.dataset);
}

std::vector<Chromosome> seed_population(const RunConfig& config, const NormativeKS& nks, Rng& rng) {
  if (config.population_size < 2) throw std::invalid_argument("population_size must be at least 2");
  std::vector<Chromosome> pool{nks.min_chromosome(), nks.max_chromosome()};
  pool.reserve(config.population_size + 1);
  while (pool.size() < config.population_size) {
    const auto& p1 = pool[rng.index(pool.size())];
    const auto& p2 = pool[rng.index(pool.size())];
    auto [c1, c2] = rng.bernoulli(config.crossover_rate) ? crossover(p1, p2, rng)
                                                         : std::pair{p1, p2};
    if (rng.bernoulli(config.mutation_rate)) c1 = mutate(c1, nks, rng);
    if (rng.bernoulli(config.mutation_rate)) c2 = mutate(c2, nks, rng);
    pool.push_back(std::move(c1));
    if (pool.size() < config.population_size) pool.push_back(std::move(c2));
  }
  return pool;
}

std::pair<Chromosome, Chromosome> select_parents(AgentTrait trait, const BeliefSpace& beliefs,
                                                 Rng& rng) {
  static constexpr KnowledgeSource kRiskSources[] = {
      KnowledgeSource::history, KnowledgeSource::rule, KnowledgeSource::situational,
      KnowledgeSource::topographical};
  auto query = [&](KnowledgeSource ks) {
    auto c = beliefs.parent(ks, rng);
    if (!c) throw std::logic_error("parent selection on an empty belief space");
    return std::move(*c);
  };
  switch (trait) {
    case AgentTrait::risk_taker: {
      auto p1 = query(kRiskSources[rng.index(4)]);
      auto p2 = query(kRiskSources[rng.index(4)]);
      return {std::move(p1), std::move(p2)};
    }
    case AgentTrait::imitator: {
      auto p1 = query(KnowledgeSource::situational);
      auto p2 = query(KnowledgeSource::rule);
      return {std::move(p1), std::move(p2)};
    }
    case AgentTrait::cautious: {
      auto p1 = query(KnowledgeSource::history);
      auto p2 = query(KnowledgeSource::history);
      return {std::move(p1), std::move(p2)};
    }
  }
  throw std::logic_error("unknown agent trait");
}

std::pair<Chromosome, Chromosome> crossover_at(const Chromosome& p1, const Chromosome& p2,
                                               std::size_t point) {
  if (p1.genes.size() != p2.genes.size()) throw std::invalid_argument("parent layouts differ");
  if (point < 1 || point >= p1.genes.size()) {
    throw std::invalid_argument("crossover point must lie in [1, genes - 1]");
  }
  Chromosome c1 = p1;
  Chromosome c2 = p2;
  for (std::size_t slot = point; slot < p1.size(); ++slot) std::swap(c1.at(slot), c2.at(slot));
  return {std::move(c1), std::move(c2)};
}

std::pair<Chromosome, Chromosome> crossover(const Chromosome& p1, const Chromosome& p2, Rng& rng) {
  if (p1.genes.size() < 2) throw std::invalid_argument("crossover needs at least two genes");
  const auto point = 1 + rng.index(p1.genes.size() - 1);
  return crossover_at(p1, p2, point);
}

Chromosome mutate_at(const Chromosome& c, std::size_t slot, const NormativeKS& nks, Rng& rng) {
  Chromosome out = c;
  const auto domain = nks.values(slot);
  const Code current = out.at(slot);
  const bool present = nks.admits(slot, current);
  if (domain.size() < 2 && present) return out;
  // Uniform over the domain minus the current code.
  const std::size_t choices = present ? domain.size() - 1 : domain.size();
  std::size_t k = rng.index(choices);
  for (const Code v : domain) {
    if (present && v == current) continue;
    if (k-- == 0) {
      out.at(slot) = v;
      break;
    }
  }
  return out;
}

Chromosome mutate(const Chromosome& c, const NormativeKS& nks, Rng& rng) {
  return mutate_at(c, rng.index(c.size()), nks, rng);
}

std::vector<std::size_t> agent_quotas(std::size_t total, std::size_t agents) {
  if (agents == 0) throw std::invalid_argument("at least one agent is required");
  std::vector<std::size_t> quotas(agents, total / agents);
  for (std::size_t i = 0; i < total % agents; ++i) ++quotas[i];
  return quotas;
}

namespace {

RuleSchema resolved_schema(const RunConfig& config, const Dataset& dataset) {
  RuleSchema s = config.schema;
  if (s.pattern.empty()) s.pattern.resize(dataset.attribute_count());
  return s;
}

std::vector<Row> all_rows(const Dataset& dataset) { return dataset.instances; }

}  // namespace

Engine::Engine(RunConfig config, const Dataset& dataset)
    : config_(std::move(config)),
      dataset_(dataset),
      beliefs_([&] {
        if (auto errors = validate(config_, dataset); !errors.empty()) {
          throw ConfigError(std::move(errors));
        }
        if (config_.holdout) {
          const auto s = split(dataset, config_.train_fraction, config_.rng_seed);
          train_ = select_rows(dataset, s.train);
          test_ = select_rows(dataset, s.test);
        } else {
          train_ = all_rows(dataset);
          test_ = train_;
        }
        return BeliefSpace(NormativeKS::from_rows(train_, dataset), resolved_schema(config_, dataset),
                           BeliefOptions{config_.effective_dks_capacity(), config_.tks_count_matches});
      }()),
      seeding_rng_(config_.rng_seed, 1),
      roster_(config_.agents.roster()) {
  for (std::size_t k = 0; k < roster_.size(); ++k) agent_rngs_.emplace_back(config_.rng_seed, 100 + k);
}

const MetricVector& Engine::evaluate_cached(const Chromosome& rule) {
  auto it = cache_.find(rule);
  if (it == cache_.end()) {
    it = cache_.emplace(rule, evaluate(rule, train_, config_.objectives,
                                       beliefs_.situational().schema)).first;
  }
  return it->second;
}

std::vector<Candidate> Engine::best_of(std::span<const Chromosome> offspring) {
  std::vector<Chromosome> distinct;
  std::set<Chromosome> seen;
  for (const auto& c : offspring) {
    if (seen.insert(c).second) distinct.push_back(c);
  }
  std::vector<MetricVector> vectors;
  vectors.reserve(distinct.size());
  for (const auto& c : distinct) vectors.push_back(evaluate_cached(c));

  std::vector<std::size_t> keep;
  if (config_.class_wise_best) {
    std::map<Code, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < distinct.size(); ++i) by_class[distinct[i].class_code].push_back(i);
    for (const auto& [code, members] : by_class) {
      std::vector<MetricVector> sub;
      sub.reserve(members.size());
      for (const auto i : members) sub.push_back(vectors[i]);
      for (const auto k : pareto_front_indices(sub)) keep.push_back(members[k]);
    }
    std::sort(keep.begin(), keep.end());
  } else {
    keep = pareto_front_indices(vectors);
  }
  std::vector<Candidate> best;
  best.reserve(keep.size());
  for (const auto i : keep) best.push_back({distinct[i], vectors[i]});
  return best;
}

std::vector<Chromosome> Engine::reproduce(AgentTrait trait, std::size_t quota, Rng& rng) {
  std::vector<Chromosome> out;
  out.reserve(quota + 1);
  const auto& nks = beliefs_.normative();
  while (out.size() < quota) {
    auto [p1, p2] = select_parents(trait, beliefs_, rng);
    auto [c1, c2] = rng.bernoulli(config_.crossover_rate) ? crossover(p1, p2, rng)
                                                          : std::pair{std::move(p1), std::move(p2)};
    if (rng.bernoulli(config_.mutation_rate)) c1 = mutate(c1, nks, rng);
    if (rng.bernoulli(config_.mutation_rate)) c2 = mutate(c2, nks, rng);
    out.push_back(std::move(c1));
    if (out.size() < quota) out.push_back(std::move(c2));
  }
  return out;
}

const Generation& Engine::step() {
  if (done()) throw std::logic_error("run already completed every generation");
  const auto start = std::chrono::steady_clock::now();
  Generation gen;
  gen.index = next_index_;
  std::vector<Candidate> accepted;

  if (gen.index == 0) {
    gen.population = seed_population(config_, beliefs_.normative(), seeding_rng_);
    accepted = best_of(gen.population);
  } else {
    const auto quotas = agent_quotas(config_.population_size, roster_.size());
    for (std::size_t k = 0; k < roster_.size(); ++k) {
      auto offspring = reproduce(roster_[k], quotas[k], agent_rngs_[k]);
      auto best = best_of(offspring);
      accepted.insert(accepted.end(), std::make_move_iterator(best.begin()),
                      std::make_move_iterator(best.end()));
      gen.population.insert(gen.population.end(), std::make_move_iterator(offspring.begin()),
                            std::make_move_iterator(offspring.end()));
    }
  }
  gen.evaluations.reserve(gen.population.size());
  for (const auto& c : gen.population) gen.evaluations.push_back(evaluate_cached(c));

  const auto report = beliefs_.accept(accepted, gen.index);
  gen.front_ids = report.front;
  gen.accepted = accepted.size();
  gen.rks_size = beliefs_.rules().size();
  gen.wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  elapsed_ms_ += gen.wall_time_ms;

  std::set<Chromosome> distinct(gen.population.begin(), gen.population.end());
  records_.push_back({gen.index, distinct.size(), gen.accepted, gen.rks_size, gen.front_ids,
                      gen.wall_time_ms});
  ++next_index_;
  last_ = std::move(gen);
  return last_;
}

RunResult Engine::finish(bool stopped) const {
  RunResult r;
  r.config = config_;
  r.dataset = dataset_.name;
  r.generations_completed = next_index_;
  r.stopped = stopped;
  r.train_size = train_.size();
  r.test_size = test_.size();
  r.generations = records_;
  r.rks_count = beliefs_.rules().size();
  r.history_rules = beliefs_.history_rule_count();
  r.wall_time_ms = elapsed_ms_;

  const auto front = beliefs_.latest_front();
  r.front_size = front.size();
  r.hks_count = front.size();
  for (const auto id : front) {
    r.final_front.push_back({id, beliefs_.rules().at(id), beliefs_.domain().at(id).vector});
  }

  std::vector<RuleId> chosen;
  switch (config_.ruleset) {
    case RuleSetMode::front:
      chosen = front;
      break;
    case RuleSetMode::history: {
      std::set<RuleId> ids;
      for (const auto& f : beliefs_.history()) ids.insert(f.begin(), f.end());
      chosen.assign(ids.begin(), ids.end());
      break;
    }
    case RuleSetMode::rks:
      for (std::uint32_t i = 0; i < beliefs_.rules().size(); ++i) chosen.push_back(RuleId{i});
      break;
    case RuleSetMode::class_fronts: {
      std::map<Code, std::map<RuleId, MetricVector>> by_class;
      for (std::uint32_t i = 0; i < beliefs_.rules().size(); ++i) {
        const auto& rule = beliefs_.rules().at(RuleId{i});
        by_class[rule.class_code].emplace(RuleId{i}, cache_.at(rule));
      }
      for (const auto& [code, entries] : by_class) {
        const auto f = pareto_front(entries);
        chosen.insert(chosen.end(), f.begin(), f.end());
      }
      std::sort(chosen.begin(), chosen.end());
      break;
    }
  }

  RuleSet ruleset;
  ruleset.majority_class = majority_class(train_, dataset_.class_attribute);
  for (const auto id : chosen) {
    const auto& rule = beliefs_.rules().at(id);
    ruleset.rules.push_back(rule);
    r.ruleset.push_back({id, rule, cache_.at(rule)});
  }
  if (!test_.empty()) r.accuracy = accuracy(test_, ruleset, config_.match_threshold, config_.strict_match);
  if (!train_.empty()) {
    r.train_accuracy = accuracy(train_, ruleset, config_.match_threshold, config_.strict_match);
  }
  return r;
}

std::vector<FrontMember> Engine::all_rules() const {
  std::vector<FrontMember> out;
  out.reserve(beliefs_.rules().size());
  for (std::uint32_t i = 0; i < beliefs_.rules().size(); ++i) {
    const auto& rule = beliefs_.rules().at(RuleId{i});
    out.push_back({RuleId{i}, rule, cache_.at(rule)});
  }
  return out;
}

namespace {

json members_to_json(const std::vector<FrontMember>& members, const std::vector<Objective>& objectives) {
  json out = json::array();
  for (const auto& m : members) {
    json metrics = json::object();
    for (std::size_t i = 0; i < objectives.size() && i < m.metrics.size(); ++i) {
      metrics[to_string(objectives[i])] = natural_value(objectives[i], m.metrics[i]);
    }
    out.push_back({{"rule_id", m.id.value},
                   {"genes", m.rule.genes},
                   {"class", m.rule.class_code},
                   {"metrics", std::move(metrics)}});
  }
  return out;
}

}  // namespace

json to_json(const RunResult& r, bool timing) {
  json gens = json::array();
  for (const auto& g : r.generations) {
    json ids = json::array();
    for (const auto id : g.front) ids.push_back(id.value);
    json entry = {{"index", g.index},
                  {"distinct_offspring", g.distinct_offspring},
                  {"accepted", g.accepted},
                  {"rks_size", g.rks_size},
                  {"front_size", g.front.size()},
                  {"front", std::move(ids)}};
    if (timing) entry["wall_time_ms"] = g.wall_time_ms;
    gens.push_back(std::move(entry));
  }
  json doc = {
      {"config", to_json(r.config)},
      {"dataset", r.dataset},
      {"generations_completed", r.generations_completed},
      {"stopped", r.stopped},
      {"train_size", r.train_size},
      {"test_size", r.test_size},
      {"evaluation", r.config.holdout ? "holdout" : "resubstitution"},
      {"rks_count", r.rks_count},
      {"hks_count", r.hks_count},
      {"front_size", r.front_size},
      {"history_rules", r.history_rules},
      {"accuracy", r.accuracy},
      {"train_accuracy", r.train_accuracy},
      {"match", {{"threshold", r.config.match_threshold}, {"comparison", r.config.strict_match ? ">" : ">="}}},
      {"ruleset_mode", std::string(to_string(r.config.ruleset))},
      {"final_front", members_to_json(r.final_front, r.config.objectives)},
      {"ruleset", members_to_json(r.ruleset, r.config.objectives)},
      {"generations", std::move(gens)},
  };
  if (timing) doc["wall_time_ms"] = r.wall_time_ms;
  return doc;
}

RunResult run(const RunConfig& config, const Dataset& dataset, const RunObserver& observer,
              std::stop_token stop) {
  Engine engine(config, dataset);
  bool stopped = false;
  double elapsed = 0;
  while (!engine.done()) {
    if (stop.stop_requested()) {
      stopped = true;
      break;
    }
    const auto& gen = engine.step();
    elapsed += gen.wall_time_ms;
    if (observer) observer(GenerationEvent{gen, engine.beliefs(), elapsed});
  }
  return engine.finish(stopped);
}

}  // namespace carm
