#include "carm/belief_space.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

namespace carm {

bool dominates(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("metric vectors differ in length");
  bool strictly_better = false;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] < v[i]) return false;
    if (u[i] > v[i]) strictly_better = true;
  }
  return strictly_better;
}

namespace {

// Lexicographically descending order puts every dominator before what it
// dominates, so each point only needs checking against the front built so far.
template <typename Key>
std::vector<Key> sweep_front(std::vector<std::pair<Key, const MetricVector*>> items) {
  std::stable_sort(items.begin(), items.end(), [](const auto& l, const auto& r) {
    return std::lexicographical_compare(r.second->begin(), r.second->end(), l.second->begin(),
                                        l.second->end());
  });
  std::vector<std::pair<Key, const MetricVector*>> front;
  for (const auto& item : items) {
    const bool dominated = std::any_of(front.begin(), front.end(), [&](const auto& f) {
      return dominates(*f.second, *item.second);
    });
    if (!dominated) front.push_back(item);
  }
  std::vector<Key> keys;
  keys.reserve(front.size());
  for (const auto& f : front) keys.push_back(f.first);
  std::sort(keys.begin(), keys.end());
  return keys;
}

}  // namespace

std::vector<RuleId> pareto_front(const std::map<RuleId, MetricVector>& entries) {
  std::vector<std::pair<RuleId, const MetricVector*>> items;
  items.reserve(entries.size());
  for (const auto& [id, vec] : entries) items.emplace_back(id, &vec);
  return sweep_front(std::move(items));
}

std::vector<std::size_t> pareto_front_indices(std::span<const MetricVector> vectors) {
  std::vector<std::pair<std::size_t, const MetricVector*>> items;
  items.reserve(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) items.emplace_back(i, &vectors[i]);
  return sweep_front(std::move(items));
}

NormativeKS::NormativeKS(std::vector<std::vector<Code>> values) : values_(std::move(values)) {
  for (auto& v : values_) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    if (v.empty()) throw std::invalid_argument("normative knowledge needs a value for every slot");
  }
}

NormativeKS NormativeKS::from_rows(std::span<const Row> rows, const Dataset& layout) {
  std::vector<std::set<Code>> seen(layout.width());
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < seen.size(); ++j) seen[j].insert(row[j]);
  }
  std::vector<std::vector<Code>> values(layout.width());
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (seen[j].empty()) {
      values[j] = layout.column(j).values;
    } else {
      values[j].assign(seen[j].begin(), seen[j].end());
    }
  }
  return NormativeKS(std::move(values));
}

bool NormativeKS::admits(std::size_t slot, Code code) const {
  const auto& v = values_.at(slot);
  return std::binary_search(v.begin(), v.end(), code);
}

Code NormativeKS::random_value(std::size_t slot, Rng& rng) const {
  const auto& v = values_.at(slot);
  return v[rng.index(v.size())];
}

Chromosome NormativeKS::min_chromosome() const {
  Chromosome c;
  for (std::size_t j = 0; j + 1 < values_.size(); ++j) c.genes.push_back(min(j));
  c.class_code = min(values_.size() - 1);
  return c;
}

Chromosome NormativeKS::max_chromosome() const {
  Chromosome c;
  for (std::size_t j = 0; j + 1 < values_.size(); ++j) c.genes.push_back(max(j));
  c.class_code = max(values_.size() - 1);
  return c;
}

std::pair<RuleId, bool> RuleKS::intern(const Chromosome& rule) {
  if (auto it = index_.find(rule); it != index_.end()) return {it->second, false};
  const RuleId id{static_cast<std::uint32_t>(rules_.size())};
  rules_.push_back(rule);
  index_.emplace(rule, id);
  return {id, true};
}

std::optional<RuleId> RuleKS::find(const Chromosome& rule) const {
  if (auto it = index_.find(rule); it != index_.end()) return it->second;
  return std::nullopt;
}

std::string_view to_string(KnowledgeSource ks) {
  switch (ks) {
    case KnowledgeSource::normative:
      return "normative";
    case KnowledgeSource::situational:
      return "situational";
    case KnowledgeSource::domain:
      return "domain";
    case KnowledgeSource::topographical:
      return "topographical";
    case KnowledgeSource::history:
      return "history";
    case KnowledgeSource::rule:
      return "rule";
  }
  return "rule";
}

BeliefSpace::BeliefSpace(NormativeKS normative, RuleSchema schema, BeliefOptions options)
    : normative_(std::move(normative)), situational_{std::move(schema), std::nullopt},
      options_(options) {
  const auto attrs = normative_.slot_count() - 1;
  if (situational_.schema.pattern.empty()) situational_.schema.pattern.resize(attrs);
  if (situational_.schema.pattern.size() != attrs) {
    throw std::invalid_argument("rule schema layout does not match the dataset");
  }
}

AcceptanceReport BeliefSpace::accept(std::span<const Candidate> population_best,
                                     std::size_t generation) {
  AcceptanceReport report;
  report.generation = generation;
  for (const auto& cand : population_best) {
    auto [id, inserted] = rules_.intern(cand.rule);
    report.new_rules += inserted;
    domain_[id] = DomainEntry{cand.metrics, ++stamp_};
  }

  report.front = pareto_front(domain_vectors());
  history_.push_back(report.front);
  report.evicted = prune_domain(report.front);
  refresh_topography(report.front);

  situational_.best_exemplar.reset();
  for (const auto id : report.front) {
    const auto& vec = domain_.at(id).vector;
    if (!situational_.best_exemplar ||
        vec.front() > domain_.at(*situational_.best_exemplar).vector.front()) {
      situational_.best_exemplar = id;
    }
  }
  return report;
}

std::size_t BeliefSpace::prune_domain(const std::vector<RuleId>& front) {
  std::vector<std::pair<std::uint64_t, RuleId>> dominated;
  for (const auto& [id, entry] : domain_) {
    if (!std::binary_search(front.begin(), front.end(), id)) dominated.emplace_back(entry.stamp, id);
  }
  if (dominated.size() <= options_.dks_capacity) return 0;
  std::sort(dominated.begin(), dominated.end());
  const auto excess = dominated.size() - options_.dks_capacity;
  for (std::size_t i = 0; i < excess; ++i) domain_.erase(dominated[i].second);
  return excess;
}

void BeliefSpace::refresh_topography(const std::vector<RuleId>& front) {
  std::set<std::pair<RuleId, RuleId>> pairs;
  auto add = [&](RuleId a, RuleId b) {
    if (a == b) return;
    pairs.emplace(std::min(a, b), std::max(a, b));
  };
  for (std::size_t i = 0; i < front.size(); ++i) {
    for (std::size_t j = i + 1; j < front.size(); ++j) add(front[i], front[j]);
  }
  if (history_.size() >= 2) {
    for (const auto prev : history_[history_.size() - 2]) {
      for (const auto cur : front) add(prev, cur);
    }
  }
  topographical_.clear();
  topographical_.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    const auto& ra = rules_.at(a);
    const auto& rb = rules_.at(b);
    const auto d = options_.tks_count_matches ? matching_positions(ra, rb) : dissimilarity(ra, rb);
    topographical_.push_back({a, b, d});
  }
}

Chromosome BeliefSpace::instantiate_schema(Rng& rng) const {
  const auto& schema = situational_.schema;
  Chromosome c;
  c.genes.resize(schema.pattern.size());
  for (std::size_t j = 0; j < schema.pattern.size(); ++j) {
    c.genes[j] = schema.pattern[j] ? *schema.pattern[j] : normative_.random_value(j, rng);
  }
  c.class_code = schema.class_code ? *schema.class_code
                                   : normative_.random_value(schema.pattern.size(), rng);
  return c;
}

std::optional<TopoPair> BeliefSpace::distant_pair() const {
  if (topographical_.empty()) return std::nullopt;
  const auto it = std::max_element(
      topographical_.begin(), topographical_.end(),
      [](const TopoPair& l, const TopoPair& r) { return l.distance < r.distance; });
  return *it;
}

std::optional<Chromosome> BeliefSpace::parent(KnowledgeSource ks, Rng& rng) const {
  switch (ks) {
    case KnowledgeSource::history:
      if (!history_.empty() && !history_.back().empty()) {
        const auto& front = history_.back();
        return rules_.at(front[rng.index(front.size())]);
      }
      break;
    case KnowledgeSource::situational:
      return instantiate_schema(rng);
    case KnowledgeSource::topographical:
      if (auto pair = distant_pair()) {
        return rules_.at(rng.bernoulli(0.5) ? pair->first : pair->second);
      }
      break;
    case KnowledgeSource::domain:
      if (!domain_.empty()) {
        auto it = domain_.begin();
        std::advance(it, static_cast<std::ptrdiff_t>(rng.index(domain_.size())));
        return rules_.at(it->first);
      }
      break;
    case KnowledgeSource::normative: {
      Chromosome c;
      for (std::size_t j = 0; j + 1 < normative_.slot_count(); ++j) {
        c.genes.push_back(normative_.random_value(j, rng));
      }
      c.class_code = normative_.random_value(normative_.slot_count() - 1, rng);
      return c;
    }
    case KnowledgeSource::rule:
      break;
  }
  if (rules_.empty()) return std::nullopt;
  return rules_.at(RuleId{static_cast<std::uint32_t>(rng.index(rules_.size()))});
}

std::map<RuleId, MetricVector> BeliefSpace::domain_vectors() const {
  std::map<RuleId, MetricVector> out;
  for (const auto& [id, entry] : domain_) out.emplace_hint(out.end(), id, entry.vector);
  return out;
}

std::size_t BeliefSpace::history_rule_count() const {
  std::set<RuleId> ids;
  for (const auto& front : history_) ids.insert(front.begin(), front.end());
  return ids.size();
}

nlohmann::json BeliefSpace::snapshot() const {
  using nlohmann::json;
  json doc;
  json normative = json::array();
  for (std::size_t j = 0; j < normative_.slot_count(); ++j) {
    const auto v = normative_.values(j);
    normative.push_back(std::vector<Code>(v.begin(), v.end()));
  }
  doc["normative"] = std::move(normative);
  doc["situational"] = {
      {"schema", to_text(situational_.schema)},
      {"best_exemplar", situational_.best_exemplar ? json(situational_.best_exemplar->value)
                                                   : json(nullptr)}};
  json rules = json::array();
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const auto& r = rules_.all()[i];
    rules.push_back({{"id", i}, {"genes", r.genes}, {"class", r.class_code}});
  }
  doc["rules"] = std::move(rules);
  json domain = json::array();
  for (const auto& [id, entry] : domain_) {
    domain.push_back({{"id", id.value}, {"vector", entry.vector}, {"stamp", entry.stamp}});
  }
  doc["domain"] = std::move(domain);
  json topo = json::array();
  for (const auto& p : topographical_) {
    topo.push_back({{"first", p.first.value}, {"second", p.second.value}, {"distance", p.distance}});
  }
  doc["topographical"] = std::move(topo);
  json history = json::array();
  for (const auto& front : history_) {
    json ids = json::array();
    for (const auto id : front) ids.push_back(id.value);
    history.push_back(std::move(ids));
  }
  doc["history"] = std::move(history);
  doc["options"] = {{"dks_capacity", options_.dks_capacity},
                    {"tks_count_matches", options_.tks_count_matches}};
  doc["stamp"] = stamp_;
  return doc;
}

BeliefSpace BeliefSpace::from_snapshot(const nlohmann::json& doc) {
  BeliefOptions options;
  options.dks_capacity = doc.at("options").at("dks_capacity").get<std::size_t>();
  options.tks_count_matches = doc.at("options").at("tks_count_matches").get<bool>();
  BeliefSpace bs(NormativeKS(doc.at("normative").get<std::vector<std::vector<Code>>>()),
                 parse_schema_text(doc.at("situational").at("schema").get<std::string>()), options);
  for (const auto& r : doc.at("rules")) {
    Chromosome c{r.at("genes").get<std::vector<Code>>(), r.at("class").get<Code>()};
    auto [id, inserted] = bs.rules_.intern(c);
    if (!inserted || id.value != r.at("id").get<std::uint32_t>()) {
      throw std::invalid_argument("snapshot rule ids are not dense and unique");
    }
  }
  for (const auto& e : doc.at("domain")) {
    const RuleId id{e.at("id").get<std::uint32_t>()};
    if (id.value >= bs.rules_.size()) throw std::invalid_argument("snapshot DKS id dangles");
    bs.domain_[id] = DomainEntry{e.at("vector").get<MetricVector>(), e.at("stamp").get<std::uint64_t>()};
  }
  for (const auto& p : doc.at("topographical")) {
    bs.topographical_.push_back({RuleId{p.at("first").get<std::uint32_t>()},
                                 RuleId{p.at("second").get<std::uint32_t>()},
                                 p.at("distance").get<std::int64_t>()});
  }
  for (const auto& front : doc.at("history")) {
    std::vector<RuleId> ids;
    for (const auto& id : front) ids.push_back(RuleId{id.get<std::uint32_t>()});
    bs.history_.push_back(std::move(ids));
  }
  const auto& best = doc.at("situational").at("best_exemplar");
  if (!best.is_null()) bs.situational_.best_exemplar = RuleId{best.get<std::uint32_t>()};
  bs.stamp_ = doc.at("stamp").get<std::uint64_t>();
  return bs;
}

}  // namespace carm
