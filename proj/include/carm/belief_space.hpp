#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "carm/dataset.hpp"
#include "carm/random.hpp"
#include "carm/rule_model.hpp"

namespace carm {

struct RuleId {
  std::uint32_t value = 0;
  auto operator<=>(const RuleId&) const = default;
};

/// True iff u >= v componentwise with at least one strict improvement.
/// Throws std::invalid_argument on length mismatch.
bool dominates(std::span<const double> u, std::span<const double> v);

/// Ids whose vectors no other entry dominates, ascending. Identical vectors are all kept.
std::vector<RuleId> pareto_front(const std::map<RuleId, MetricVector>& entries);

/// Indices variant used for agent-local fronts.
std::vector<std::size_t> pareto_front_indices(std::span<const MetricVector> vectors);

/// Admissible codes per slot (attributes, then class), gathered from training rows.
class NormativeKS {
 public:
  NormativeKS() = default;
  explicit NormativeKS(std::vector<std::vector<Code>> values);
  static NormativeKS from_rows(std::span<const Row> rows, const Dataset& layout);

  std::size_t slot_count() const { return values_.size(); }
  std::span<const Code> values(std::size_t slot) const { return values_.at(slot); }
  Code min(std::size_t slot) const { return values_.at(slot).front(); }
  Code max(std::size_t slot) const { return values_.at(slot).back(); }
  bool admits(std::size_t slot, Code code) const;
  Code random_value(std::size_t slot, Rng& rng) const;
  Chromosome min_chromosome() const;
  Chromosome max_chromosome() const;

 private:
  std::vector<std::vector<Code>> values_;
};

struct SituationalKS {
  RuleSchema schema;
  std::optional<RuleId> best_exemplar;
};

struct DomainEntry {
  MetricVector vector;
  std::uint64_t stamp = 0;  // acceptance order of the last write
};

struct TopoPair {
  RuleId first;
  RuleId second;
  std::int64_t distance = 0;
};

/// Rule store with deduplication: equal chromosomes share one id.
class RuleKS {
 public:
  /// Returns the id and whether the chromosome was new.
  std::pair<RuleId, bool> intern(const Chromosome& rule);
  std::optional<RuleId> find(const Chromosome& rule) const;
  const Chromosome& at(RuleId id) const { return rules_.at(id.value); }
  std::size_t size() const { return rules_.size(); }
  bool empty() const { return rules_.empty(); }
  const std::vector<Chromosome>& all() const { return rules_; }

 private:
  std::vector<Chromosome> rules_;
  std::map<Chromosome, RuleId> index_;
};

enum class KnowledgeSource { normative, situational, domain, topographical, history, rule };

std::string_view to_string(KnowledgeSource ks);

struct Candidate {
  Chromosome rule;
  MetricVector metrics;
};

struct AcceptanceReport {
  std::size_t generation = 0;
  std::size_t new_rules = 0;
  std::vector<RuleId> front;
  std::size_t evicted = 0;
};

struct BeliefOptions {
  /// Dominated DKS entries retained beyond the front.
  std::size_t dks_capacity = 400;
  /// Store matching-position counts in TKS instead of Hamming distances.
  bool tks_count_matches = false;
};

/// Single-writer store of the six knowledge sources.
class BeliefSpace {
 public:
  BeliefSpace(NormativeKS normative, RuleSchema schema, BeliefOptions options = {});

  AcceptanceReport accept(std::span<const Candidate> population_best, std::size_t generation);

  /// Parent query with fallbacks: empty HKS/TKS/DKS fall back to RKS; empty RKS gives nullopt.
  std::optional<Chromosome> parent(KnowledgeSource ks, Rng& rng) const;
  /// Random admissible code for a slot (attributes, then class).
  Code mutation_value(std::size_t slot, Rng& rng) const { return normative_.random_value(slot, rng); }
  /// Schema with wildcard slots filled from NKS.
  Chromosome instantiate_schema(Rng& rng) const;
  std::optional<TopoPair> distant_pair() const;

  const NormativeKS& normative() const { return normative_; }
  const SituationalKS& situational() const { return situational_; }
  const std::map<RuleId, DomainEntry>& domain() const { return domain_; }
  const std::vector<TopoPair>& topographical() const { return topographical_; }
  const std::vector<std::vector<RuleId>>& history() const { return history_; }
  const RuleKS& rules() const { return rules_; }
  const BeliefOptions& options() const { return options_; }

  std::vector<RuleId> latest_front() const {
    return history_.empty() ? std::vector<RuleId>{} : history_.back();
  }
  std::map<RuleId, MetricVector> domain_vectors() const;
  /// Distinct ids across every recorded front.
  std::size_t history_rule_count() const;

  nlohmann::json snapshot() const;
  static BeliefSpace from_snapshot(const nlohmann::json& doc);

 private:
  void refresh_topography(const std::vector<RuleId>& front);
  std::size_t prune_domain(const std::vector<RuleId>& front);

  NormativeKS normative_;
  SituationalKS situational_;
  std::map<RuleId, DomainEntry> domain_;
  std::vector<TopoPair> topographical_;
  std::vector<std::vector<RuleId>> history_;
  RuleKS rules_;
  BeliefOptions options_;
  std::uint64_t stamp_ = 0;
};

}  // namespace carm
