#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "carm/dataset.hpp"

namespace carm {

/// Concrete rule: one code per independent attribute, then the class.
struct Chromosome {
  std::vector<Code> genes;
  Code class_code = 0;

  std::size_t size() const { return genes.size() + 1; }
  Code at(std::size_t slot) const { return slot < genes.size() ? genes[slot] : class_code; }
  Code& at(std::size_t slot) { return slot < genes.size() ? genes[slot] : class_code; }

  auto operator<=>(const Chromosome&) const = default;
  bool operator==(const Chromosome&) const = default;
};

/// Slots set to std::nullopt are wildcards.
struct RuleSchema {
  std::vector<std::optional<Code>> pattern;
  std::optional<Code> class_code;

  static RuleSchema wildcard(std::size_t attribute_count) {
    return RuleSchema{std::vector<std::optional<Code>>(attribute_count), std::nullopt};
  }
  bool operator==(const RuleSchema&) const = default;
};

/// "*,2,*,*|1" style text. The class part after '|' is optional.
RuleSchema parse_schema_text(std::string_view text);
std::string to_text(const RuleSchema& schema);

enum class Metric { coverage, confidence, interest, surprise, rule_difference };
enum class Orientation { maximize, minimize };

std::string_view to_string(Metric metric);
Metric metric_from_string(std::string_view text);

struct Objective {
  Metric metric = Metric::coverage;
  Orientation orientation = Orientation::maximize;
  bool operator==(const Objective&) const = default;
};

/// "coverage", "rule_difference:min", ...
Objective parse_objective(std::string_view text);
std::string to_string(const Objective& objective);
std::vector<Objective> parse_objective_list(std::string_view comma_separated);

/// Stored objective values, one per active objective, all oriented for maximization.
using MetricVector = std::vector<double>;

/// Undo the storage orientation for display.
double natural_value(const Objective& objective, double stored);

struct MatchCounts {
  std::int64_t n = 0;
  std::int64_t a = 0;
  std::int64_t c = 0;
  std::int64_t ac = 0;
  bool operator==(const MatchCounts&) const = default;
};

bool antecedent_matches(const Chromosome& rule, std::span<const Code> row);

MatchCounts count_matches(const Chromosome& rule, std::span<const Row> rows);

double coverage(const MatchCounts& m);
double confidence(const MatchCounts& m);
double interest(const MatchCounts& m);
double surprise(const MatchCounts& m);

std::int64_t rule_difference(const Chromosome& rule, const RuleSchema& schema);

/// Number of differing slots, class included.
std::int64_t dissimilarity(const Chromosome& lhs, const Chromosome& rhs);
/// Number of equal slots, class included.
std::int64_t matching_positions(const Chromosome& lhs, const Chromosome& rhs);

double metric_value(Metric metric, const MatchCounts& counts, const Chromosome& rule,
                    const RuleSchema& schema);

MetricVector evaluate(const Chromosome& rule, std::span<const Row> rows,
                      std::span<const Objective> objectives, const RuleSchema& schema);

bool is_valid(const Chromosome& rule, const Dataset& dataset);
bool is_valid(const RuleSchema& schema, const Dataset& dataset);

}  // namespace carm
