#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "carm/dataset.hpp"
#include "carm/rule_model.hpp"

namespace carm {

/// Which mined rules vote at test time.
enum class RuleSetMode {
  front,         // final history front
  class_fronts,  // per-class Pareto fronts over every accepted rule
  history,       // every rule that was a dominator in some generation
  rks,           // every accepted rule
};

std::string_view to_string(RuleSetMode mode);
RuleSetMode ruleset_mode_from_string(std::string_view text);

struct RuleSet {
  std::vector<Chromosome> rules;
  Code majority_class = 0;
};

/// Share of antecedent positions equal between rule and row.
double match_fraction(const Chromosome& rule, std::span<const Code> row);

bool covers(const Chromosome& rule, std::span<const Code> row, double threshold, bool strict = false);

std::size_t covering_count(std::span<const Code> row, const RuleSet& ruleset, double threshold,
                           bool strict = false);

/// Modal class among covering rules; ties go to the larger summed match
/// fraction, then the lower class code. No covering rule yields the majority class.
Code classify(std::span<const Code> row, const RuleSet& ruleset, double threshold,
              bool strict = false);

/// Throws std::invalid_argument on an empty test set.
double accuracy(std::span<const Row> test, const RuleSet& ruleset, double threshold,
                bool strict = false);

}  // namespace carm
