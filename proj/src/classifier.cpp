#include "carm/classifier.hpp"

#include <map>
#include <stdexcept>
#include <string>

namespace carm {

std::string_view to_string(RuleSetMode mode) {
  switch (mode) {
    case RuleSetMode::front:
      return "front";
    case RuleSetMode::class_fronts:
      return "class_fronts";
    case RuleSetMode::history:
      return "history";
    case RuleSetMode::rks:
      return "rks";
  }
  return "front";
}

RuleSetMode ruleset_mode_from_string(std::string_view text) {
  if (text == "front" || text == "hks") return RuleSetMode::front;
  if (text == "class_fronts") return RuleSetMode::class_fronts;
  if (text == "history") return RuleSetMode::history;
  if (text == "rks" || text == "all") return RuleSetMode::rks;
  throw std::invalid_argument("unknown rule set mode: '" + std::string(text) + "'");
}

double match_fraction(const Chromosome& rule, std::span<const Code> row) {
  if (rule.genes.empty()) return 1.0;
  std::size_t equal = 0;
  for (std::size_t i = 0; i < rule.genes.size(); ++i) equal += rule.genes[i] == row[i];
  return static_cast<double>(equal) / static_cast<double>(rule.genes.size());
}

bool covers(const Chromosome& rule, std::span<const Code> row, double threshold, bool strict) {
  const double f = match_fraction(rule, row);
  return strict ? f > threshold : f >= threshold;
}

std::size_t covering_count(std::span<const Code> row, const RuleSet& ruleset, double threshold,
                           bool strict) {
  std::size_t n = 0;
  for (const auto& rule : ruleset.rules) n += covers(rule, row, threshold, strict);
  return n;
}

Code classify(std::span<const Code> row, const RuleSet& ruleset, double threshold, bool strict) {
  struct Vote {
    std::size_t count = 0;
    double weight = 0;
  };
  std::map<Code, Vote> votes;
  for (const auto& rule : ruleset.rules) {
    const double f = match_fraction(rule, row);
    if (strict ? f > threshold : f >= threshold) {
      auto& v = votes[rule.class_code];
      ++v.count;
      v.weight += f;
    }
  }
  if (votes.empty()) return ruleset.majority_class;
  auto best = votes.begin();
  for (auto it = std::next(votes.begin()); it != votes.end(); ++it) {
    const auto& cur = it->second;
    const auto& top = best->second;
    if (cur.count > top.count || (cur.count == top.count && cur.weight > top.weight)) best = it;
  }
  return best->first;
}

double accuracy(std::span<const Row> test, const RuleSet& ruleset, double threshold, bool strict) {
  if (test.empty()) throw std::invalid_argument("accuracy needs a non-empty test set");
  std::size_t correct = 0;
  for (const auto& row : test) correct += classify(row, ruleset, threshold, strict) == row.back();
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace carm
