#include "carm/rule_model.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace carm {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

std::optional<Code> parse_slot(std::string_view token) {
  token = trim(token);
  if (token == "*" || token.empty()) return std::nullopt;
  Code v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw std::invalid_argument("bad schema slot: '" + std::string(token) + "'");
  }
  return v;
}

}  // namespace

RuleSchema parse_schema_text(std::string_view text) {
  RuleSchema schema;
  const auto bar = text.find('|');
  const auto body = text.substr(0, bar);
  if (!trim(body).empty()) {
    std::size_t start = 0;
    while (true) {
      const auto pos = body.find(',', start);
      schema.pattern.push_back(parse_slot(body.substr(start, pos == std::string_view::npos ? pos : pos - start)));
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
  }
  if (bar != std::string_view::npos) schema.class_code = parse_slot(text.substr(bar + 1));
  return schema;
}

std::string to_text(const RuleSchema& schema) {
  std::string out;
  for (std::size_t i = 0; i < schema.pattern.size(); ++i) {
    if (i) out += ',';
    out += schema.pattern[i] ? std::to_string(*schema.pattern[i]) : "*";
  }
  out += '|';
  out += schema.class_code ? std::to_string(*schema.class_code) : "*";
  return out;
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::coverage:
      return "coverage";
    case Metric::confidence:
      return "confidence";
    case Metric::interest:
      return "interest";
    case Metric::surprise:
      return "surprise";
    case Metric::rule_difference:
      return "rule_difference";
  }
  return "coverage";
}

Metric metric_from_string(std::string_view text) {
  text = trim(text);
  if (text == "coverage" || text == "cov") return Metric::coverage;
  if (text == "confidence" || text == "conf") return Metric::confidence;
  if (text == "interest" || text == "int") return Metric::interest;
  if (text == "surprise" || text == "sur") return Metric::surprise;
  if (text == "rule_difference" || text == "rdiff") return Metric::rule_difference;
  throw std::invalid_argument("unknown metric: '" + std::string(text) + "'");
}

Objective parse_objective(std::string_view text) {
  text = trim(text);
  Objective obj;
  const auto colon = text.find(':');
  obj.metric = metric_from_string(text.substr(0, colon));
  if (colon != std::string_view::npos) {
    const auto dir = trim(text.substr(colon + 1));
    if (dir == "max") {
      obj.orientation = Orientation::maximize;
    } else if (dir == "min") {
      obj.orientation = Orientation::minimize;
    } else {
      throw std::invalid_argument("unknown orientation: '" + std::string(dir) + "'");
    }
  }
  return obj;
}

std::string to_string(const Objective& objective) {
  std::string s(to_string(objective.metric));
  if (objective.orientation == Orientation::minimize) s += ":min";
  return s;
}

std::vector<Objective> parse_objective_list(std::string_view text) {
  std::vector<Objective> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(',', start);
    const auto token = trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (!token.empty()) out.push_back(parse_objective(token));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double natural_value(const Objective& objective, double stored) {
  return objective.orientation == Orientation::minimize && stored != 0.0 ? -stored : stored;
}

bool antecedent_matches(const Chromosome& rule, std::span<const Code> row) {
  return std::equal(rule.genes.begin(), rule.genes.end(), row.begin());
}

MatchCounts count_matches(const Chromosome& rule, std::span<const Row> rows) {
  MatchCounts m;
  m.n = static_cast<std::int64_t>(rows.size());
  const std::size_t class_col = rule.genes.size();
  for (const auto& row : rows) {
    const bool in_a = antecedent_matches(rule, row);
    const bool in_c = row[class_col] == rule.class_code;
    m.a += in_a;
    m.c += in_c;
    m.ac += in_a && in_c;
  }
  return m;
}

double coverage(const MatchCounts& m) {
  return m.c == 0 ? 0.0 : static_cast<double>(m.ac) / static_cast<double>(m.c);
}

double confidence(const MatchCounts& m) {
  return m.a == 0 ? 0.0 : static_cast<double>(m.ac) / static_cast<double>(m.a);
}

double interest(const MatchCounts& m) {
  if (m.a == 0 || m.c == 0) return 0.0;
  return static_cast<double>(m.n * m.ac) / (static_cast<double>(m.a) * static_cast<double>(m.c));
}

double surprise(const MatchCounts& m) {
  const auto not_c = m.n - m.c;
  if (not_c == 0) return 0.0;
  return static_cast<double>(m.ac - (m.a - m.ac)) / static_cast<double>(not_c);
}

std::int64_t rule_difference(const Chromosome& rule, const RuleSchema& schema) {
  std::int64_t diff = 0;
  const auto n = std::min(rule.genes.size(), schema.pattern.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (schema.pattern[i] && *schema.pattern[i] != rule.genes[i]) ++diff;
  }
  return diff;
}

std::int64_t dissimilarity(const Chromosome& lhs, const Chromosome& rhs) {
  return static_cast<std::int64_t>(lhs.size()) - matching_positions(lhs, rhs);
}

std::int64_t matching_positions(const Chromosome& lhs, const Chromosome& rhs) {
  std::int64_t same = lhs.class_code == rhs.class_code;
  for (std::size_t i = 0; i < lhs.genes.size(); ++i) same += lhs.genes[i] == rhs.genes[i];
  return same;
}

double metric_value(Metric metric, const MatchCounts& counts, const Chromosome& rule,
                    const RuleSchema& schema) {
  switch (metric) {
    case Metric::coverage:
      return coverage(counts);
    case Metric::confidence:
      return confidence(counts);
    case Metric::interest:
      return interest(counts);
    case Metric::surprise:
      return surprise(counts);
    case Metric::rule_difference:
      return static_cast<double>(rule_difference(rule, schema));
  }
  return 0.0;
}

MetricVector evaluate(const Chromosome& rule, std::span<const Row> rows,
                      std::span<const Objective> objectives, const RuleSchema& schema) {
  if (objectives.empty()) throw std::invalid_argument("metric list is empty");
  const auto counts = count_matches(rule, rows);
  MetricVector out;
  out.reserve(objectives.size());
  for (const auto& obj : objectives) {
    const double v = metric_value(obj.metric, counts, rule, schema);
    out.push_back(obj.orientation == Orientation::minimize && v != 0.0 ? -v : v);
  }
  return out;
}

bool is_valid(const Chromosome& rule, const Dataset& dataset) {
  if (rule.genes.size() != dataset.attribute_count()) return false;
  for (std::size_t i = 0; i < rule.genes.size(); ++i) {
    if (!dataset.attributes[i].admits(rule.genes[i])) return false;
  }
  return dataset.class_attribute.admits(rule.class_code);
}

bool is_valid(const RuleSchema& schema, const Dataset& dataset) {
  if (schema.pattern.size() != dataset.attribute_count()) return false;
  for (std::size_t i = 0; i < schema.pattern.size(); ++i) {
    if (schema.pattern[i] && !dataset.attributes[i].admits(*schema.pattern[i])) return false;
  }
  return !schema.class_code || dataset.class_attribute.admits(*schema.class_code);
}

}  // namespace carm
