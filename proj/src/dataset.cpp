#include "carm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "carm/random.hpp"

#ifndef CARM_DATA_DIR
#define CARM_DATA_DIR "data"
#endif

namespace carm {

namespace {

std::string format_bound(double value) {
  if (std::isinf(value)) return value > 0 ? "+inf" : "-inf";
  char buf[64];
  if (value == std::floor(value) && std::fabs(value) < 1e15) {
    std::snprintf(buf, sizeof buf, "%.1f", value);
    return buf;
  }
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    cells.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

std::optional<double> parse_real(std::string_view s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<Code> parse_int(std::string_view s) {
  Code v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<Code> map_cell(std::string_view cell, const AttributeMeta& meta) {
  switch (meta.kind) {
    case AttributeKind::discretized_numeric: {
      auto v = parse_real(cell);
      if (!v || !std::isfinite(*v)) return std::nullopt;
      return discretize(*v, meta);
    }
    case AttributeKind::integer_range: {
      auto v = parse_int(cell);
      if (!v || !meta.admits(*v)) return std::nullopt;
      return v;
    }
    case AttributeKind::nominal: {
      for (std::size_t i = 0; i < meta.labels.size(); ++i) {
        if (meta.labels[i] == cell) return meta.values[i];
      }
      auto v = parse_int(cell);
      if (v && meta.admits(*v)) return v;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

RawTable read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file: " + path.string());
  RawTable table;
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (!have_header) {
      if (!cells.empty() && cells[0].starts_with("\xEF\xBB\xBF")) cells[0].erase(0, 3);
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(table.header.size()) + " cells, found " +
                      std::to_string(cells.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (table.rows.empty()) throw DataError("empty file: " + path.string());
  return table;
}

}  // namespace

std::string_view to_string(AttributeKind kind) {
  switch (kind) {
    case AttributeKind::nominal:
      return "nominal";
    case AttributeKind::discretized_numeric:
      return "discretized-numeric";
    case AttributeKind::integer_range:
      return "integer-range";
  }
  return "nominal";
}

AttributeKind attribute_kind_from_string(std::string_view text) {
  if (text == "nominal") return AttributeKind::nominal;
  if (text == "discretized-numeric") return AttributeKind::discretized_numeric;
  if (text == "integer-range") return AttributeKind::integer_range;
  throw DataError("unknown attribute kind: " + std::string(text));
}

bool AttributeMeta::admits(Code code) const {
  return std::binary_search(values.begin(), values.end(), code);
}

std::string AttributeMeta::label(Code code) const {
  switch (kind) {
    case AttributeKind::nominal:
      for (std::size_t i = 0; i < values.size() && i < labels.size(); ++i) {
        if (values[i] == code) return labels[i];
      }
      break;
    case AttributeKind::discretized_numeric: {
      double lower = -std::numeric_limits<double>::infinity();
      for (const auto& bin : bins) {
        if (bin.code == code) {
          const char* close = std::isinf(bin.upper) ? ")" : "]";
          return "(" + format_bound(lower) + "," + format_bound(bin.upper) + close;
        }
        lower = bin.upper;
      }
      break;
    }
    case AttributeKind::integer_range:
      break;
  }
  return std::to_string(code);
}

void AttributeMeta::validate() const {
  if (values.empty()) throw DataError("attribute '" + name + "' has no values");
  if (!std::is_sorted(values.begin(), values.end()) ||
      std::adjacent_find(values.begin(), values.end()) != values.end()) {
    throw DataError("attribute '" + name + "' values must be ascending and duplicate-free");
  }
  if (kind == AttributeKind::nominal && !labels.empty() && labels.size() != values.size()) {
    throw DataError("attribute '" + name + "' label count differs from value count");
  }
  if (kind == AttributeKind::discretized_numeric) {
    if (bins.empty()) throw DataError("attribute '" + name + "' has no bins");
    for (std::size_t i = 1; i < bins.size(); ++i) {
      if (!(bins[i].upper > bins[i - 1].upper)) {
        throw DataError("attribute '" + name + "' bin bounds must increase strictly");
      }
    }
    if (!std::isinf(bins.back().upper) || bins.back().upper < 0) {
      throw DataError("attribute '" + name + "' last bin must extend to +inf");
    }
    for (const auto& bin : bins) {
      if (!admits(bin.code)) throw DataError("attribute '" + name + "' bin code not in values");
    }
  }
}

AttributeMeta AttributeMeta::nominal(std::string name,
                                     std::vector<std::pair<Code, std::string>> entries) {
  std::sort(entries.begin(), entries.end());
  AttributeMeta meta;
  meta.name = std::move(name);
  meta.kind = AttributeKind::nominal;
  for (auto& [code, label] : entries) {
    meta.values.push_back(code);
    meta.labels.push_back(std::move(label));
  }
  meta.validate();
  return meta;
}

AttributeMeta AttributeMeta::integer_range(std::string name, Code lo, Code hi) {
  AttributeMeta meta;
  meta.name = std::move(name);
  meta.kind = AttributeKind::integer_range;
  for (Code c = lo; c <= hi; ++c) meta.values.push_back(c);
  meta.validate();
  return meta;
}

AttributeMeta AttributeMeta::binned(std::string name, std::vector<double> uppers, Code first_code) {
  AttributeMeta meta;
  meta.name = std::move(name);
  meta.kind = AttributeKind::discretized_numeric;
  uppers.push_back(std::numeric_limits<double>::infinity());
  Code code = first_code;
  for (double u : uppers) {
    meta.bins.push_back({u, code});
    meta.values.push_back(code);
    ++code;
  }
  meta.validate();
  return meta;
}

void Dataset::validate() const {
  for (const auto& a : attributes) a.validate();
  class_attribute.validate();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& row = instances[i];
    if (row.size() != width()) {
      throw DataError("instance " + std::to_string(i) + " has " + std::to_string(row.size()) +
                      " entries, expected " + std::to_string(width()));
    }
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (!column(j).admits(row[j])) {
        throw DataError("instance " + std::to_string(i) + " column '" + column(j).name +
                        "' holds inadmissible code " + std::to_string(row[j]));
      }
    }
  }
}

Code discretize(double value, const AttributeMeta& meta) {
  if (meta.kind != AttributeKind::discretized_numeric || meta.bins.empty()) {
    throw DataError("attribute '" + meta.name + "' is not discretized-numeric");
  }
  if (!std::isfinite(value)) {
    throw DataError("non-finite value for attribute '" + meta.name + "'");
  }
  for (const auto& bin : meta.bins) {
    if (value <= bin.upper) return bin.code;
  }
  return meta.bins.back().code;
}

Dataset load_csv(const std::filesystem::path& path, const Schema& schema, std::string name) {
  if (!std::filesystem::exists(path)) throw DataError("missing file: " + path.string());
  const auto table = read_table(path);
  const std::size_t width = schema.attributes.size() + 1;
  bool header_ok = table.header.size() == width;
  for (std::size_t j = 0; header_ok && j < width; ++j) {
    const auto& expected = j < schema.attributes.size() ? schema.attributes[j].name
                                                        : schema.class_attribute.name;
    header_ok = table.header[j] == expected;
  }
  if (!header_ok) {
    std::string expected;
    for (const auto& a : schema.attributes) expected += a.name + ",";
    expected += schema.class_attribute.name;
    throw DataError("header mismatch in " + path.string() + ": expected " + expected);
  }

  Dataset ds;
  ds.name = name.empty() ? path.stem().string() : std::move(name);
  ds.attributes = schema.attributes;
  ds.class_attribute = schema.class_attribute;
  ds.instances.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    Row row(width);
    for (std::size_t j = 0; j < width; ++j) {
      auto code = map_cell(table.rows[i][j], ds.column(j));
      if (!code) {
        throw DataError("unmappable cell at row " + std::to_string(i + 1) + ", column '" +
                        ds.column(j).name + "': '" + table.rows[i][j] + "'");
      }
      row[j] = *code;
    }
    ds.instances.push_back(std::move(row));
  }
  ds.validate();
  return ds;
}

Dataset load_csv_inferred(const std::filesystem::path& path, std::string name) {
  if (!std::filesystem::exists(path)) throw DataError("missing file: " + path.string());
  const auto table = read_table(path);
  Schema schema;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    std::set<std::string> distinct;
    for (const auto& row : table.rows) distinct.insert(row[j]);
    std::vector<std::pair<Code, std::string>> entries;
    Code code = 1;
    for (const auto& v : distinct) entries.emplace_back(code++, v);
    auto meta = AttributeMeta::nominal(table.header[j], std::move(entries));
    if (j + 1 < table.header.size()) {
      schema.attributes.push_back(std::move(meta));
    } else {
      schema.class_attribute = std::move(meta);
    }
  }
  if (schema.attributes.empty()) throw DataError("no independent attributes in " + path.string());
  return load_csv(path, schema, std::move(name));
}

Split split(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must lie in (0, 1)");
  }
  if (dataset.instances.empty()) throw std::invalid_argument("cannot split an empty dataset");

  const std::size_t class_col = dataset.attribute_count();
  std::map<Code, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.instances.size(); ++i) {
    by_class[dataset.instances[i][class_col]].push_back(i);
  }

  Split result;
  result.seed = seed;
  Rng rng(seed, 0x5711);
  for (auto& [code, members] : by_class) {
    rng.shuffle(members.begin(), members.end());
    if (members.size() < 2) {
      result.warnings.push_back("class " + dataset.class_attribute.label(code) +
                                " has a single instance; placed in train");
      result.train.insert(result.train.end(), members.begin(), members.end());
      continue;
    }
    const auto n_train = static_cast<std::size_t>(
        std::ceil(train_fraction * static_cast<double>(members.size()) - 1e-9));
    result.train.insert(result.train.end(), members.begin(), members.begin() + n_train);
    result.test.insert(result.test.end(), members.begin() + n_train, members.end());
  }
  std::sort(result.train.begin(), result.train.end());
  std::sort(result.test.begin(), result.test.end());
  if (result.train.empty() || result.test.empty()) {
    throw std::invalid_argument("split leaves an empty train or test partition");
  }
  return result;
}

std::vector<Row> select_rows(const Dataset& dataset, std::span<const std::size_t> indices) {
  std::vector<Row> rows;
  rows.reserve(indices.size());
  for (auto i : indices) rows.push_back(dataset.instances.at(i));
  return rows;
}

Code majority_class(std::span<const Row> rows, const AttributeMeta& class_attribute) {
  std::map<Code, std::size_t> counts;
  for (const auto& row : rows) ++counts[row.back()];
  Code best = class_attribute.values.front();
  std::size_t best_count = 0;
  for (const auto& [code, count] : counts) {
    if (count > best_count) {
      best = code;
      best_count = count;
    }
  }
  return best;
}

std::vector<std::string> preset_names() { return {"iris", "ljb", "wbc"}; }

bool is_preset(std::string_view name) { return name == "iris" || name == "ljb" || name == "wbc"; }

Schema preset_schema(std::string_view name) {
  Schema s;
  if (name == "iris") {
    s.attributes = {
        AttributeMeta::binned("sepal_length", {5.5, 6.8}),
        AttributeMeta::binned("sepal_width", {2.8, 3.7}),
        AttributeMeta::binned("petal_length", {3.0, 5.0}),
        AttributeMeta::binned("petal_width", {0.8, 1.7}),
    };
    s.class_attribute = AttributeMeta::nominal(
        "class", {{1, "Iris-setosa"}, {2, "Iris-versicolor"}, {3, "Iris-virginica"}});
    return s;
  }
  if (name == "ljb") {
    // Tumor size and inv-nodes above the last finite bound fall into the last code.
    s.attributes = {
        AttributeMeta::binned("age", {39, 49, 59}),
        AttributeMeta::nominal("menopause", {{1, "lt40"}, {2, "ge40"}, {3, "premeno"}}),
        AttributeMeta::binned("tumor_size", {9, 19, 29, 39, 49}),
        AttributeMeta::binned("inv_nodes", {2, 5, 8, 11, 14, 17}),
        AttributeMeta::nominal("node_caps", {{1, "yes"}, {0, "no"}}),
        AttributeMeta::integer_range("deg_malig", 1, 3),
        AttributeMeta::nominal("breast", {{1, "right"}, {0, "left"}}),
        AttributeMeta::nominal("breast_quad", {{1, "left_up"},
                                               {2, "left_low"},
                                               {3, "right_up"},
                                               {4, "right_low"},
                                               {5, "central"}}),
        AttributeMeta::nominal("irradiat", {{1, "yes"}, {0, "no"}}),
    };
    s.class_attribute = AttributeMeta::nominal(
        "class", {{1, "recurrence-events"}, {0, "no-recurrence-events"}});
    return s;
  }
  if (name == "wbc") {
    for (const char* attr : {"clump_thickness", "cell_size_uniformity", "cell_shape_uniformity",
                             "marginal_adhesion", "epithelial_cell_size", "bare_nuclei",
                             "bland_chromatin", "normal_nucleoli", "mitoses"}) {
      s.attributes.push_back(AttributeMeta::integer_range(attr, 1, 10));
    }
    s.class_attribute = AttributeMeta::nominal("class", {{2, "benign"}, {4, "malignant"}});
    return s;
  }
  throw DataError("unknown preset: " + std::string(name));
}

std::filesystem::path data_directory() {
  if (const char* env = std::getenv("CARM_DATA_DIR"); env && *env) return env;
  return CARM_DATA_DIR;
}

std::filesystem::path preset_path(std::string_view name) {
  if (!is_preset(name)) throw DataError("unknown preset: " + std::string(name));
  return data_directory() / (std::string(name) + ".csv");
}

Dataset load_preset(std::string_view name) {
  return load_csv(preset_path(name), preset_schema(name), std::string(name));
}

}  // namespace carm
