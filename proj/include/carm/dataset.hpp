#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace carm {

using Code = std::int32_t;
using Row = std::vector<Code>;

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AttributeKind { nominal, discretized_numeric, integer_range };

std::string_view to_string(AttributeKind kind);
AttributeKind attribute_kind_from_string(std::string_view text);

/// A bin covers (previous upper, upper]. The last bin's upper is +inf.
struct Bin {
  double upper;
  Code code;
};

struct AttributeMeta {
  std::string name;
  AttributeKind kind = AttributeKind::nominal;
  /// Admissible discrete codes, ascending.
  std::vector<Code> values;
  /// Nominal only: text label for each entry of `values`.
  std::vector<std::string> labels;
  /// Discretized-numeric only.
  std::vector<Bin> bins;

  bool admits(Code code) const;
  /// Label for a code; bins render as intervals, integer ranges as the number.
  std::string label(Code code) const;
  /// Throws DataError when an invariant is broken.
  void validate() const;

  static AttributeMeta nominal(std::string name, std::vector<std::pair<Code, std::string>> entries);
  static AttributeMeta integer_range(std::string name, Code lo, Code hi);
  /// `uppers` lists the finite upper bounds; codes run from `first_code` upward
  /// and one extra bin up to +inf is appended.
  static AttributeMeta binned(std::string name, std::vector<double> uppers, Code first_code = 1);
};

struct Dataset {
  std::string name;
  std::vector<AttributeMeta> attributes;
  AttributeMeta class_attribute;
  /// Each row holds one code per attribute followed by the class code.
  std::vector<Row> instances;

  std::size_t attribute_count() const { return attributes.size(); }
  std::size_t width() const { return attributes.size() + 1; }
  const AttributeMeta& column(std::size_t j) const {
    return j < attributes.size() ? attributes[j] : class_attribute;
  }
  /// Checks every row against the column metadata.
  void validate() const;
};

struct Schema {
  std::vector<AttributeMeta> attributes;
  AttributeMeta class_attribute;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

/// Code of the first bin whose upper bound is >= value.
Code discretize(double value, const AttributeMeta& meta);

Dataset load_csv(const std::filesystem::path& path, const Schema& schema, std::string name = {});

/// Every column is treated as nominal; codes 1..k follow the sorted distinct cells.
Dataset load_csv_inferred(const std::filesystem::path& path, std::string name = {});

/// Stratified by class; per-class train count is ceil(fraction * size).
Split split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

std::vector<Row> select_rows(const Dataset& dataset, std::span<const std::size_t> indices);

/// Modal class code, ties to the lowest code.
Code majority_class(std::span<const Row> rows, const AttributeMeta& class_attribute);

// Built-in presets: "iris", "ljb", "wbc".
std::vector<std::string> preset_names();
bool is_preset(std::string_view name);
Schema preset_schema(std::string_view name);
std::filesystem::path data_directory();
std::filesystem::path preset_path(std::string_view name);
Dataset load_preset(std::string_view name);

}  // namespace carm
