#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nnc/interpreter.hpp"
#include "nnc/quantizer.hpp"

namespace nnc {

/// Parses the TOML subset used by experiment files into a JSON object:
/// comments, [table] and [dotted.table] headers, bare/quoted/dotted keys,
/// basic and literal strings, integers (with _ separators), floats,
/// booleans and (possibly multi-line) arrays. Inline tables, dates and
/// array-of-tables are rejected. Throws ConfigError with a line number.
nlohmann::json parse_toml(std::string_view text);

struct ExperimentConfig {
  std::filesystem::path model;
  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> calibration;
  std::optional<std::filesystem::path> dataset;
  int iterations = 1;
  /// Absent when the file has no [quantization] table (float flow).
  std::optional<QuantizationScheme> quantization;
  /// Ignored training keys and similar notes for the user.
  std::vector<std::string> warnings;
};

/// Relative paths resolve against `base_dir`. Throws ConfigError on unknown
/// keys, wrong types or values outside their domain (width must be 8, 9 or 16).
ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// One tensor as nested [channel][sample] arrays or a flat channel-major
/// array. Throws SchemaError on a shape or type mismatch.
std::vector<double> tensor_from_json(const nlohmann::json& value, Shape shape, const std::string& where = "$");

/// {"inputs": [...], "labels": [...]}; labels are optional for calibration
/// files. Throws EmptyDataset when there are no inputs.
Dataset load_dataset(const std::filesystem::path& path, Shape input_shape, bool require_labels = true);

}  // namespace nnc
