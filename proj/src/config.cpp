#include "nnc/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "nnc/error.hpp"
#include "nnc/ir/model_io.hpp"

namespace nnc {

namespace {

using nlohmann::json;

class TomlParser {
 public:
  explicit TomlParser(std::string_view text) : text_(text) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    while (!at_end()) {
      skip_blank();
      if (at_end()) break;
      if (peek() == '[') {
        table = &open_table(root);
      } else {
        parse_pair(*table);
      }
      end_of_line();
    }
    return root;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::set<std::string> defined_tables_;

  [[noreturn]] void fail(const std::string& message) const {
    throw Error(ErrorCode::ConfigError, "line " + std::to_string(line_) + ": " + message);
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  char take() {
    const char c = text_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  void skip_spaces() {
    while (!at_end() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  void skip_comment() {
    if (peek() == '#') {
      while (!at_end() && peek() != '\n') ++pos_;
    }
  }
  // Blank lines and comment lines.
  void skip_blank() {
    for (;;) {
      skip_spaces();
      skip_comment();
      if (peek() == '\r') ++pos_;
      if (peek() == '\n') {
        take();
        continue;
      }
      return;
    }
  }
  // Whitespace, comments and newlines inside arrays.
  void skip_array_space() { skip_blank(); }

  void end_of_line() {
    skip_spaces();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (at_end()) return;
    if (peek() != '\n') fail("unexpected text after value");
    take();
  }

  std::string parse_simple_key() {
    skip_spaces();
    if (peek() == '"') return parse_basic_string();
    if (peek() == '\'') return parse_literal_string();
    std::string key;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) {
      key += take();
    }
    if (key.empty()) fail("expected a key");
    return key;
  }

  std::vector<std::string> parse_key() {
    std::vector<std::string> parts{parse_simple_key()};
    skip_spaces();
    while (peek() == '.') {
      ++pos_;
      parts.push_back(parse_simple_key());
      skip_spaces();
    }
    return parts;
  }

  static std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) out += (out.empty() ? "" : ".") + p;
    return out;
  }

  json& descend(json& root, const std::vector<std::string>& parts, std::size_t count) {
    json* node = &root;
    for (std::size_t i = 0; i < count; ++i) {
      json& child = (*node)[parts[i]];
      if (child.is_null()) child = json::object();
      if (!child.is_object()) fail("key '" + parts[i] + "' is not a table");
      node = &child;
    }
    return *node;
  }

  json& open_table(json& root) {
    ++pos_;
    if (peek() == '[') fail("arrays of tables are not supported");
    const auto parts = parse_key();
    skip_spaces();
    if (peek() != ']') fail("expected ']'");
    ++pos_;
    if (!defined_tables_.insert(join(parts)).second) fail("table [" + join(parts) + "] defined twice");
    return descend(root, parts, parts.size());
  }

  void parse_pair(json& table) {
    const auto parts = parse_key();
    skip_spaces();
    if (peek() != '=') fail("expected '=' after key");
    ++pos_;
    skip_spaces();
    json& parent = descend(table, parts, parts.size() - 1);
    if (parent.contains(parts.back())) fail("key '" + join(parts) + "' defined twice");
    parent[parts.back()] = parse_value();
  }

  json parse_value() {
    const char c = peek();
    if (c == '"') return parse_basic_string();
    if (c == '\'') return parse_literal_string();
    if (c == '[') return parse_array();
    if (c == '{') fail("inline tables are not supported");
    std::string token;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || std::string_view("+-._").find(peek()) != std::string_view::npos)) {
      token += take();
    }
    if (token.empty()) fail("expected a value");
    if (token == "true") return true;
    if (token == "false") return false;
    if (token == "inf" || token == "+inf") return std::numeric_limits<double>::infinity();
    if (token == "-inf") return -std::numeric_limits<double>::infinity();
    if (token == "nan" || token == "+nan" || token == "-nan") return std::numeric_limits<double>::quiet_NaN();
    std::string digits;
    for (char ch : token) {
      if (ch != '_') digits += ch;
    }
    const bool is_float = digits.find_first_of(".eE") != std::string::npos;
    const char* first = digits.data() + (digits.front() == '+' ? 1 : 0);
    const char* last = digits.data() + digits.size();
    if (is_float) {
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec != std::errc() || ptr != last) fail("malformed number '" + token + "'");
      return value;
    }
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) fail("malformed value '" + token + "'");
    return value;
  }

  std::string parse_basic_string() {
    ++pos_;
    std::string out;
    for (;;) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      const char c = take();
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (at_end()) fail("unterminated string");
      const char e = take();
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
  }

  std::string parse_literal_string() {
    ++pos_;
    std::string out;
    for (;;) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      const char c = take();
      if (c == '\'') return out;
      out += c;
    }
  }

  json parse_array() {
    ++pos_;
    json array = json::array();
    for (;;) {
      skip_array_space();
      if (peek() == ']') {
        ++pos_;
        return array;
      }
      array.push_back(parse_value());
      skip_array_space();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }
};

const std::set<std::string> kTrainingKeys = {"optimizer", "epochs", "batch_size", "learning_rate", "train",
                                             "loss", "metrics"};

[[noreturn]] void config_fail(const std::string& message) { throw Error(ErrorCode::ConfigError, message); }

std::string require_string(const json& value, const std::string& key) {
  if (!value.is_string()) config_fail("'" + key + "' must be a string");
  return value.get<std::string>();
}

int require_int(const json& value, const std::string& key) {
  if (!value.is_number_integer()) config_fail("'" + key + "' must be an integer");
  const auto v = value.get<std::int64_t>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    config_fail("'" + key + "' is out of range");
  }
  return static_cast<int>(v);
}

QuantizationScheme parse_scheme(const json& table) {
  if (!table.is_object()) config_fail("'quantization' must be a table");
  QuantizationScheme scheme;
  std::string policy = "fixed";
  std::string activations = "calibration";
  bool has_manual = false;
  for (const auto& [key, value] : table.items()) {
    if (key == "width") {
      scheme.width = require_int(value, "quantization.width");
    } else if (key == "policy") {
      policy = require_string(value, "quantization.policy");
    } else if (key == "frac_bits") {
      scheme.fixed_frac = require_int(value, "quantization.frac_bits");
    } else if (key == "activations") {
      activations = require_string(value, "quantization.activations");
    } else if (key == "manual") {
      if (!value.is_object()) config_fail("'quantization.manual' must be a table");
      for (const auto& [node, frac] : value.items()) {
        scheme.manual_frac[node] = require_int(frac, "quantization.manual." + node);
      }
      has_manual = true;
    } else {
      config_fail("unknown key 'quantization." + key + "'");
    }
  }
  if (scheme.width != 8 && scheme.width != 9 && scheme.width != 16) {
    config_fail("quantization.width must be 8, 9 or 16, got " + std::to_string(scheme.width));
  }
  if (policy == "fixed") {
    scheme.policy = ScalePolicy::PerNetworkFixed;
  } else if (policy == "per_layer") {
    scheme.policy = ScalePolicy::PerLayerDerived;
  } else {
    config_fail("quantization.policy must be \"fixed\" or \"per_layer\", got \"" + policy + "\"");
  }
  if (activations == "calibration") {
    scheme.activations = ActivationSource::Calibration;
  } else if (activations == "manual") {
    scheme.activations = ActivationSource::Manual;
    if (!has_manual) config_fail("quantization.activations = \"manual\" needs a [quantization.manual] table");
  } else {
    config_fail("quantization.activations must be \"calibration\" or \"manual\", got \"" + activations + "\"");
  }
  return scheme;
}

}  // namespace

nlohmann::json parse_toml(std::string_view text) { return TomlParser(text).parse(); }

ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir) {
  const json doc = parse_toml(text);
  ExperimentConfig cfg;
  auto resolve = [&](const json& value, const std::string& key) {
    std::filesystem::path p = require_string(value, key);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  };
  if (!base_dir.empty()) cfg.output_dir = base_dir / cfg.output_dir;
  bool has_model = false;
  for (const auto& [key, value] : doc.items()) {
    if (key == "model") {
      cfg.model = resolve(value, key);
      has_model = true;
    } else if (key == "output_dir") {
      cfg.output_dir = resolve(value, key);
    } else if (key == "calibration") {
      cfg.calibration = resolve(value, key);
    } else if (key == "dataset") {
      cfg.dataset = resolve(value, key);
    } else if (key == "iterations") {
      cfg.iterations = require_int(value, key);
      if (cfg.iterations < 1) config_fail("'iterations' must be positive");
    } else if (key == "quantization") {
      cfg.quantization = parse_scheme(value);
    } else if (kTrainingKeys.count(key) != 0) {
      cfg.warnings.push_back("ignoring training key '" + key + "'; training happens outside this tool");
    } else {
      config_fail("unknown key '" + key + "'");
    }
  }
  if (!has_model) config_fail("missing required key 'model'");
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment_config(text.str(), path.parent_path());
}

std::vector<double> tensor_from_json(const nlohmann::json& value, Shape shape, const std::string& where) {
  auto number = [&](const json& v, const std::string& at) {
    if (!v.is_number()) throw Error(ErrorCode::SchemaError, at + ": expected a number");
    return v.get<double>();
  };
  if (!value.is_array()) throw Error(ErrorCode::SchemaError, where + ": expected an array");
  std::vector<double> out;
  out.reserve(shape.size());
  if (!value.empty() && value.front().is_array()) {
    if (static_cast<int>(value.size()) != shape.channels) {
      throw Error(ErrorCode::SchemaError, where + ": expected " + std::to_string(shape.channels) + " channels, got " +
                                              std::to_string(value.size()));
    }
    for (std::size_t c = 0; c < value.size(); ++c) {
      const std::string at = where + "[" + std::to_string(c) + "]";
      const json& row = value[c];
      if (!row.is_array() || static_cast<int>(row.size()) != shape.samples) {
        throw Error(ErrorCode::SchemaError, at + ": expected " + std::to_string(shape.samples) + " samples");
      }
      for (std::size_t s = 0; s < row.size(); ++s) out.push_back(number(row[s], at + "[" + std::to_string(s) + "]"));
    }
    return out;
  }
  if (value.size() != shape.size()) {
    throw Error(ErrorCode::SchemaError, where + ": expected " + std::to_string(shape.size()) + " values, got " +
                                            std::to_string(value.size()));
  }
  for (std::size_t i = 0; i < value.size(); ++i) out.push_back(number(value[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Dataset load_dataset(const std::filesystem::path& path, Shape input_shape, bool require_labels) {
  const json doc = read_json_file(path);
  if (!doc.is_object()) throw Error(ErrorCode::SchemaError, "$: dataset must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "inputs" && key != "labels") throw Error(ErrorCode::SchemaError, "$." + key + ": unknown key");
  }
  if (!doc.contains("inputs") || !doc["inputs"].is_array()) {
    throw Error(ErrorCode::SchemaError, "$.inputs: missing required array");
  }
  Dataset data;
  const json& inputs = doc["inputs"];
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    data.inputs.push_back(tensor_from_json(inputs[i], input_shape, "$.inputs[" + std::to_string(i) + "]"));
  }
  if (doc.contains("labels")) {
    const json& labels = doc["labels"];
    if (!labels.is_array() || labels.size() != inputs.size()) {
      throw Error(ErrorCode::SchemaError, "$.labels: expected one integer label per input");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!labels[i].is_number_integer()) {
        throw Error(ErrorCode::SchemaError, "$.labels[" + std::to_string(i) + "]: expected an integer");
      }
      data.labels.push_back(labels[i].get<int>());
    }
  } else if (require_labels) {
    throw Error(ErrorCode::SchemaError, "$.labels: missing required array");
  }
  if (data.inputs.empty()) throw Error(ErrorCode::EmptyDataset, path.string() + " has no inputs");
  return data;
}

}  // namespace nnc
