#include "nnc/ir/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "nnc/error.hpp"

namespace nnc {
namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& path, const std::string& message) {
  throw Error(ErrorCode::SchemaError, path + ": " + message);
}

void reject_unknown(const json& object, const std::string& path, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : object.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) schema_error(path + "." + key, "unknown key");
  }
}

const json& require_key(const json& object, const std::string& path, const std::string& key) {
  auto it = object.find(key);
  if (it == object.end()) schema_error(path + "." + key, "missing required key");
  return *it;
}

const json& require_object(const json& value, const std::string& path) {
  if (!value.is_object()) schema_error(path, "expected an object");
  return value;
}

int read_int(const json& value, const std::string& path) {
  if (!value.is_number_integer()) schema_error(path, "expected an integer");
  const auto v = value.get<long long>();
  if (v < -(1LL << 30) || v > (1LL << 30)) schema_error(path, "integer out of range");
  return static_cast<int>(v);
}

int int_attr(const json& attrs, const std::string& path, const std::string& key, std::optional<int> fallback) {
  auto it = attrs.find(key);
  if (it == attrs.end()) {
    if (!fallback) schema_error(path + "." + key, "missing required key");
    return *fallback;
  }
  return read_int(*it, path + "." + key);
}

bool bool_attr(const json& attrs, const std::string& path, const std::string& key) {
  auto it = attrs.find(key);
  if (it == attrs.end()) return false;
  if (!it->is_boolean()) schema_error(path + "." + key, "expected a boolean");
  return it->get<bool>();
}

double read_number(const json& value, const std::string& path) {
  if (!value.is_number()) schema_error(path, "expected a number");
  return value.get<double>();
}

// Flattens a rectangular nested array of the given depth into row-major order.
void flatten_into(const json& value, const std::string& path, int depth, std::vector<double>& out,
                  std::vector<std::size_t>& extents, int level = 0) {
  if (depth == 0) {
    out.push_back(read_number(value, path));
    return;
  }
  if (!value.is_array()) schema_error(path, "expected an array nested " + std::to_string(depth) + " deep");
  if (static_cast<int>(extents.size()) <= level) {
    extents.push_back(value.size());
  } else if (extents[static_cast<std::size_t>(level)] != value.size()) {
    schema_error(path, "ragged array");
  }
  for (std::size_t i = 0; i < value.size(); ++i) {
    flatten_into(value[i], path + "[" + std::to_string(i) + "]", depth - 1, out, extents, level + 1);
  }
}

std::vector<double> read_array(const json& weights, const std::string& path, const std::string& key, int depth) {
  const json& value = require_key(weights, path, key);
  std::vector<double> out;
  std::vector<std::size_t> extents;
  flatten_into(value, path + "." + key, depth, out, extents);
  return out;
}

json nest(const std::vector<double>& flat, const std::vector<std::size_t>& extents) {
  if (extents.size() == 1) return json(flat);
  std::size_t inner = 1;
  for (std::size_t i = 1; i < extents.size(); ++i) inner *= extents[i];
  const std::vector<std::size_t> rest(extents.begin() + 1, extents.end());
  json out = json::array();
  for (std::size_t i = 0; i < extents[0]; ++i) {
    std::vector<double> slice(flat.begin() + static_cast<std::ptrdiff_t>(i * inner),
                              flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * inner));
    out.push_back(nest(slice, rest));
  }
  return out;
}

LayerNode parse_node(const json& value, const std::string& path) {
  require_object(value, path);
  reject_unknown(value, path, {"id", "kind", "inputs", "attrs", "weights"});

  LayerNode node;
  const json& id = require_key(value, path, "id");
  if (!id.is_string() || id.get<std::string>().empty()) schema_error(path + ".id", "expected a non-empty string");
  node.id = id.get<std::string>();

  const json& kind = require_key(value, path, "kind");
  if (!kind.is_string()) schema_error(path + ".kind", "expected a string");
  auto parsed = layer_kind_from_string(kind.get<std::string>());
  if (!parsed) schema_error(path + ".kind", "unknown layer kind '" + kind.get<std::string>() + "'");
  node.kind = *parsed;

  if (auto it = value.find("inputs"); it != value.end()) {
    if (!it->is_array()) schema_error(path + ".inputs", "expected an array of node ids");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& in = (*it)[i];
      if (!in.is_string()) schema_error(path + ".inputs[" + std::to_string(i) + "]", "expected a string");
      node.inputs.push_back(in.get<std::string>());
    }
  } else if (node.kind != LayerKind::Input) {
    schema_error(path + ".inputs", "missing required key");
  }

  static const json kEmpty = json::object();
  const std::string apath = path + ".attrs";
  const json& attrs = value.contains("attrs") ? require_object(value.at("attrs"), apath) : kEmpty;
  LayerAttrs& a = node.attrs;
  switch (node.kind) {
    case LayerKind::Conv1D:
      reject_unknown(attrs, apath, {"filters", "kernel", "stride", "pad_left", "pad_right", "fused_relu"});
      a.filters = int_attr(attrs, apath, "filters", std::nullopt);
      a.kernel = int_attr(attrs, apath, "kernel", std::nullopt);
      a.stride = int_attr(attrs, apath, "stride", 1);
      a.pad_left = int_attr(attrs, apath, "pad_left", 0);
      a.pad_right = int_attr(attrs, apath, "pad_right", 0);
      a.fused_relu = bool_attr(attrs, apath, "fused_relu");
      break;
    case LayerKind::Dense:
      reject_unknown(attrs, apath, {"units", "fused_relu"});
      a.units = int_attr(attrs, apath, "units", std::nullopt);
      a.fused_relu = bool_attr(attrs, apath, "fused_relu");
      break;
    case LayerKind::MaxPool1D:
    case LayerKind::AvgPool1D:
      reject_unknown(attrs, apath, {"pool_size", "stride", "fused_relu"});
      a.kernel = int_attr(attrs, apath, "pool_size", std::nullopt);
      a.stride = int_attr(attrs, apath, "stride", a.kernel);
      a.fused_relu = bool_attr(attrs, apath, "fused_relu");
      break;
    case LayerKind::ZeroPad1D:
      reject_unknown(attrs, apath, {"pad_left", "pad_right"});
      a.pad_left = int_attr(attrs, apath, "pad_left", 0);
      a.pad_right = int_attr(attrs, apath, "pad_right", 0);
      break;
    case LayerKind::BatchNorm:
      reject_unknown(attrs, apath, {"epsilon"});
      a.epsilon = attrs.contains("epsilon") ? read_number(attrs.at("epsilon"), apath + ".epsilon") : 1e-3;
      break;
    case LayerKind::Add:
      reject_unknown(attrs, apath, {"fused_relu"});
      a.fused_relu = bool_attr(attrs, apath, "fused_relu");
      break;
    default:
      reject_unknown(attrs, apath, {});
      break;
  }

  const std::string wpath = path + ".weights";
  const json& weights = value.contains("weights") ? require_object(value.at("weights"), wpath) : kEmpty;
  LayerWeights& w = node.weights;
  switch (node.kind) {
    case LayerKind::Conv1D:
      reject_unknown(weights, wpath, {"kernel", "bias"});
      w.kernel = read_array(weights, wpath, "kernel", 3);
      w.bias = read_array(weights, wpath, "bias", 1);
      break;
    case LayerKind::Dense:
      reject_unknown(weights, wpath, {"kernel", "bias"});
      w.kernel = read_array(weights, wpath, "kernel", 2);
      w.bias = read_array(weights, wpath, "bias", 1);
      break;
    case LayerKind::BatchNorm:
      reject_unknown(weights, wpath, {"mean", "variance", "gamma", "beta"});
      w.mean = read_array(weights, wpath, "mean", 1);
      w.variance = read_array(weights, wpath, "variance", 1);
      w.gamma = read_array(weights, wpath, "gamma", 1);
      w.beta = read_array(weights, wpath, "beta", 1);
      break;
    case LayerKind::Affine:
      reject_unknown(weights, wpath, {"scale", "offset"});
      w.scale = read_array(weights, wpath, "scale", 1);
      w.offset = read_array(weights, wpath, "offset", 1);
      break;
    default:
      reject_unknown(weights, wpath, {});
      break;
  }
  return node;
}

json node_to_json(const LayerNode& node) {
  json out;
  out["id"] = node.id;
  out["kind"] = std::string(to_string(node.kind));
  out["inputs"] = node.inputs;
  const LayerAttrs& a = node.attrs;
  const LayerWeights& w = node.weights;
  json attrs = json::object();
  json weights = json::object();
  switch (node.kind) {
    case LayerKind::Conv1D: {
      attrs = {{"filters", a.filters}, {"kernel", a.kernel},     {"stride", a.stride},
               {"pad_left", a.pad_left}, {"pad_right", a.pad_right}, {"fused_relu", a.fused_relu}};
      const std::size_t per_channel = static_cast<std::size_t>(a.filters) * static_cast<std::size_t>(a.kernel);
      if (per_channel == 0 || w.kernel.size() % per_channel != 0) {
        throw Error(ErrorCode::InvalidGraph, "node '" + node.id + "': kernel size does not match filters x taps");
      }
      weights["kernel"] = nest(w.kernel, {static_cast<std::size_t>(a.filters), w.kernel.size() / per_channel,
                                          static_cast<std::size_t>(a.kernel)});
      weights["bias"] = w.bias;
      break;
    }
    case LayerKind::Dense: {
      attrs = {{"units", a.units}, {"fused_relu", a.fused_relu}};
      const auto units = static_cast<std::size_t>(a.units);
      if (units == 0 || w.kernel.size() % units != 0) {
        throw Error(ErrorCode::InvalidGraph, "node '" + node.id + "': kernel size does not match units");
      }
      weights["kernel"] = nest(w.kernel, {units, w.kernel.size() / units});
      weights["bias"] = w.bias;
      break;
    }
    case LayerKind::MaxPool1D:
    case LayerKind::AvgPool1D:
      attrs = {{"pool_size", a.kernel}, {"stride", a.stride}, {"fused_relu", a.fused_relu}};
      break;
    case LayerKind::ZeroPad1D:
      attrs = {{"pad_left", a.pad_left}, {"pad_right", a.pad_right}};
      break;
    case LayerKind::BatchNorm:
      attrs = {{"epsilon", a.epsilon}};
      weights = {{"mean", w.mean}, {"variance", w.variance}, {"gamma", w.gamma}, {"beta", w.beta}};
      break;
    case LayerKind::Affine:
      weights = {{"scale", w.scale}, {"offset", w.offset}};
      break;
    case LayerKind::Add:
      attrs = {{"fused_relu", a.fused_relu}};
      break;
    default:
      break;
  }
  if (!attrs.empty()) out["attrs"] = attrs;
  if (!weights.empty()) out["weights"] = weights;
  return out;
}

}  // namespace

Graph load_model(const json& document) {
  const std::string root = "$";
  require_object(document, root);
  reject_unknown(document, root, {"format_version", "input", "nodes", "output"});

  const json& version = require_key(document, root, "format_version");
  if (!version.is_number_integer()) schema_error("$.format_version", "expected an integer");
  if (version.get<long long>() != kModelFormatVersion) {
    throw Error(ErrorCode::VersionError, "unsupported format_version " + version.dump() + " (expected " +
                                             std::to_string(kModelFormatVersion) + ")");
  }

  Graph graph;
  const json& input = require_object(require_key(document, root, "input"), "$.input");
  reject_unknown(input, "$.input", {"channels", "samples"});
  graph.input_shape.channels = read_int(require_key(input, "$.input", "channels"), "$.input.channels");
  graph.input_shape.samples = read_int(require_key(input, "$.input", "samples"), "$.input.samples");

  const json& nodes = require_key(document, root, "nodes");
  if (!nodes.is_array()) schema_error("$.nodes", "expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string path = "$.nodes[" + std::to_string(i) + "]";
    LayerNode node = parse_node(nodes[i], path);
    if (graph.contains(node.id)) schema_error(path + ".id", "duplicate node id '" + node.id + "'");
    graph.add(std::move(node));
  }
  // The Input node may be left implicit; it is then named "input".
  const bool has_input = std::any_of(graph.nodes.begin(), graph.nodes.end(),
                                     [](const auto& kv) { return kv.second.kind == LayerKind::Input; });
  if (!has_input) {
    if (graph.contains("input")) schema_error("$.nodes", "node 'input' is reserved for the implicit Input node");
    graph.add(LayerNode{.id = "input", .kind = LayerKind::Input});
  }

  const json& output = require_key(document, root, "output");
  if (!output.is_string()) schema_error("$.output", "expected a node id string");
  graph.output = output.get<std::string>();
  return graph;
}

json save_model(const Graph& graph) {
  json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["input"] = {{"channels", graph.input_shape.channels}, {"samples", graph.input_shape.samples}};
  json nodes = json::array();
  // Topological order when possible keeps documents readable; fall back to id order.
  std::vector<std::string> order;
  try {
    order = topo_order(graph);
  } catch (const Error&) {
    for (const auto& [id, node] : graph.nodes) order.push_back(id);
  }
  for (const auto& id : order) nodes.push_back(node_to_json(graph.nodes.at(id)));
  doc["nodes"] = std::move(nodes);
  doc["output"] = graph.output;
  return doc;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
}

void write_json_file(const json& value, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << value.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

Graph load_model_file(const std::filesystem::path& path) { return load_model(read_json_file(path)); }

void save_model_file(const Graph& graph, const std::filesystem::path& path) {
  write_json_file(save_model(graph), path);
}

}  // namespace nnc
