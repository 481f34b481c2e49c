#include "nnc/ir/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "nnc/error.hpp"

namespace nnc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::VersionError: return "VersionError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::InvalidGraph: return "InvalidGraph";
    case ErrorCode::PreconditionError: return "PreconditionError";
    case ErrorCode::NonPositiveOutputLength: return "NonPositiveOutputLength";
    case ErrorCode::CycleDetected: return "CycleDetected";
    case ErrorCode::UnfusablePadding: return "UnfusablePadding";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::InteriorSoftmax: return "InteriorSoftmax";
    case ErrorCode::AllZero: return "AllZero";
    case ErrorCode::MissingStats: return "MissingStats";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::FormatMismatch: return "FormatMismatch";
    case ErrorCode::UnsupportedLayer: return "UnsupportedLayer";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::IoError: return "IoError";
  }
  return "Error";
}

std::string to_string(const Shape& shape) {
  return "(" + std::to_string(shape.channels) + "," + std::to_string(shape.samples) + ")";
}

namespace {

constexpr std::pair<LayerKind, std::string_view> kKindNames[] = {
    {LayerKind::Input, "Input"},         {LayerKind::Conv1D, "Conv1D"},
    {LayerKind::Dense, "Dense"},         {LayerKind::MaxPool1D, "MaxPool1D"},
    {LayerKind::AvgPool1D, "AvgPool1D"}, {LayerKind::BatchNorm, "BatchNorm"},
    {LayerKind::Affine, "Affine"},       {LayerKind::Add, "Add"},
    {LayerKind::ReLU, "ReLU"},           {LayerKind::ZeroPad1D, "ZeroPad1D"},
    {LayerKind::Flatten, "Flatten"},     {LayerKind::SoftMax, "SoftMax"},
};

struct InferFailure {
  ErrorCode code;
  std::string message;
};

// Output shape of one node given its input shapes; nullopt with `failure` set
// when the configuration cannot produce a tensor.
std::optional<Shape> infer_node(const LayerNode& node, const std::vector<Shape>& in,
                                InferFailure& failure) {
  auto fail = [&](ErrorCode code, std::string message) -> std::optional<Shape> {
    failure = {code, std::move(message)};
    return std::nullopt;
  };
  const LayerAttrs& a = node.attrs;
  switch (node.kind) {
    case LayerKind::Input:
      return fail(ErrorCode::InvalidGraph, "Input node has no inferable shape");
    case LayerKind::Conv1D:
    case LayerKind::MaxPool1D:
    case LayerKind::AvgPool1D: {
      const long len = window_output_length(in[0].samples, a.kernel, a.stride, a.pad_left, a.pad_right);
      if (len <= 0) {
        return fail(ErrorCode::NonPositiveOutputLength,
                    "window " + std::to_string(a.kernel) + " exceeds padded input of " +
                        std::to_string(in[0].samples + a.pad_left + a.pad_right) + " samples");
      }
      const int channels = node.kind == LayerKind::Conv1D ? a.filters : in[0].channels;
      return Shape{channels, static_cast<int>(len)};
    }
    case LayerKind::Dense:
      return Shape{1, a.units};
    case LayerKind::Flatten:
      return Shape{1, in[0].channels * in[0].samples};
    case LayerKind::ZeroPad1D:
      return Shape{in[0].channels, in[0].samples + a.pad_left + a.pad_right};
    case LayerKind::Add:
      for (std::size_t i = 1; i < in.size(); ++i) {
        if (!(in[i] == in[0])) {
          return fail(ErrorCode::ShapeMismatch, "Add operands " + to_string(in[0]) + " and " +
                                                    to_string(in[i]) + " differ");
        }
      }
      return in[0];
    case LayerKind::ReLU:
    case LayerKind::BatchNorm:
    case LayerKind::Affine:
    case LayerKind::SoftMax:
      return in[0];
  }
  return fail(ErrorCode::InvalidGraph, "unknown layer kind");
}

std::size_t expected_arity_min(LayerKind kind) {
  switch (kind) {
    case LayerKind::Input: return 0;
    case LayerKind::Add: return 2;
    default: return 1;
  }
}

bool arity_ok(const LayerNode& node) {
  const std::size_t n = node.inputs.size();
  if (node.kind == LayerKind::Input) return n == 0;
  if (node.kind == LayerKind::Add) return n >= 2;
  return n == 1;
}

void check_attrs(const LayerNode& node, std::vector<std::string>& problems) {
  const LayerAttrs& a = node.attrs;
  switch (node.kind) {
    case LayerKind::Conv1D:
      if (a.filters < 1) problems.push_back("filters must be >= 1");
      if (a.kernel < 1) problems.push_back("kernel must be >= 1");
      if (a.stride < 1) problems.push_back("stride must be >= 1");
      if (a.pad_left < 0 || a.pad_right < 0) problems.push_back("padding must be >= 0");
      break;
    case LayerKind::MaxPool1D:
    case LayerKind::AvgPool1D:
      if (a.kernel < 1) problems.push_back("pool size must be >= 1");
      if (a.stride < 1) problems.push_back("stride must be >= 1");
      if (a.pad_left != 0 || a.pad_right != 0) problems.push_back("pooling layers take no padding");
      break;
    case LayerKind::ZeroPad1D:
      if (a.pad_left < 0 || a.pad_right < 0) problems.push_back("padding must be >= 0");
      break;
    case LayerKind::Dense:
      if (a.units < 1) problems.push_back("units must be >= 1");
      break;
    case LayerKind::BatchNorm:
      if (!std::isfinite(a.epsilon) || a.epsilon < 0) problems.push_back("epsilon must be finite and >= 0");
      break;
    default:
      break;
  }
  if (a.fused_relu && !accepts_fused_relu(node.kind)) {
    problems.push_back(std::string(to_string(node.kind)) + " cannot carry a fused ReLU");
  }
}

void check_array(std::string_view name, const std::vector<double>& values, std::size_t expected,
                 std::vector<std::string>& problems) {
  if (values.size() != expected) {
    std::ostringstream os;
    os << name << " has " << values.size() << " elements, expected " << expected;
    problems.push_back(os.str());
    return;
  }
  if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
    problems.push_back(std::string(name) + " contains non-finite values");
  }
}

void check_unused(std::string_view name, const std::vector<double>& values, std::vector<std::string>& problems) {
  if (!values.empty()) problems.push_back(std::string(name) + " is not a parameter of this layer kind");
}

void check_weights(const LayerNode& node, const Shape& in, std::vector<std::string>& problems) {
  const LayerWeights& w = node.weights;
  const auto c = static_cast<std::size_t>(in.channels);
  bool kernel_bias = false, bn = false, affine = false;
  switch (node.kind) {
    case LayerKind::Conv1D:
      check_array("kernel", w.kernel,
                  static_cast<std::size_t>(node.attrs.filters) * c * static_cast<std::size_t>(node.attrs.kernel),
                  problems);
      check_array("bias", w.bias, static_cast<std::size_t>(node.attrs.filters), problems);
      kernel_bias = true;
      break;
    case LayerKind::Dense:
      check_array("kernel", w.kernel, static_cast<std::size_t>(node.attrs.units) * in.size(), problems);
      check_array("bias", w.bias, static_cast<std::size_t>(node.attrs.units), problems);
      kernel_bias = true;
      break;
    case LayerKind::BatchNorm:
      check_array("mean", w.mean, c, problems);
      check_array("variance", w.variance, c, problems);
      check_array("gamma", w.gamma, c, problems);
      check_array("beta", w.beta, c, problems);
      bn = true;
      break;
    case LayerKind::Affine:
      check_array("scale", w.scale, c, problems);
      check_array("offset", w.offset, c, problems);
      affine = true;
      break;
    default:
      break;
  }
  if (!kernel_bias) {
    check_unused("kernel", w.kernel, problems);
    check_unused("bias", w.bias, problems);
  }
  if (!bn) {
    check_unused("mean", w.mean, problems);
    check_unused("variance", w.variance, problems);
    check_unused("gamma", w.gamma, problems);
    check_unused("beta", w.beta, problems);
  }
  if (!affine) {
    check_unused("scale", w.scale, problems);
    check_unused("offset", w.offset, problems);
  }
}

// Topological order over the subgraph of resolvable edges. Returns the nodes
// it could place; fewer than nodes.size() means a cycle.
std::vector<std::string> kahn(const Graph& graph) {
  std::map<std::string, std::size_t> pending;
  std::map<std::string, std::vector<std::string>> successors;
  for (const auto& [id, node] : graph.nodes) {
    std::set<std::string> distinct(node.inputs.begin(), node.inputs.end());
    std::size_t count = 0;
    for (const auto& in : distinct) {
      if (graph.contains(in)) {
        successors[in].push_back(id);
        ++count;
      }
    }
    pending[id] = count;
  }
  std::set<std::string> ready;
  for (const auto& [id, count] : pending) {
    if (count == 0) ready.insert(id);
  }
  std::vector<std::string> order;
  order.reserve(graph.nodes.size());
  while (!ready.empty()) {
    std::string id = *ready.begin();
    ready.erase(ready.begin());
    for (const auto& succ : successors[id]) {
      if (--pending[succ] == 0) ready.insert(succ);
    }
    order.push_back(std::move(id));
  }
  return order;
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "Unknown";
}

std::optional<LayerKind> layer_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

bool accepts_fused_relu(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv1D:
    case LayerKind::Dense:
    case LayerKind::MaxPool1D:
    case LayerKind::AvgPool1D:
    case LayerKind::Add:
      return true;
    default:
      return false;
  }
}

const LayerNode& Graph::node(const std::string& id) const {
  auto it = nodes.find(id);
  if (it == nodes.end()) throw Error(ErrorCode::InvalidGraph, "no node '" + id + "'");
  return it->second;
}

void Graph::add(LayerNode node) {
  if (contains(node.id)) throw Error(ErrorCode::InvalidGraph, "duplicate node id '" + node.id + "'");
  std::string id = node.id;
  nodes.emplace(std::move(id), std::move(node));
}

long window_output_length(long samples, int kernel, int stride, int pad_left, int pad_right) {
  const long padded = samples + pad_left + pad_right;
  if (padded < kernel || stride < 1) return 0;
  return (padded - kernel) / stride + 1;
}

ValidationReport validate(const Graph& graph) {
  ValidationReport report;
  auto add = [&](const std::string& node, std::string message) {
    report.violations.push_back({node, std::move(message)});
  };

  if (graph.input_shape.channels < 1 || graph.input_shape.samples < 1) {
    add("", "input shape " + to_string(graph.input_shape) + " must be positive");
  }

  std::vector<std::string> inputs;
  for (const auto& [id, node] : graph.nodes) {
    if (id != node.id) add(id, "map key does not match node id '" + node.id + "'");
    if (node.kind == LayerKind::Input) inputs.push_back(id);
    if (!arity_ok(node)) {
      add(id, std::string(to_string(node.kind)) + " takes " +
                  (node.kind == LayerKind::Add ? "at least 2" : std::to_string(expected_arity_min(node.kind))) +
                  " inputs, got " + std::to_string(node.inputs.size()));
    }
    for (const auto& in : node.inputs) {
      if (!graph.contains(in)) add(id, "input '" + in + "' does not resolve");
    }
    std::vector<std::string> problems;
    check_attrs(node, problems);
    for (auto& p : problems) add(id, std::move(p));
  }
  if (inputs.size() != 1) {
    add("", "graph must have exactly one Input node, found " + std::to_string(inputs.size()));
  }
  if (!graph.contains(graph.output)) {
    add("", "output '" + graph.output + "' does not resolve");
  }

  const std::vector<std::string> order = kahn(graph);
  if (order.size() != graph.nodes.size()) {
    add("", "graph contains a cycle");
    return report;
  }

  // Reachability from the Input node.
  if (inputs.size() == 1 && graph.contains(graph.output)) {
    std::set<std::string> reached{inputs.front()};
    for (const auto& id : order) {
      const LayerNode& node = graph.nodes.at(id);
      if (std::any_of(node.inputs.begin(), node.inputs.end(),
                      [&](const std::string& in) { return reached.count(in) != 0; })) {
        reached.insert(id);
      }
    }
    if (reached.count(graph.output) == 0) add("", "output '" + graph.output + "' is not reachable from the input");
  }

  const ConsumerMap consumers = consumers_of(graph);
  for (const auto& [id, users] : consumers) {
    if (users.empty() && id != graph.output) add(id, "result is never consumed");
  }

  // Shape inference and weight dimensions, skipping nodes whose inputs failed.
  if (!report.ok()) return report;
  ShapeMap shapes;
  for (const auto& id : order) {
    const LayerNode& node = graph.nodes.at(id);
    if (node.kind == LayerKind::Input) {
      shapes[id] = graph.input_shape;
      continue;
    }
    std::vector<Shape> in;
    for (const auto& src : node.inputs) {
      auto it = shapes.find(src);
      if (it == shapes.end()) break;
      in.push_back(it->second);
    }
    if (in.size() != node.inputs.size()) continue;
    std::vector<std::string> problems;
    check_weights(node, in[0], problems);
    for (auto& p : problems) add(id, std::move(p));
    InferFailure failure{};
    if (auto shape = infer_node(node, in, failure)) {
      shapes[id] = *shape;
    } else {
      add(id, std::string(to_string(failure.code)) + ": " + failure.message);
    }
  }
  return report;
}

ShapeMap infer_shapes(const Graph& graph) {
  const std::vector<std::string> order = topo_order(graph);
  const std::string& input = input_node_id(graph);
  ShapeMap shapes;
  for (const auto& id : order) {
    const LayerNode& node = graph.nodes.at(id);
    if (id == input) {
      shapes[id] = graph.input_shape;
      continue;
    }
    if (!arity_ok(node)) throw Error(ErrorCode::InvalidGraph, "node '" + id + "' has wrong input count");
    std::vector<Shape> in;
    in.reserve(node.inputs.size());
    for (const auto& src : node.inputs) in.push_back(shapes.at(src));
    InferFailure failure{};
    auto shape = infer_node(node, in, failure);
    if (!shape) throw Error(failure.code, "node '" + id + "': " + failure.message);
    shapes[id] = *shape;
  }
  return shapes;
}

std::vector<std::string> topo_order(const Graph& graph) {
  for (const auto& [id, node] : graph.nodes) {
    for (const auto& in : node.inputs) {
      if (!graph.contains(in)) throw Error(ErrorCode::InvalidGraph, "node '" + id + "' input '" + in + "' does not resolve");
    }
  }
  std::vector<std::string> order = kahn(graph);
  if (order.size() != graph.nodes.size()) {
    throw Error(ErrorCode::CycleDetected, std::to_string(graph.nodes.size() - order.size()) + " nodes lie on or behind a cycle");
  }
  return order;
}

ConsumerMap consumers_of(const Graph& graph) {
  ConsumerMap consumers;
  for (const auto& [id, node] : graph.nodes) consumers[id];
  for (const auto& [id, node] : graph.nodes) {
    for (const auto& in : node.inputs) {
      auto it = consumers.find(in);
      if (it == consumers.end()) continue;
      if (std::find(it->second.begin(), it->second.end(), id) == it->second.end()) it->second.push_back(id);
    }
  }
  return consumers;
}

const std::string& input_node_id(const Graph& graph) {
  const std::string* found = nullptr;
  for (const auto& [id, node] : graph.nodes) {
    if (node.kind != LayerKind::Input) continue;
    if (found) throw Error(ErrorCode::InvalidGraph, "more than one Input node");
    found = &id;
  }
  if (!found) throw Error(ErrorCode::InvalidGraph, "graph has no Input node");
  return *found;
}

std::size_t parameter_count(const LayerNode& node) {
  const LayerWeights& w = node.weights;
  return w.kernel.size() + w.bias.size() + w.mean.size() + w.variance.size() + w.gamma.size() +
         w.beta.size() + w.scale.size() + w.offset.size();
}

std::size_t parameter_count(const Graph& graph) {
  std::size_t total = 0;
  for (const auto& [id, node] : graph.nodes) total += parameter_count(node);
  return total;
}

void require_valid(const Graph& graph) {
  const ValidationReport report = validate(graph);
  if (report.ok()) return;
  std::string message;
  for (const auto& v : report.violations) {
    if (!message.empty()) message += "; ";
    message += v.node.empty() ? v.message : v.node + ": " + v.message;
  }
  throw Error(ErrorCode::InvalidGraph, message);
}

}  // namespace nnc
