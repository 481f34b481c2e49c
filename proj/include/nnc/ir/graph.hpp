#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nnc {

/// Activation tensor extent. Tensors are laid out channel-major: element
/// (c, t) lives at index c * samples + t. Post-Flatten and Dense outputs use
/// channels == 1.
struct Shape {
  int channels = 1;
  int samples = 1;

  std::size_t size() const { return static_cast<std::size_t>(channels) * static_cast<std::size_t>(samples); }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& shape);

enum class LayerKind {
  Input,
  Conv1D,
  Dense,
  MaxPool1D,
  AvgPool1D,
  BatchNorm,
  Affine,  // per-channel y = scale * x + offset, produced by BatchNorm folding
  Add,
  ReLU,
  ZeroPad1D,
  Flatten,
  SoftMax,
};

std::string_view to_string(LayerKind kind);
std::optional<LayerKind> layer_kind_from_string(std::string_view name);

/// True for kinds that may carry a fused ReLU flag.
bool accepts_fused_relu(LayerKind kind);

struct LayerAttrs {
  int filters = 0;  // Conv1D
  int units = 0;    // Dense
  int kernel = 1;   // Conv1D taps, pool window
  int stride = 1;
  int pad_left = 0;
  int pad_right = 0;
  bool fused_relu = false;
  double epsilon = 0.0;  // BatchNorm

  friend bool operator==(const LayerAttrs&, const LayerAttrs&) = default;
};

/// Real-valued parameters. Only the arrays relevant to the node kind are
/// populated.
///   Conv1D  kernel [filter][in_channel][tap], bias [filter]
///   Dense   kernel [unit][in_feature],        bias [unit]
///   BatchNorm mean/variance/gamma/beta [channel]
///   Affine  scale/offset [channel]
struct LayerWeights {
  std::vector<double> kernel;
  std::vector<double> bias;
  std::vector<double> mean;
  std::vector<double> variance;
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> scale;
  std::vector<double> offset;

  friend bool operator==(const LayerWeights&, const LayerWeights&) = default;
};

struct LayerNode {
  std::string id;
  LayerKind kind = LayerKind::Input;
  std::vector<std::string> inputs;
  LayerAttrs attrs;
  LayerWeights weights;

  friend bool operator==(const LayerNode&, const LayerNode&) = default;
};

/// Directed acyclic model graph. Treated as an immutable value once built;
/// passes return new graphs.
struct Graph {
  std::map<std::string, LayerNode> nodes;
  Shape input_shape;
  std::string output;

  const LayerNode& node(const std::string& id) const;
  bool contains(const std::string& id) const { return nodes.count(id) != 0; }
  void add(LayerNode node);

  friend bool operator==(const Graph&, const Graph&) = default;
};

struct Violation {
  std::string node;  // empty for graph-level violations
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

using ShapeMap = std::map<std::string, Shape>;
using ConsumerMap = std::map<std::string, std::vector<std::string>>;

ValidationReport validate(const Graph& graph);

/// Throws NonPositiveOutputLength, ShapeMismatch, InvalidGraph or CycleDetected.
ShapeMap infer_shapes(const Graph& graph);

/// Kahn ordering with ties broken by ascending node id. Throws CycleDetected.
std::vector<std::string> topo_order(const Graph& graph);

/// Distinct consumers of every node, in ascending id order. Every node has an
/// entry, possibly empty.
ConsumerMap consumers_of(const Graph& graph);

/// Id of the unique Input node. Throws InvalidGraph when absent or ambiguous.
const std::string& input_node_id(const Graph& graph);

/// Output samples of a sliding window over `samples` inputs; may be <= 0.
long window_output_length(long samples, int kernel, int stride, int pad_left, int pad_right);

/// Trainable parameter count (BatchNorm counts mean/variance/gamma/beta).
std::size_t parameter_count(const Graph& graph);
std::size_t parameter_count(const LayerNode& node);

/// Throws InvalidGraph with the collected messages when `graph` does not validate.
void require_valid(const Graph& graph);

}  // namespace nnc
