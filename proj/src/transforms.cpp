#include "nnc/transforms.hpp"

#include <algorithm>
#include <cmath>

#include "nnc/error.hpp"

namespace nnc {
namespace {

void replace_references(Graph& graph, const std::string& from, const std::string& to) {
  for (auto& [id, node] : graph.nodes) {
    std::replace(node.inputs.begin(), node.inputs.end(), from, to);
  }
  if (graph.output == from) graph.output = to;
}

}  // namespace

FoldedBatchNorm fold_batchnorm_params(std::span<const double> mean, std::span<const double> variance,
                                      std::span<const double> gamma, std::span<const double> beta, double epsilon) {
  const std::size_t c = mean.size();
  if (variance.size() != c || gamma.size() != c || beta.size() != c) {
    throw Error(ErrorCode::PreconditionError, "BatchNorm parameter vectors differ in length");
  }
  FoldedBatchNorm folded;
  folded.w.resize(c);
  folded.b.resize(c);
  for (std::size_t i = 0; i < c; ++i) {
    const double var = variance[i] + epsilon;
    if (!(var > 0.0)) {
      throw Error(ErrorCode::DegenerateVariance, "channel " + std::to_string(i) + " has V + eps <= 0");
    }
    const double sigma = std::sqrt(var);
    folded.w[i] = gamma[i] / sigma;
    folded.b[i] = beta[i] - gamma[i] * mean[i] / sigma;
  }
  return folded;
}

Graph fold_zero_padding(const Graph& graph) {
  Graph out = graph;
  std::vector<std::string> order = topo_order(graph);
  // Innermost pads first so chains of ZeroPad1D collapse into the convolution.
  std::reverse(order.begin(), order.end());
  for (const auto& id : order) {
    const LayerNode& pad = out.nodes.at(id);
    if (pad.kind != LayerKind::ZeroPad1D) continue;
    const ConsumerMap consumers = consumers_of(out);
    const auto& users = consumers.at(id);
    if (users.size() != 1 || id == out.output) {
      throw Error(ErrorCode::UnfusablePadding, "ZeroPad1D '" + id + "' must feed exactly one Conv1D");
    }
    LayerNode& conv = out.nodes.at(users.front());
    if (conv.kind != LayerKind::Conv1D) {
      throw Error(ErrorCode::UnfusablePadding,
                  "ZeroPad1D '" + id + "' feeds " + std::string(to_string(conv.kind)) + " '" + conv.id + "'");
    }
    conv.attrs.pad_left += pad.attrs.pad_left;
    conv.attrs.pad_right += pad.attrs.pad_right;
    conv.inputs.front() = pad.inputs.front();
    out.nodes.erase(id);
  }
  return out;
}

Graph fuse_relu(const Graph& graph) {
  Graph out = graph;
  for (const auto& id : topo_order(graph)) {
    const LayerNode& relu = out.nodes.at(id);
    if (relu.kind != LayerKind::ReLU) continue;
    const std::string producer_id = relu.inputs.front();
    LayerNode& producer = out.nodes.at(producer_id);
    const bool fusable_kind = producer.kind == LayerKind::Conv1D || producer.kind == LayerKind::MaxPool1D ||
                              producer.kind == LayerKind::Dense || producer.kind == LayerKind::Add;
    if (!fusable_kind || producer_id == out.output) continue;
    const ConsumerMap consumers = consumers_of(out);
    if (consumers.at(producer_id) != std::vector<std::string>{id}) continue;
    producer.attrs.fused_relu = true;
    out.nodes.erase(id);
    replace_references(out, id, producer_id);
  }
  return out;
}

Graph fold_batchnorm(const Graph& graph) {
  Graph out = graph;
  for (auto& [id, node] : out.nodes) {
    if (node.kind != LayerKind::BatchNorm) continue;
    FoldedBatchNorm folded;
    try {
      folded = fold_batchnorm_params(node.weights.mean, node.weights.variance, node.weights.gamma, node.weights.beta,
                                     node.attrs.epsilon);
    } catch (const Error& e) {
      throw Error(e.code(), "BatchNorm '" + id + "': " + e.what());
    }
    node.kind = LayerKind::Affine;
    node.attrs = LayerAttrs{};
    node.weights = LayerWeights{};
    node.weights.scale = std::move(folded.w);
    node.weights.offset = std::move(folded.b);
  }
  return out;
}

Graph remove_softmax(const Graph& graph) {
  Graph out = graph;
  const ConsumerMap consumers = consumers_of(graph);
  for (const auto& [id, node] : graph.nodes) {
    if (node.kind != LayerKind::SoftMax) continue;
    if (id != graph.output || !consumers.at(id).empty()) {
      throw Error(ErrorCode::InteriorSoftmax, "SoftMax '" + id + "' is not the graph output");
    }
    out.output = node.inputs.front();
    out.nodes.erase(id);
  }
  return out;
}

Graph run_pipeline(const Graph& graph) {
  require_valid(graph);
  Graph out = fuse_relu(fold_batchnorm(fold_zero_padding(remove_softmax(graph))));
  require_valid(out);
  return out;
}

}  // namespace nnc
