#include "nnc/ir/templates.hpp"

#include <cmath>
#include <random>
#include <string>

#include "nnc/error.hpp"

namespace nnc {
namespace {

class Builder {
 public:
  Builder(Shape input, std::uint32_t seed) : rng_(seed) {
    graph_.input_shape = input;
    graph_.add(LayerNode{.id = "input", .kind = LayerKind::Input});
    shapes_["input"] = input;
  }

  std::string conv(const std::string& id, const std::string& from, int filters, int kernel, int stride = 1,
                   int pad_left = 0, int pad_right = 0) {
    const Shape in = shapes_.at(from);
    LayerNode node{.id = id, .kind = LayerKind::Conv1D, .inputs = {from}};
    node.attrs.filters = filters;
    node.attrs.kernel = kernel;
    node.attrs.stride = stride;
    node.attrs.pad_left = pad_left;
    node.attrs.pad_right = pad_right;
    node.weights.kernel = he_uniform(static_cast<std::size_t>(filters) * in.channels * kernel, in.channels * kernel);
    node.weights.bias = small(static_cast<std::size_t>(filters));
    return push(std::move(node));
  }

  std::string dense(const std::string& id, const std::string& from, int units) {
    const Shape in = shapes_.at(from);
    LayerNode node{.id = id, .kind = LayerKind::Dense, .inputs = {from}};
    node.attrs.units = units;
    node.weights.kernel = he_uniform(static_cast<std::size_t>(units) * in.size(), static_cast<int>(in.size()));
    node.weights.bias = small(static_cast<std::size_t>(units));
    return push(std::move(node));
  }

  std::string pad(const std::string& id, const std::string& from, int left, int right) {
    LayerNode node{.id = id, .kind = LayerKind::ZeroPad1D, .inputs = {from}};
    node.attrs.pad_left = left;
    node.attrs.pad_right = right;
    return push(std::move(node));
  }

  std::string max_pool(const std::string& id, const std::string& from, int window, int stride) {
    LayerNode node{.id = id, .kind = LayerKind::MaxPool1D, .inputs = {from}};
    node.attrs.kernel = window;
    node.attrs.stride = stride;
    return push(std::move(node));
  }

  std::string simple(const std::string& id, LayerKind kind, std::vector<std::string> from) {
    return push(LayerNode{.id = id, .kind = kind, .inputs = std::move(from)});
  }

  const Shape& shape(const std::string& id) const { return shapes_.at(id); }

  Graph finish(const std::string& output) {
    graph_.output = output;
    require_valid(graph_);
    return std::move(graph_);
  }

 private:
  std::string push(LayerNode node) {
    std::string id = node.id;
    graph_.add(std::move(node));
    // Shapes follow the same rules as infer_shapes; recomputed for the node just added.
    const LayerNode& added = graph_.nodes.at(id);
    const Shape in = shapes_.at(added.inputs.front());
    Shape out = in;
    switch (added.kind) {
      case LayerKind::Conv1D:
      case LayerKind::MaxPool1D:
        out.channels = added.kind == LayerKind::Conv1D ? added.attrs.filters : in.channels;
        out.samples = static_cast<int>(window_output_length(in.samples, added.attrs.kernel, added.attrs.stride,
                                                            added.attrs.pad_left, added.attrs.pad_right));
        if (out.samples <= 0) throw Error(ErrorCode::NonPositiveOutputLength, "template layer '" + id + "'");
        break;
      case LayerKind::Dense: out = Shape{1, added.attrs.units}; break;
      case LayerKind::Flatten: out = Shape{1, static_cast<int>(in.size())}; break;
      case LayerKind::ZeroPad1D: out.samples += added.attrs.pad_left + added.attrs.pad_right; break;
      default: break;
    }
    shapes_[id] = out;
    return id;
  }

  std::vector<double> he_uniform(std::size_t count, int fan_in) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    std::vector<double> values(count);
    for (auto& v : values) v = dist(rng_);
    return values;
  }

  std::vector<double> small(std::size_t count) {
    std::uniform_real_distribution<double> dist(-0.1, 0.1);
    std::vector<double> values(count);
    for (auto& v : values) v = dist(rng_);
    return values;
  }

  Graph graph_;
  ShapeMap shapes_;
  std::mt19937 rng_;
};

void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorCode::PreconditionError, message);
}

}  // namespace

Graph build_resnet_v1_6(int filters, Shape input_shape, int classes, std::uint32_t seed) {
  require(filters >= 1, "filters must be >= 1");
  require(classes >= 2, "classes must be >= 2");
  require(input_shape.channels >= 1 && input_shape.samples >= 1, "input shape must be positive");
  const int f = filters;
  Builder b(input_shape, seed);

  b.pad("stem_pad", "input", 1, 1);
  b.conv("stem_conv", "stem_pad", f, 3);
  const std::string stem = b.simple("stem_relu", LayerKind::ReLU, {"stem_conv"});

  // Block 1: identity shortcut.
  b.pad("b1_pad1", stem, 1, 1);
  b.conv("b1_conv1", "b1_pad1", f, 3);
  b.simple("b1_relu1", LayerKind::ReLU, {"b1_conv1"});
  b.pad("b1_pad2", "b1_relu1", 1, 1);
  b.conv("b1_conv2", "b1_pad2", f, 3);
  b.simple("b1_add", LayerKind::Add, {"b1_conv2", stem});
  const std::string block1 = b.simple("b1_relu2", LayerKind::ReLU, {"b1_add"});

  // Block 2: stride-2 main path, 1-tap stride-2 projection shortcut.
  b.pad("b2_pad1", block1, 1, 1);
  b.conv("b2_conv1", "b2_pad1", f, 3, 2);
  b.simple("b2_relu1", LayerKind::ReLU, {"b2_conv1"});
  b.pad("b2_pad2", "b2_relu1", 1, 1);
  b.conv("b2_conv2", "b2_pad2", f, 3);
  b.conv("b2_shortcut", block1, f, 1, 2);
  b.simple("b2_add", LayerKind::Add, {"b2_conv2", "b2_shortcut"});
  b.simple("b2_relu2", LayerKind::ReLU, {"b2_add"});

  const int remaining = b.shape("b2_relu2").samples;
  b.max_pool("pool", "b2_relu2", remaining, remaining);
  b.simple("flatten", LayerKind::Flatten, {"pool"});
  b.dense("classifier", "flatten", classes);
  return b.finish("classifier");
}

Graph build_mlp(const MlpConfig& config) {
  require(config.layers >= 1, "MLP needs at least one layer");
  require(config.neurons >= 1, "neurons must be >= 1");
  require(config.classes >= 1, "classes must be >= 1");
  Builder b(config.input, config.seed);
  std::string last = "input";
  if (config.input.channels > 1) last = b.simple("flatten", LayerKind::Flatten, {last});
  for (int i = 1; i < config.layers; ++i) {
    const std::string n = std::to_string(i);
    b.dense("dense" + n, last, config.neurons);
    last = b.simple("relu" + n, LayerKind::ReLU, {"dense" + n});
  }
  last = b.dense("classifier", last, config.classes);
  return b.finish(last);
}

Graph build_cnn(const CnnConfig& config) {
  require(config.conv_layers >= 1, "CNN needs at least one convolution");
  require(config.filters >= 1 && config.kernel >= 1 && config.pool >= 1, "filters, kernel and pool must be >= 1");
  require(config.dense_layers >= 0 && config.neurons >= 1 && config.classes >= 1, "invalid classifier configuration");
  Builder b(config.input, config.seed);
  std::string last = "input";
  for (int i = 1; i <= config.conv_layers; ++i) {
    const std::string n = std::to_string(i);
    const int pad_left = config.same_padding ? (config.kernel - 1) / 2 : 0;
    const int pad_right = config.same_padding ? config.kernel / 2 : 0;
    b.conv("conv" + n, last, config.filters, config.kernel, 1, pad_left, pad_right);
    last = b.simple("relu" + n, LayerKind::ReLU, {"conv" + n});
    if (config.pool > 1 && b.shape(last).samples >= config.pool) {
      last = b.max_pool("pool" + n, last, config.pool, config.pool);
    }
  }
  last = b.simple("flatten", LayerKind::Flatten, {last});
  for (int i = 1; i <= config.dense_layers; ++i) {
    const std::string n = std::to_string(i);
    b.dense("dense" + n, last, config.neurons);
    last = b.simple("dense_relu" + n, LayerKind::ReLU, {"dense" + n});
  }
  last = b.dense("classifier", last, config.classes);
  return b.finish(last);
}

}  // namespace nnc
