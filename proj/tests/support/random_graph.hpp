#pragma once

// Seeded random model generator shared by the property tests and the
// acceptance binary. Models are chains of blocks applied to a running head
// tensor; residual blocks fork the head, transform one branch and join with
// an Add, so every node except the output has a consumer by construction.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "nnc/ir/graph.hpp"

namespace nnc::testing {

struct RandomModelOptions {
  int min_blocks = 1;
  int max_blocks = 4;
  int max_channels = 4;
  int min_samples = 6;
  int max_samples = 24;
  bool padding = true;      // Conv1D pad_left/pad_right
  bool strides = true;      // stride-2 convolutions
  bool pools = true;        // MaxPool1D blocks
  bool avgpool = true;      // AvgPool1D blocks
  bool batchnorm = false;   // BatchNorm after some convolutions
  bool zeropad = false;     // explicit ZeroPad1D before some convolutions
  bool softmax = false;     // terminal SoftMax
  int min_residual = 0;     // residual blocks forced into the model
  bool dense_head = true;   // Flatten + Dense classifier; else ends on the head
  int classes = 3;
  double weight_scale = 1.0;
};

class ModelBuilder {
 public:
  ModelBuilder(std::mt19937& rng, const RandomModelOptions& options) : rng_(rng), opt_(options) {}

  Graph build() {
    graph_ = Graph{};
    counter_ = 0;
    const int channels = uniform_int(1, opt_.max_channels);
    const int samples = uniform_int(opt_.min_samples, opt_.max_samples);
    graph_.input_shape = {channels, samples};
    head_ = add_node(LayerNode{.id = "input", .kind = LayerKind::Input});
    shape_ = graph_.input_shape;

    const int blocks = uniform_int(opt_.min_blocks, opt_.max_blocks);
    std::vector<bool> residual(static_cast<std::size_t>(std::max(blocks, opt_.min_residual)), false);
    for (int i = 0; i < opt_.min_residual; ++i) residual[static_cast<std::size_t>(i)] = true;
    std::shuffle(residual.begin(), residual.end(), rng_);
    for (bool r : residual) {
      if (r) {
        residual_block();
      } else {
        plain_block();
      }
    }
    if (opt_.dense_head) {
      if (shape_.channels > 1) unary(LayerKind::Flatten, "flatten", {});
      const std::string prev = head_;
      const int units = opt_.classes;
      LayerNode dense{.id = fresh("dense"), .kind = LayerKind::Dense, .inputs = {prev}};
      dense.attrs.units = units;
      dense.weights.kernel = weights(static_cast<std::size_t>(units) * shape_.size(), shape_.size());
      dense.weights.bias = biases(static_cast<std::size_t>(units));
      head_ = add_node(std::move(dense));
      shape_ = {1, units};
    }
    if (opt_.softmax) unary(LayerKind::SoftMax, "softmax", {});
    graph_.output = head_;
    return graph_;
  }

 private:
  std::mt19937& rng_;
  RandomModelOptions opt_;
  Graph graph_;
  std::string head_;
  Shape shape_;
  int counter_ = 0;

  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

  std::string fresh(const std::string& prefix) { return prefix + std::to_string(counter_++); }

  std::string add_node(LayerNode node) {
    const std::string id = node.id;
    graph_.add(std::move(node));
    return id;
  }

  std::vector<double> weights(std::size_t count, std::size_t fan_in) {
    const double limit = opt_.weight_scale * std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
    std::vector<double> w(count);
    for (auto& v : w) v = uniform(-limit, limit);
    return w;
  }
  std::vector<double> biases(std::size_t count) {
    std::vector<double> b(count);
    for (auto& v : b) v = uniform(-0.2, 0.2);
    return b;
  }

  void unary(LayerKind kind, const std::string& prefix, LayerAttrs attrs) {
    LayerNode node{.id = fresh(prefix), .kind = kind, .inputs = {head_}, .attrs = attrs};
    head_ = add_node(std::move(node));
    if (kind == LayerKind::Flatten) shape_ = {1, static_cast<int>(shape_.size())};
    if (kind == LayerKind::MaxPool1D || kind == LayerKind::AvgPool1D) {
      shape_.samples = static_cast<int>(window_output_length(shape_.samples, attrs.kernel, attrs.stride, 0, 0));
    }
  }

  // Convolution from the head. `keep_length` forces stride 1 and "same" padding.
  void conv(int filters, bool keep_length) {
    int kernel = uniform_int(1, std::min(3, shape_.samples));
    int stride = 1;
    int pad_left = 0;
    int pad_right = 0;
    if (keep_length) {
      kernel = coin() ? 3 : 1;
      pad_left = pad_right = kernel / 2;
    } else {
      if (opt_.strides && shape_.samples >= 4 && coin(0.3)) stride = 2;
      if (opt_.padding && coin(0.5)) {
        pad_left = uniform_int(0, kernel - 1);
        pad_right = uniform_int(0, kernel - 1);
      }
    }
    if (opt_.zeropad && (pad_left > 0 || pad_right > 0) && coin(0.5)) {
      LayerNode pad{.id = fresh("pad"), .kind = LayerKind::ZeroPad1D, .inputs = {head_}};
      pad.attrs.pad_left = pad_left;
      pad.attrs.pad_right = pad_right;
      head_ = add_node(std::move(pad));
      shape_.samples += pad_left + pad_right;
      pad_left = pad_right = 0;
    }
    LayerNode node{.id = fresh("conv"), .kind = LayerKind::Conv1D, .inputs = {head_}};
    node.attrs.filters = filters;
    node.attrs.kernel = kernel;
    node.attrs.stride = stride;
    node.attrs.pad_left = pad_left;
    node.attrs.pad_right = pad_right;
    const std::size_t fan_in = static_cast<std::size_t>(shape_.channels * kernel);
    node.weights.kernel = weights(static_cast<std::size_t>(filters) * fan_in, fan_in);
    node.weights.bias = biases(static_cast<std::size_t>(filters));
    head_ = add_node(std::move(node));
    shape_ = {filters, static_cast<int>(window_output_length(shape_.samples, kernel, stride, pad_left, pad_right))};
    if (opt_.batchnorm && coin(0.4)) batchnorm();
  }

  void batchnorm() {
    LayerNode bn{.id = fresh("bn"), .kind = LayerKind::BatchNorm, .inputs = {head_}};
    bn.attrs.epsilon = 1e-3;
    const auto c = static_cast<std::size_t>(shape_.channels);
    for (std::size_t i = 0; i < c; ++i) {
      bn.weights.mean.push_back(uniform(-0.5, 0.5));
      bn.weights.variance.push_back(uniform(0.25, 2.0));
      bn.weights.gamma.push_back(uniform(0.5, 1.5));
      bn.weights.beta.push_back(uniform(-0.3, 0.3));
    }
    head_ = add_node(std::move(bn));
  }

  void relu() { unary(LayerKind::ReLU, "relu", {}); }

  void plain_block() {
    const int choice = uniform_int(0, 3);
    if (choice <= 1 || shape_.samples < 2 || !(opt_.pools || opt_.avgpool)) {
      conv(uniform_int(1, opt_.max_channels), false);
      if (coin(0.7)) relu();
      return;
    }
    LayerAttrs attrs;
    attrs.kernel = 2;
    attrs.stride = 2;
    const bool avg = opt_.avgpool && (!opt_.pools || coin(0.4));
    unary(avg ? LayerKind::AvgPool1D : LayerKind::MaxPool1D, avg ? "avgpool" : "maxpool", attrs);
    if (choice == 3) relu();
  }

  // head -> conv [-> relu -> conv] -> Add(branch, skip[, second branch]).
  void residual_block() {
    const std::string skip = head_;
    const Shape skip_shape = shape_;
    const int filters = skip_shape.channels;
    conv(filters, true);
    if (coin(0.5)) {
      relu();
      conv(filters, true);
    }
    std::vector<std::string> operands{head_, skip};
    if (coin(0.25)) {
      head_ = skip;
      shape_ = skip_shape;
      conv(filters, true);
      operands.push_back(head_);
    }
    std::shuffle(operands.begin(), operands.end(), rng_);
    LayerNode add{.id = fresh("add"), .kind = LayerKind::Add, .inputs = operands};
    head_ = add_node(std::move(add));
    shape_ = skip_shape;
    if (coin(0.6)) relu();
  }
};

inline Graph random_model(std::mt19937& rng, const RandomModelOptions& options = {}) {
  return ModelBuilder(rng, options).build();
}

inline std::vector<double> random_input(std::mt19937& rng, Shape shape, double amplitude = 1.0) {
  std::uniform_real_distribution<double> dist(-amplitude, amplitude);
  std::vector<double> x(shape.size());
  for (auto& v : x) v = dist(rng);
  return x;
}

}  // namespace nnc::testing
