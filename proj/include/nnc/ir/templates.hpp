#pragma once

#include <cstdint>

#include "nnc/ir/graph.hpp"

namespace nnc {

/// 1D ResNetv1-6: a stem convolution followed by two residual blocks of two
/// 3-tap convolutions each (the second block downsamples by 2 and uses a
/// 1-tap strided shortcut convolution), a global max pool and a Dense
/// classifier. Every convolution has `filters` output channels. Padding is
/// expressed with explicit ZeroPad1D nodes and activations with standalone
/// ReLU nodes, i.e. the graph is in its untransformed, exporter-like form.
/// Weights are drawn from a seeded He-uniform initializer.
Graph build_resnet_v1_6(int filters, Shape input_shape, int classes, std::uint32_t seed = 1);

struct MlpConfig {
  Shape input{1, 8};
  int layers = 2;  // Dense layers including the classifier
  int neurons = 4;
  int classes = 2;
  std::uint32_t seed = 1;
};

/// Dense(neurons)+ReLU repeated layers-1 times, then Dense(classes).
Graph build_mlp(const MlpConfig& config);

struct CnnConfig {
  Shape input{1, 8};
  int conv_layers = 1;
  int filters = 2;
  int kernel = 3;
  int pool = 2;  // MaxPool1D window and stride; 1 disables pooling
  bool same_padding = false;
  int dense_layers = 0;  // hidden Dense layers before the classifier
  int neurons = 16;
  int classes = 2;
  std::uint32_t seed = 1;
};

/// (Conv1D+ReLU+MaxPool1D) x conv_layers, Flatten, hidden Dense+ReLU layers,
/// Dense(classes).
Graph build_cnn(const CnnConfig& config);

}  // namespace nnc
