#pragma once

#include <span>
#include <vector>

#include "nnc/ir/graph.hpp"

namespace nnc {

/// Per-channel affine replacement of a BatchNorm layer: y = w * x + b.
struct FoldedBatchNorm {
  std::vector<double> w;
  std::vector<double> b;
};

/// sigma = sqrt(V + eps), w = gamma / sigma, b = beta - gamma * mu / sigma.
/// Throws DegenerateVariance when V + eps <= 0 for any channel.
FoldedBatchNorm fold_batchnorm_params(std::span<const double> mean, std::span<const double> variance,
                                      std::span<const double> gamma, std::span<const double> beta, double epsilon);

/// Merges every ZeroPad1D into the padding of the Conv1D that consumes it.
/// Throws UnfusablePadding when a ZeroPad1D has any other consumer.
Graph fold_zero_padding(const Graph& graph);

/// Sets fused_relu on Conv1D, MaxPool1D, Dense and Add producers whose only
/// consumer is a ReLU, and drops that ReLU. Other ReLUs stay standalone.
Graph fuse_relu(const Graph& graph);

/// Rewrites each BatchNorm node as an Affine node. The preceding convolution
/// is left untouched.
Graph fold_batchnorm(const Graph& graph);

/// Drops a terminal SoftMax. Throws InteriorSoftmax for any other SoftMax.
Graph remove_softmax(const Graph& graph);

/// remove_softmax, fold_zero_padding, fold_batchnorm, fuse_relu, in that order.
/// Input and output are validated.
Graph run_pipeline(const Graph& graph);

}  // namespace nnc
