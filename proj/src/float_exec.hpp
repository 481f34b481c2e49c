#pragma once

// Float graph executor shared by the reference interpreter and the
// fake-quantized evaluator. Hooks see each node's output after it is computed
// and each Add operand before summation.

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "nnc/error.hpp"
#include "nnc/ir/graph.hpp"

namespace nnc::detail {

struct NoHooks {
  template <typename T>
  void output(const LayerNode&, std::vector<T>&) {}
  template <typename T>
  void add_operand(const LayerNode&, const std::string&, std::vector<T>&) {}
  // Weights as the executor should see them; identity by default.
  const LayerWeights& weights(const LayerNode& node) { return node.weights; }
};

template <typename T>
T relu(T v) {
  return v > T(0) ? v : T(0);
}

template <typename T>
std::vector<T> cast_all(const std::vector<double>& values) {
  return std::vector<T>(values.begin(), values.end());
}

template <typename T, typename Hooks>
std::map<std::string, std::vector<T>> execute_float(const Graph& graph, std::span<const T> input, Hooks& hooks) {
  const ShapeMap shapes = infer_shapes(graph);
  const std::string& input_id = input_node_id(graph);
  if (input.size() != graph.input_shape.size()) {
    throw Error(ErrorCode::ShapeMismatch, "input has " + std::to_string(input.size()) + " values, model expects " +
                                              std::to_string(graph.input_shape.size()));
  }
  std::map<std::string, std::vector<T>> values;
  for (const auto& id : topo_order(graph)) {
    const LayerNode& node = graph.nodes.at(id);
    const Shape out_shape = shapes.at(id);
    std::vector<T> out(out_shape.size());
    if (id == input_id) {
      out.assign(input.begin(), input.end());
      hooks.output(node, out);
      values.emplace(id, std::move(out));
      continue;
    }
    const Shape in_shape = shapes.at(node.inputs.front());
    const std::vector<T>& x = values.at(node.inputs.front());
    const LayerAttrs& a = node.attrs;
    const int C = in_shape.channels;
    const int S = in_shape.samples;
    const int O = out_shape.samples;

    switch (node.kind) {
      case LayerKind::Conv1D: {
        const LayerWeights& lw = hooks.weights(node);
        const std::vector<T> w = cast_all<T>(lw.kernel);
        const std::vector<T> b = cast_all<T>(lw.bias);
        const int K = a.kernel;
        for (int f = 0; f < a.filters; ++f) {
          for (int o = 0; o < O; ++o) {
            T acc = b[static_cast<std::size_t>(f)];
            for (int c = 0; c < C; ++c) {
              for (int t = 0; t < K; ++t) {
                const int pos = o * a.stride + t - a.pad_left;
                if (pos < 0 || pos >= S) continue;
                acc += x[static_cast<std::size_t>(c * S + pos)] * w[static_cast<std::size_t>((f * C + c) * K + t)];
              }
            }
            out[static_cast<std::size_t>(f * O + o)] = a.fused_relu ? relu(acc) : acc;
          }
        }
        break;
      }
      case LayerKind::Dense: {
        const LayerWeights& lw = hooks.weights(node);
        const std::vector<T> w = cast_all<T>(lw.kernel);
        const std::vector<T> b = cast_all<T>(lw.bias);
        const std::size_t in_features = x.size();
        for (int j = 0; j < a.units; ++j) {
          T acc = b[static_cast<std::size_t>(j)];
          for (std::size_t i = 0; i < in_features; ++i) acc += x[i] * w[static_cast<std::size_t>(j) * in_features + i];
          out[static_cast<std::size_t>(j)] = a.fused_relu ? relu(acc) : acc;
        }
        break;
      }
      case LayerKind::MaxPool1D:
      case LayerKind::AvgPool1D: {
        const bool is_max = node.kind == LayerKind::MaxPool1D;
        for (int c = 0; c < C; ++c) {
          for (int o = 0; o < O; ++o) {
            const std::size_t base = static_cast<std::size_t>(c * S + o * a.stride);
            T acc = x[base];
            for (int t = 1; t < a.kernel; ++t) {
              const T v = x[base + static_cast<std::size_t>(t)];
              acc = is_max ? std::max(acc, v) : acc + v;
            }
            if (!is_max) acc = acc / static_cast<T>(a.kernel);
            out[static_cast<std::size_t>(c * O + o)] = a.fused_relu ? relu(acc) : acc;
          }
        }
        break;
      }
      case LayerKind::BatchNorm: {
        const LayerWeights& lw = node.weights;
        for (int c = 0; c < C; ++c) {
          const auto ci = static_cast<std::size_t>(c);
          const T sigma = static_cast<T>(std::sqrt(lw.variance[ci] + a.epsilon));
          const T gamma = static_cast<T>(lw.gamma[ci]);
          const T beta = static_cast<T>(lw.beta[ci]);
          const T mean = static_cast<T>(lw.mean[ci]);
          for (int s = 0; s < S; ++s) {
            const auto i = static_cast<std::size_t>(c * S + s);
            out[i] = gamma * (x[i] - mean) / sigma + beta;
          }
        }
        break;
      }
      case LayerKind::Affine: {
        const LayerWeights& lw = hooks.weights(node);
        for (int c = 0; c < C; ++c) {
          const T scale = static_cast<T>(lw.scale[static_cast<std::size_t>(c)]);
          const T offset = static_cast<T>(lw.offset[static_cast<std::size_t>(c)]);
          for (int s = 0; s < S; ++s) {
            const auto i = static_cast<std::size_t>(c * S + s);
            const T product = scale * x[i];
            out[i] = product + offset;
          }
        }
        break;
      }
      case LayerKind::Add: {
        std::vector<std::vector<T>> operands;
        operands.reserve(node.inputs.size());
        for (const auto& src : node.inputs) {
          operands.push_back(values.at(src));
          hooks.add_operand(node, src, operands.back());
        }
        for (std::size_t i = 0; i < out.size(); ++i) {
          T acc = operands[0][i];
          for (std::size_t k = 1; k < operands.size(); ++k) acc += operands[k][i];
          out[i] = a.fused_relu ? relu(acc) : acc;
        }
        break;
      }
      case LayerKind::ReLU:
        std::transform(x.begin(), x.end(), out.begin(), [](T v) { return relu(v); });
        break;
      case LayerKind::Flatten:
        out = x;
        break;
      case LayerKind::ZeroPad1D:
        std::fill(out.begin(), out.end(), T(0));
        for (int c = 0; c < C; ++c) {
          for (int s = 0; s < S; ++s) {
            out[static_cast<std::size_t>(c * O + s + a.pad_left)] = x[static_cast<std::size_t>(c * S + s)];
          }
        }
        break;
      case LayerKind::SoftMax: {
        // Normalized over the whole tensor.
        const T peak = *std::max_element(x.begin(), x.end());
        T total = T(0);
        for (std::size_t i = 0; i < x.size(); ++i) {
          out[i] = std::exp(x[i] - peak);
          total += out[i];
        }
        for (auto& v : out) v /= total;
        break;
      }
      case LayerKind::Input:
        break;
    }
    hooks.output(node, out);
    values.emplace(id, std::move(out));
  }
  return values;
}

}  // namespace nnc::detail
