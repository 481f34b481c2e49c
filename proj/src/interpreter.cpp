#include "nnc/interpreter.hpp"

#include <algorithm>

#include "float_exec.hpp"
#include "nnc/error.hpp"

namespace nnc {

template <typename T>
std::vector<T> run_float(const Graph& graph, std::span<const T> input) {
  detail::NoHooks hooks;
  auto values = detail::execute_float<T>(graph, input, hooks);
  return std::move(values.at(graph.output));
}

template std::vector<float> run_float<float>(const Graph&, std::span<const float>);
template std::vector<double> run_float<double>(const Graph&, std::span<const double>);

std::map<std::string, std::vector<double>> run_float_trace(const Graph& graph, std::span<const double> input) {
  detail::NoHooks hooks;
  return detail::execute_float<double>(graph, input, hooks);
}

OpCounts ExecutionTrace::total() const {
  OpCounts sum;
  for (const auto& [id, c] : counts) sum += c;
  return sum;
}

namespace {

// Executes one fixed-point model; `counts` is filled when non-null.
class FixedExecutor {
 public:
  FixedExecutor(const QuantizedModel& model, std::map<std::string, OpCounts>* counts)
      : model_(model), width_(model.width), acc_bits_(8 * container_bytes(2 * model.width)), counts_(counts) {}

  std::map<std::string, FixedTensor> run(const FixedTensor& input) {
    const std::string& input_id = input_node_id(model_.graph);
    const QFormat expected = model_.input_format();
    if (!(input.format == expected)) {
      throw Error(ErrorCode::FormatMismatch, "input is Q(w=" + std::to_string(input.format.width) +
                                                 ",n=" + std::to_string(input.format.frac) + "), model expects Q(w=" +
                                                 std::to_string(expected.width) + ",n=" +
                                                 std::to_string(expected.frac) + ")");
    }
    if (!(input.shape == model_.graph.input_shape) || input.data.size() != input.shape.size()) {
      throw Error(ErrorCode::ShapeMismatch, "input shape " + to_string(input.shape) + " does not match model input " +
                                                to_string(model_.graph.input_shape));
    }
    std::map<std::string, FixedTensor> values;
    for (const auto& id : topo_order(model_.graph)) {
      const LayerNode& node = model_.graph.nodes.at(id);
      OpCounts tally;
      FixedTensor out{{}, model_.format(id), model_.shapes.at(id)};
      if (id == input_id) {
        out.data = input.data;
      } else {
        out.data.assign(out.shape.size(), 0);
        compute(node, values, out, tally);
      }
      if (counts_) (*counts_)[id] = tally;
      values.emplace(id, std::move(out));
    }
    return values;
  }

 private:
  std::int64_t acc_add(std::int64_t acc, std::int64_t term) const { return wrap(acc + term, acc_bits_); }

  std::int32_t finish(std::int64_t acc, int from_frac, int to_frac, bool fused_relu, OpCounts& tally) const {
    std::int32_t y = requantize(acc, from_frac, to_frac, width_);
    tally.shift += 2;
    tally.maxsat += 1;
    if (fused_relu) {
      y = std::max(y, 0);
      tally.maxsat += 1;
    }
    return y;
  }

  void compute(const LayerNode& node, const std::map<std::string, FixedTensor>& values, FixedTensor& out,
               OpCounts& tally) const {
    const LayerQuantInfo& q = model_.info.at(node.id);
    const FixedTensor& x = values.at(node.inputs.front());
    const LayerAttrs& a = node.attrs;
    const int C = x.shape.channels;
    const int S = x.shape.samples;
    const int O = out.shape.samples;
    auto at = [](const std::vector<std::int32_t>& v, int i) { return static_cast<std::int64_t>(v[static_cast<std::size_t>(i)]); };

    switch (node.kind) {
      case LayerKind::Conv1D: {
        const auto& w = model_.weights.at(node.id).data;
        const auto& b = model_.biases.at(node.id);
        const int K = a.kernel;
        for (int f = 0; f < a.filters; ++f) {
          for (int o = 0; o < O; ++o) {
            std::int64_t acc = at(b, f);
            for (int c = 0; c < C; ++c) {
              for (int t = 0; t < K; ++t) {
                const int pos = o * a.stride + t - a.pad_left;
                if (pos < 0 || pos >= S) continue;
                acc = acc_add(acc, at(x.data, c * S + pos) * at(w, (f * C + c) * K + t));
                tally.macc += 1;
              }
            }
            out.data[static_cast<std::size_t>(f * O + o)] = finish(acc, q.n_b, q.n_y, a.fused_relu, tally);
          }
        }
        break;
      }
      case LayerKind::Dense: {
        const auto& w = model_.weights.at(node.id).data;
        const auto& b = model_.biases.at(node.id);
        const int in_features = static_cast<int>(x.data.size());
        for (int j = 0; j < a.units; ++j) {
          std::int64_t acc = at(b, j);
          for (int i = 0; i < in_features; ++i) {
            acc = acc_add(acc, at(x.data, i) * at(w, j * in_features + i));
            tally.macc += 1;
          }
          out.data[static_cast<std::size_t>(j)] = finish(acc, q.n_b, q.n_y, a.fused_relu, tally);
        }
        break;
      }
      case LayerKind::Affine: {
        const auto& w = model_.weights.at(node.id).data;
        const auto& b = model_.biases.at(node.id);
        for (int c = 0; c < C; ++c) {
          for (int s = 0; s < S; ++s) {
            std::int64_t acc = acc_add(at(b, c), at(x.data, c * S + s) * at(w, c));
            tally.macc += 1;
            out.data[static_cast<std::size_t>(c * S + s)] = finish(acc, q.n_b, q.n_y, false, tally);
          }
        }
        break;
      }
      case LayerKind::MaxPool1D: {
        // Compares in operand width; the output keeps the input format.
        for (int c = 0; c < C; ++c) {
          for (int o = 0; o < O; ++o) {
            const int base = c * S + o * a.stride;
            std::int32_t m = x.data[static_cast<std::size_t>(base)];
            for (int t = 1; t < a.kernel; ++t) m = std::max(m, x.data[static_cast<std::size_t>(base + t)]);
            tally.maxsat += static_cast<std::uint64_t>(a.kernel);
            if (a.fused_relu) {
              m = std::max(m, 0);
              tally.maxsat += 1;
            }
            out.data[static_cast<std::size_t>(c * O + o)] = m;
          }
        }
        break;
      }
      case LayerKind::AvgPool1D: {
        for (int c = 0; c < C; ++c) {
          for (int o = 0; o < O; ++o) {
            const int base = c * S + o * a.stride;
            std::int64_t acc = at(x.data, base);
            for (int t = 1; t < a.kernel; ++t) {
              acc = acc_add(acc, at(x.data, base + t));
              tally.add += 1;
            }
            auto y = static_cast<std::int32_t>(saturate(floor_div(acc, a.kernel), width_));
            if (a.fused_relu) {
              y = std::max(y, 0);
              tally.maxsat += 1;
            }
            out.data[static_cast<std::size_t>(c * O + o)] = y;
          }
        }
        break;
      }
      case LayerKind::Add: {
        const int working = q.n_x;
        std::vector<const FixedTensor*> operands;
        for (const auto& src : node.inputs) operands.push_back(&values.at(src));
        for (std::size_t i = 0; i < out.data.size(); ++i) {
          std::int64_t acc = 0;
          for (std::size_t k = 0; k < operands.size(); ++k) {
            const FixedTensor& op = *operands[k];
            const std::int64_t aligned = shift_right_floor(op.data[i], op.format.frac - working);
            tally.shift += 1;
            if (k == 0) {
              acc = aligned;
            } else {
              acc = acc_add(acc, aligned);
              tally.add += 1;
            }
          }
          std::int32_t y = requantize(acc, working, q.n_y, width_);
          tally.maxsat += 1;
          if (a.fused_relu) {
            y = std::max(y, 0);
            tally.maxsat += 1;
          }
          out.data[i] = y;
        }
        break;
      }
      case LayerKind::ReLU:
        for (std::size_t i = 0; i < out.data.size(); ++i) {
          out.data[i] = std::max(x.data[i], 0);
          tally.maxsat += 1;
        }
        break;
      case LayerKind::Flatten:
        out.data = x.data;
        break;
      case LayerKind::Input:
        break;
      case LayerKind::ZeroPad1D:
      case LayerKind::BatchNorm:
      case LayerKind::SoftMax:
        throw Error(ErrorCode::UnsupportedLayer, std::string(to_string(node.kind)) + " '" + node.id +
                                                     "' has no fixed-point form; run the transform pipeline first");
    }
  }

  const QuantizedModel& model_;
  int width_;
  int acc_bits_;
  std::map<std::string, OpCounts>* counts_;
};

void check_labels_and_sizes(std::size_t outputs, std::span<const int> labels) {
  if (outputs == 0) throw Error(ErrorCode::EmptyDataset, "dataset has no samples");
  if (labels.size() != outputs) {
    throw Error(ErrorCode::PreconditionError, std::to_string(labels.size()) + " labels for " +
                                                  std::to_string(outputs) + " samples");
  }
}

}  // namespace

FixedTensor run_fixed(const QuantizedModel& model, const FixedTensor& input) {
  FixedExecutor exec(model, nullptr);
  auto values = exec.run(input);
  return std::move(values.at(model.graph.output));
}

FixedTensor run_fixed(const QuantizedModel& model, std::span<const double> input) {
  return run_fixed(model, quantize_tensor(input, model.input_format(), model.graph.input_shape));
}

ExecutionTrace run_instrumented(const QuantizedModel& model, const FixedTensor& input) {
  ExecutionTrace trace;
  FixedExecutor exec(model, &trace.counts);
  trace.outputs = exec.run(input);
  return trace;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::PreconditionError, "argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

double mean_squared_error(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::PreconditionError, "output sets differ in sample count");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) throw Error(ErrorCode::PreconditionError, "output vectors differ in length");
    for (std::size_t j = 0; j < a[i].size(); ++j) {
      const double d = a[i][j] - b[i][j];
      sum += d * d;
    }
    n += a[i].size();
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

Metrics score(std::vector<std::vector<double>> outputs, std::span<const int> labels,
              const std::vector<std::vector<double>>* reference) {
  check_labels_and_sizes(outputs.size(), labels);
  Metrics metrics;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const int label = labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= outputs[i].size()) {
      throw Error(ErrorCode::PreconditionError, "label " + std::to_string(label) + " outside [0, " +
                                                    std::to_string(outputs[i].size()) + ")");
    }
    if (argmax(outputs[i]) == static_cast<std::size_t>(label)) ++correct;
  }
  metrics.accuracy = static_cast<double>(correct) / static_cast<double>(outputs.size());
  if (reference) metrics.mse = mean_squared_error(outputs, *reference);
  metrics.outputs = std::move(outputs);
  return metrics;
}

Metrics evaluate(const Graph& graph, const Dataset& data, const std::vector<std::vector<double>>* reference) {
  check_labels_and_sizes(data.inputs.size(), data.labels);
  std::vector<std::vector<double>> outputs;
  outputs.reserve(data.inputs.size());
  for (const auto& x : data.inputs) outputs.push_back(run_float(graph, x));
  return score(std::move(outputs), data.labels, reference);
}

Metrics evaluate(const QuantizedModel& model, const Dataset& data, const std::vector<std::vector<double>>* reference) {
  check_labels_and_sizes(data.inputs.size(), data.labels);
  std::vector<std::vector<double>> outputs;
  outputs.reserve(data.inputs.size());
  for (const auto& x : data.inputs) outputs.push_back(dequantize_tensor(run_fixed(model, x)));
  return score(std::move(outputs), data.labels, reference);
}

Metrics evaluate_fake_quant(const QuantizedModel& model, const Dataset& data,
                            const std::vector<std::vector<double>>* reference) {
  check_labels_and_sizes(data.inputs.size(), data.labels);
  std::vector<std::vector<double>> outputs;
  outputs.reserve(data.inputs.size());
  for (const auto& x : data.inputs) outputs.push_back(fake_quantize_forward(model, x));
  return score(std::move(outputs), data.labels, reference);
}

}  // namespace nnc
