#include "nnc/quantizer.hpp"

#include <algorithm>
#include <cmath>

#include "float_exec.hpp"
#include "nnc/error.hpp"
#include "nnc/interpreter.hpp"

namespace nnc {

QuantizationScheme QuantizationScheme::per_network(int width, int frac) {
  QuantizationScheme s;
  s.width = width;
  s.policy = ScalePolicy::PerNetworkFixed;
  s.fixed_frac = frac;
  return s;
}

QuantizationScheme QuantizationScheme::per_layer(int width) {
  QuantizationScheme s;
  s.width = width;
  s.policy = ScalePolicy::PerLayerDerived;
  s.activations = ActivationSource::Calibration;
  return s;
}

QFormat QuantizedModel::input_format() const { return format(input_node_id(graph)); }
QFormat QuantizedModel::output_format() const { return format(graph.output); }

int frac_bits_for_max(double max_abs, int width) {
  if (!std::isfinite(max_abs) || max_abs < 0) {
    throw Error(ErrorCode::PreconditionError, "maximum magnitude must be finite and non-negative");
  }
  if (max_abs == 0.0) return width - 1;
  int exponent = 0;
  // max_abs = mantissa * 2^exponent with mantissa in [0.5, 1), so
  // floor(log2(max_abs)) = exponent - 1 exactly.
  std::frexp(max_abs, &exponent);
  const int integer_bits = exponent;
  return width - integer_bits - 1;
}

int frac_bits_for(std::span<const double> values, int width) {
  if (values.empty()) throw Error(ErrorCode::PreconditionError, "frac_bits_for needs at least one value");
  double peak = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::PreconditionError, "non-finite value");
    peak = std::max(peak, std::fabs(v));
  }
  if (peak == 0.0) throw Error(ErrorCode::AllZero, "every value is zero");
  return frac_bits_for_max(peak, width);
}

CalibrationStats calibrate(const Graph& graph, std::span<const std::vector<double>> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyDataset, "calibration needs at least one sample");
  CalibrationStats stats;
  for (const auto& [id, node] : graph.nodes) stats.max_abs[id] = 0.0;
  for (const auto& sample : samples) {
    const auto trace = run_float_trace(graph, sample);
    for (const auto& [id, values] : trace) {
      double& peak = stats.max_abs[id];
      for (double v : values) peak = std::max(peak, std::fabs(v));
    }
  }
  return stats;
}

namespace {

double max_abs_of(const std::vector<double>& values) {
  double peak = 0.0;
  for (double v : values) peak = std::max(peak, std::fabs(v));
  return peak;
}

}  // namespace

QuantizedModel quantize_model(const Graph& graph, const QuantizationScheme& scheme, const CalibrationStats& stats) {
  check_width(scheme.width);
  require_valid(graph);
  for (const auto& [id, node] : graph.nodes) {
    if (node.kind == LayerKind::BatchNorm || node.kind == LayerKind::ZeroPad1D || node.kind == LayerKind::SoftMax) {
      throw Error(ErrorCode::UnsupportedLayer, std::string(to_string(node.kind)) + " '" + id +
                                                   "' must be removed by the transform pipeline before quantization");
    }
  }

  const int w = scheme.width;
  const bool fixed = scheme.policy == ScalePolicy::PerNetworkFixed;
  auto activation_frac = [&](const std::string& id) {
    if (fixed) return scheme.fixed_frac;
    if (scheme.activations == ActivationSource::Manual) {
      auto it = scheme.manual_frac.find(id);
      if (it == scheme.manual_frac.end()) throw Error(ErrorCode::MissingStats, "no manual format for node '" + id + "'");
      return it->second;
    }
    auto it = stats.max_abs.find(id);
    if (it == stats.max_abs.end()) throw Error(ErrorCode::MissingStats, "no calibration maximum for node '" + id + "'");
    return frac_bits_for_max(it->second, w);
  };
  auto weight_frac = [&](const std::vector<double>& values) {
    return fixed ? scheme.fixed_frac : frac_bits_for_max(max_abs_of(values), w);
  };

  QuantizedModel model;
  model.graph = graph;
  model.shapes = infer_shapes(graph);
  model.width = w;
  const std::string& input_id = input_node_id(graph);

  for (const auto& id : topo_order(graph)) {
    const LayerNode& node = graph.nodes.at(id);
    LayerQuantInfo q;
    if (id == input_id) {
      q.n_y = activation_frac(id);
      q.n_x = q.n_y;
      model.info[id] = q;
      continue;
    }
    const int upstream = model.info.at(node.inputs.front()).n_y;
    switch (node.kind) {
      case LayerKind::Conv1D:
      case LayerKind::Dense:
      case LayerKind::Affine: {
        const bool affine = node.kind == LayerKind::Affine;
        const std::vector<double>& kernel = affine ? node.weights.scale : node.weights.kernel;
        const std::vector<double>& bias = affine ? node.weights.offset : node.weights.bias;
        q.has_weights = true;
        q.n_x = upstream;
        q.n_w = weight_frac(kernel);
        q.n_b = q.n_w + q.n_x;
        q.n_y = activation_frac(id);
        model.weights[id] = quantize_tensor(kernel, QFormat{w, q.n_w}, Shape{1, static_cast<int>(kernel.size())});
        const QFormat bias_format{2 * w, q.n_b};
        std::vector<std::int32_t> qb;
        qb.reserve(bias.size());
        for (double b : bias) qb.push_back(quantize_value(b, bias_format));
        model.biases[id] = std::move(qb);
        break;
      }
      case LayerKind::Add: {
        int working = upstream;
        for (const auto& src : node.inputs) working = std::min(working, model.info.at(src).n_y);
        q.n_x = working;
        q.n_y = activation_frac(id);
        break;
      }
      default:
        // MaxPool1D, AvgPool1D, ReLU and Flatten keep their input format.
        q.n_x = upstream;
        q.n_y = upstream;
        break;
    }
    model.info[id] = q;
  }
  return model;
}

namespace {

struct FakeQuantHooks {
  const QuantizedModel& model;
  std::map<std::string, LayerWeights> weights_cache;

  explicit FakeQuantHooks(const QuantizedModel& m) : model(m) {
    for (const auto& [id, tensor] : model.weights) {
      const LayerNode& node = model.graph.nodes.at(id);
      const LayerQuantInfo& q = model.info.at(id);
      std::vector<double> kernel = dequantize_tensor(tensor);
      std::vector<double> bias;
      for (auto b : model.biases.at(id)) bias.push_back(dequantize(b, q.n_b));
      LayerWeights lw;
      if (node.kind == LayerKind::Affine) {
        lw.scale = std::move(kernel);
        lw.offset = std::move(bias);
      } else {
        lw.kernel = std::move(kernel);
        lw.bias = std::move(bias);
      }
      weights_cache.emplace(id, std::move(lw));
    }
  }

  const LayerWeights& weights(const LayerNode& node) { return weights_cache.at(node.id); }

  void output(const LayerNode& node, std::vector<double>& values) {
    const QFormat fmt = model.format(node.id);
    for (auto& v : values) v = fake_quantize(v, fmt);
  }

  void add_operand(const LayerNode& node, const std::string&, std::vector<double>& values) {
    // Alignment is a floor shift without saturation.
    const int working = model.info.at(node.id).n_x;
    for (auto& v : values) v = std::ldexp(std::floor(std::ldexp(v, working)), -working);
  }
};

}  // namespace

std::vector<double> fake_quantize_forward(const QuantizedModel& model, std::span<const double> input) {
  FakeQuantHooks hooks(model);
  auto values = detail::execute_float<double>(model.graph, input, hooks);
  return std::move(values.at(model.graph.output));
}

std::vector<double> fake_quantize_forward(const Graph& graph, const QuantizationScheme& scheme,
                                          const CalibrationStats& stats, std::span<const double> input) {
  return fake_quantize_forward(quantize_model(graph, scheme, stats), input);
}

}  // namespace nnc
