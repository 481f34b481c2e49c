#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "nnc/fxp.hpp"
#include "nnc/ir/graph.hpp"

namespace nnc {

enum class ScalePolicy {
  PerNetworkFixed,  // one fractional bit count for every tensor (e.g. Q7.9)
  PerLayerDerived,  // weights and activations get their own format per layer
};

enum class ActivationSource {
  Calibration,  // formats from observed maxima
  Manual,       // formats listed per node
};

struct QuantizationScheme {
  int width = 16;
  ScalePolicy policy = ScalePolicy::PerNetworkFixed;
  int fixed_frac = 9;
  ActivationSource activations = ActivationSource::Calibration;
  /// Output fractional bits per node, used with ActivationSource::Manual.
  std::map<std::string, int> manual_frac;

  static QuantizationScheme per_network(int width, int frac);
  static QuantizationScheme per_layer(int width);
};

/// Fractional bit counts of one node. Weighted nodes (Conv1D, Dense, Affine)
/// use all four; n_b == n_w + n_x so the bias lands on the accumulator scale.
/// For Add, n_x is the working precision (smallest operand n).
struct LayerQuantInfo {
  int n_w = 0;
  int n_x = 0;
  int n_y = 0;
  int n_b = 0;
  bool has_weights = false;

  friend bool operator==(const LayerQuantInfo&, const LayerQuantInfo&) = default;
};

/// Per-node maximum absolute output over a calibration set.
struct CalibrationStats {
  std::map<std::string, double> max_abs;
};

/// Transformed graph plus integer parameters. `weights` holds the kernel
/// (Conv1D, Dense) or per-channel scale (Affine) at n_w; `biases` holds bias
/// or offset at n_b in double-width integers.
struct QuantizedModel {
  Graph graph;
  ShapeMap shapes;
  int width = 16;
  std::map<std::string, LayerQuantInfo> info;
  std::map<std::string, FixedTensor> weights;
  std::map<std::string, std::vector<std::int32_t>> biases;

  QFormat format(const std::string& node) const { return {width, info.at(node).n_y}; }
  QFormat input_format() const;
  QFormat output_format() const;
};

/// m = 1 + floor(log2(max |x|)), n = w - m - 1. Throws AllZero when every
/// value is zero and PreconditionError for empty or non-finite input.
int frac_bits_for(std::span<const double> values, int width);

/// frac_bits_for on a precomputed maximum magnitude; max_abs == 0 yields
/// width - 1.
int frac_bits_for_max(double max_abs, int width);

/// Runs the float interpreter over every sample and keeps per-node maxima.
CalibrationStats calibrate(const Graph& graph, std::span<const std::vector<double>> samples);

/// Graph must already be transformed (no BatchNorm, ZeroPad1D or SoftMax).
QuantizedModel quantize_model(const Graph& graph, const QuantizationScheme& scheme,
                              const CalibrationStats& stats = {});

/// Float evaluation with inputs, weights, biases and layer outputs passed
/// through dequantize(quantize_value(.)) at the formats quantize_model picks.
/// Add operands are first brought to the working precision.
std::vector<double> fake_quantize_forward(const Graph& graph, const QuantizationScheme& scheme,
                                          const CalibrationStats& stats, std::span<const double> input);
std::vector<double> fake_quantize_forward(const QuantizedModel& model, std::span<const double> input);

}  // namespace nnc
