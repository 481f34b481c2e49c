#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nnc/fxp.hpp"
#include "nnc/ir/graph.hpp"
#include "nnc/op_counts.hpp"
#include "nnc/quantizer.hpp"

namespace nnc {

/// Reference float execution. Accumulation runs bias first, then input
/// channels in order, then taps in order; the emitted C follows the same
/// order so float32 results agree bit for bit.
template <typename T>
std::vector<T> run_float(const Graph& graph, std::span<const T> input);

extern template std::vector<float> run_float<float>(const Graph&, std::span<const float>);
extern template std::vector<double> run_float<double>(const Graph&, std::span<const double>);

inline std::vector<double> run_float(const Graph& graph, const std::vector<double>& input) {
  return run_float<double>(graph, std::span<const double>(input));
}

/// Outputs of every node, keyed by id.
std::map<std::string, std::vector<double>> run_float_trace(const Graph& graph, std::span<const double> input);

struct ExecutionTrace {
  std::map<std::string, FixedTensor> outputs;
  std::map<std::string, OpCounts> counts;

  OpCounts total() const;
};

/// Bit-exact fixed-point execution. Products accumulate in a 2w-bit
/// two's-complement accumulator that starts from the bias, then each output
/// is requantized, saturated and, when fused, clamped at zero.
/// Throws FormatMismatch when the input format is not the model's input format.
FixedTensor run_fixed(const QuantizedModel& model, const FixedTensor& input);

/// run_fixed that also records every node's output and operation tallies.
ExecutionTrace run_instrumented(const QuantizedModel& model, const FixedTensor& input);

/// Converts a real input with the model's input format and runs it.
FixedTensor run_fixed(const QuantizedModel& model, std::span<const double> input);

struct Dataset {
  std::vector<std::vector<double>> inputs;
  std::vector<int> labels;
};

struct Metrics {
  double accuracy = 0.0;
  std::vector<std::vector<double>> outputs;
  std::optional<double> mse;  // against the supplied reference outputs
};

/// Index of the largest element; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

/// Scores precomputed outputs. Throws EmptyDataset and PreconditionError
/// (label out of range, size mismatch).
Metrics score(std::vector<std::vector<double>> outputs, std::span<const int> labels,
              const std::vector<std::vector<double>>* reference = nullptr);

Metrics evaluate(const Graph& graph, const Dataset& data, const std::vector<std::vector<double>>* reference = nullptr);
/// Inputs are converted with the model's input format; outputs are dequantized.
Metrics evaluate(const QuantizedModel& model, const Dataset& data,
                 const std::vector<std::vector<double>>* reference = nullptr);
Metrics evaluate_fake_quant(const QuantizedModel& model, const Dataset& data,
                            const std::vector<std::vector<double>>* reference = nullptr);

/// Mean squared difference over all elements of two equally shaped output sets.
double mean_squared_error(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b);

}  // namespace nnc
