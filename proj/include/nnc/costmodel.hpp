#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <json.hpp>

#include "nnc/ir/graph.hpp"
#include "nnc/op_counts.hpp"

namespace nnc {

struct NodeCost {
  OpCounts counts;
  /// True when the layer kind has no row in the reference operation table
  /// and the counts come from an extension formula.
  bool extrapolated = false;
};

/// Per-node operation counts from the layer dimensions. s is the output
/// sample count (input feature count for Dense):
///   Conv1D  macc = f*c*(taps inside the padded input, summed over s), shift = 2fs, maxsat = fs
///   Dense   macc = n*s, shift = 2n, maxsat = n
///   MaxPool maxsat = c*s*k
///   Add     add = s*c*(i-1), shift = s*c*i, maxsat = c*s
///   ReLU    maxsat = c*s
/// A fused ReLU adds the ReLU row for the layer's output. Extension formulas:
///   AvgPool add = c*s*(k-1); Affine/BatchNorm macc = c*s, shift = 2cs, maxsat = cs.
/// Throws UnsupportedLayer for SoftMax.
std::map<std::string, NodeCost> count_static(const Graph& graph, const ShapeMap& shapes);

/// macc + add + shift + 2 * maxsat.
std::uint64_t estimate_cycles(const OpCounts& counts);

enum class RomMode {
  Uniform,  // every parameter at the operand width
  Deployed,         // biases/offsets at double width in fixed-point modes
};

/// Parameter storage in bytes. `width` is the operand width; 32 selects float32.
std::size_t rom_bytes(const Graph& graph, int width, RomMode mode);

struct CostReport {
  std::map<std::string, NodeCost> nodes;
  OpCounts total;
  std::uint64_t cycles = 0;
  int width = 16;
  std::size_t rom_uniform_bytes = 0;
  std::size_t rom_deployed_bytes = 0;
  std::size_t ram_bytes = 0;
  std::size_t parameters = 0;
};

/// Counts, cycles, ROM (both modes) and RAM from the buffer plan.
CostReport build_cost_report(const Graph& graph, int width);

nlohmann::json report_to_json(const CostReport& report);
std::string report_to_table(const CostReport& report);

}  // namespace nnc
