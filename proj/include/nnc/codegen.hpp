#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "nnc/allocator.hpp"
#include "nnc/fxp.hpp"
#include "nnc/ir/graph.hpp"
#include "nnc/quantizer.hpp"

namespace nnc {

/// Generated C99 sources keyed by file name: number.h, model.h, model.c and
/// one weights_<layer>.h per parameterized layer.
struct SourceBundle {
  std::map<std::string, std::string> files;

  void write_to(const std::filesystem::path& directory) const;
};

/// Substitutes every {{name}} in `text`. Throws PreconditionError on an
/// unknown or unterminated placeholder.
std::string render_template(std::string_view text, const std::map<std::string, std::string>& values);

/// Fixed-point library. number_t/long_number_t are the operand and double
/// width integer types and clamp_to_number_t saturates to the model width.
SourceBundle emit(const QuantizedModel& model, const AllocationPlan& plan);

/// float32 library with the reference interpreter's accumulation order.
SourceBundle emit(const Graph& graph, const AllocationPlan& plan);

/// C helper converting a real input to number_t at `fmt`:
/// clamp_to_number_t(floor(x * 2^n)) with the scaled value clamped before
/// the integer cast.
std::string emit_input_conversion_helper(QFormat fmt);

/// Test driver main.c: reads little-endian number_t values (input tensors
/// back to back) from stdin, runs cnn() per tensor and prints each output
/// element on its own line.
std::string emit_test_harness();

/// Valid, unique C identifiers for every node id, stable across runs.
std::map<std::string, std::string> c_identifiers(const Graph& graph);

}  // namespace nnc
