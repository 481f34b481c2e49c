#pragma once

// Compiles emitted code and compares it with the interpreter.

#include <charconv>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "nnc/codegen.hpp"
#include "nnc/interpreter.hpp"
#include "nnc/quantizer.hpp"
#include "support/oracles.hpp"
#include "support/random_graph.hpp"

namespace nnc::testing {

struct CompareResult {
  std::size_t compared = 0;
  std::size_t mismatches = 0;
  std::string first_mismatch;
};

/// Runs `inputs` through the compiled fixed-point library and run_fixed.
inline CompareResult compare_fixed(const QuantizedModel& model, const std::vector<std::vector<double>>& inputs,
                                   const std::string& tag) {
  const AllocationPlan plan = plan_buffers(model.graph, model.shapes);
  const auto dir = scratch_dir(tag);
  const auto exe = compile_bundle(emit(model, plan), dir);
  std::vector<std::uint32_t> words;
  std::vector<std::int32_t> expected;
  for (const auto& x : inputs) {
    const FixedTensor fx = quantize_tensor(x, model.input_format(), model.graph.input_shape);
    for (auto v : fx.data) words.push_back(static_cast<std::uint32_t>(v));
    const FixedTensor y = run_fixed(model, fx);
    expected.insert(expected.end(), y.data.begin(), y.data.end());
  }
  const auto lines = run_binary(exe, words, container_bytes(model.width));
  CompareResult r;
  if (lines.size() != expected.size()) {
    r.mismatches = 1;
    r.first_mismatch = "line count " + std::to_string(lines.size()) + " vs " + std::to_string(expected.size());
    return r;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    ++r.compared;
    if (lines[i] != std::to_string(expected[i])) {
      if (r.mismatches++ == 0) r.first_mismatch = "element " + std::to_string(i) + ": C " + lines[i] + " vs " + std::to_string(expected[i]);
    }
  }
  std::filesystem::remove_all(dir);
  return r;
}

/// Same for the float32 library against run_float<float>.
inline CompareResult compare_float(const Graph& graph, const std::vector<std::vector<double>>& inputs,
                                   const std::string& tag) {
  const AllocationPlan plan = plan_buffers(graph, infer_shapes(graph));
  const auto dir = scratch_dir(tag);
  const auto exe = compile_bundle(emit(graph, plan), dir);
  std::vector<std::uint32_t> words;
  std::vector<float> expected;
  for (const auto& x : inputs) {
    std::vector<float> xf(x.begin(), x.end());
    for (float v : xf) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      words.push_back(bits);
    }
    const auto y = run_float<float>(graph, std::span<const float>(xf));
    expected.insert(expected.end(), y.begin(), y.end());
  }
  const auto lines = run_binary(exe, words, 4);
  CompareResult r;
  if (lines.size() != expected.size()) {
    r.mismatches = 1;
    r.first_mismatch = "line count";
    return r;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    ++r.compared;
    float got = 0;
    std::from_chars(lines[i].data(), lines[i].data() + lines[i].size(), got);
    if (std::memcmp(&got, &expected[i], sizeof got) != 0) {
      if (r.mismatches++ == 0) r.first_mismatch = "element " + std::to_string(i) + ": C " + lines[i];
    }
  }
  std::filesystem::remove_all(dir);
  return r;
}

}  // namespace nnc::testing
