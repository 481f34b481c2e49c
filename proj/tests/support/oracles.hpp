#pragma once

// Independent reference implementations used to check the library. None of
// them call into the code under test beyond plain data structures.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nnc/allocator.hpp"
#include "nnc/codegen.hpp"
#include "nnc/ir/graph.hpp"

namespace nnc::testing {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------------------
// Exact rational arithmetic

/// A finite double converted without rounding.
inline cpp_rational exact(double x) {
  int exponent = 0;
  const double mantissa = std::frexp(x, &exponent);
  // mantissa * 2^53 is an integer for every finite double.
  const auto scaled = static_cast<std::int64_t>(std::ldexp(mantissa, 53));
  cpp_rational r(scaled);
  const int shift = exponent - 53;
  if (shift >= 0) {
    r *= cpp_rational(cpp_int(1) << shift);
  } else {
    r /= cpp_rational(cpp_int(1) << -shift);
  }
  return r;
}

inline cpp_rational pow2(int e) {
  return e >= 0 ? cpp_rational(cpp_int(1) << e) : cpp_rational(cpp_int(1), cpp_int(1) << -e);
}

inline cpp_int floor_rational(const cpp_rational& r) {
  const cpp_int num = boost::multiprecision::numerator(r);
  const cpp_int den = boost::multiprecision::denominator(r);  // always positive
  cpp_int q = num / den;                                        // truncates toward zero
  if (num < 0 && q * den != num) q -= 1;
  return q;
}

/// n = w - m - 1 with m = 1 + floor(log2 max|x|), found by comparing against
/// powers of two instead of taking logarithms.
inline int oracle_frac_bits(const std::vector<double>& values, int width) {
  cpp_rational peak = 0;
  for (double v : values) {
    const cpp_rational a = exact(std::fabs(v));
    if (a > peak) peak = a;
  }
  // Find e with 2^e <= peak < 2^(e+1).
  int e = 0;
  while (pow2(e) > peak) --e;
  while (pow2(e + 1) <= peak) ++e;
  const int m = 1 + e;
  return width - m - 1;
}

/// saturate(floor(x * 2^n), w) in exact arithmetic.
inline std::int64_t oracle_quantize(double x, int width, int frac) {
  const cpp_int v = floor_rational(exact(x) * pow2(frac));
  const cpp_int lo = -(cpp_int(1) << (width - 1));
  const cpp_int hi = (cpp_int(1) << (width - 1)) - 1;
  if (v < lo) return static_cast<std::int64_t>(lo);
  if (v > hi) return static_cast<std::int64_t>(hi);
  return static_cast<std::int64_t>(v);
}

// ---------------------------------------------------------------------------
// Buffer live-range simulation

struct SimulationResult {
  int conflicts = 0;
  std::vector<std::string> messages;
};

/// Replays `order` and checks every write against the pools still holding
/// data that some unexecuted node (or the caller, for the output) will read.
inline SimulationResult simulate_live_ranges(const Graph& graph, const std::map<std::string, Shape>& shapes,
                                             const AllocationPlan& plan, const std::vector<std::string>& order) {
  SimulationResult result;
  auto report = [&](const std::string& message) {
    ++result.conflicts;
    result.messages.push_back(message);
  };
  std::map<std::string, std::set<std::string>> pending;  // buffer -> consumers not yet run
  for (const auto& [id, node] : graph.nodes) {
    for (const auto& src : node.inputs) pending[src].insert(id);
  }
  std::map<std::size_t, std::string> occupant;  // pool -> node whose output it holds
  for (const auto& id : order) {
    const LayerNode& node = graph.nodes.at(id);
    if (node.kind == LayerKind::Input) continue;
    auto it = plan.assignment.find(id);
    if (it == plan.assignment.end()) {
      report(id + " has no pool");
      continue;
    }
    const std::size_t pool = it->second;
    if (pool >= plan.pool_sizes.size() || plan.pool_sizes[pool] < shapes.at(id).size()) {
      report(id + " does not fit pool " + std::to_string(pool));
      continue;
    }
    auto held = occupant.find(pool);
    if (held != occupant.end()) {
      const std::string& prev = held->second;
      bool is_input = false;
      for (const auto& src : node.inputs) is_input = is_input || src == prev;
      const auto& waiting = pending[prev];
      const bool others_waiting = !waiting.empty() && !(waiting.size() == 1 && waiting.count(id) != 0);
      if (is_input) report(id + " overwrites its own input " + prev);
      else if (others_waiting) report(id + " overwrites " + prev + " before all consumers ran");
      else if (prev == graph.output) report(id + " overwrites the graph output");
    }
    occupant[pool] = id;
    for (const auto& src : node.inputs) pending[src].erase(id);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Compile and run emitted C

#ifndef NNC_TEST_CC
#define NNC_TEST_CC "cc"
#endif

inline std::filesystem::path scratch_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() / ("nnc_" + tag + "_" + std::to_string(rng()));
  std::filesystem::create_directories(dir);
  return dir;
}

/// Builds bundle + main.c into an executable. Returns the binary path or
/// throws std::runtime_error with the compiler log.
inline std::filesystem::path compile_bundle(const SourceBundle& bundle, const std::filesystem::path& dir) {
  SourceBundle full = bundle;
  full.files["main.c"] = emit_test_harness();
  full.write_to(dir);
  const auto exe = dir / "model_test";
  const auto log = dir / "cc.log";
  const std::string cmd = std::string(NNC_TEST_CC) + " -std=c99 -O2 -ffp-contract=off -Wall -Wextra -pedantic -Werror " +
                          (dir / "model.c").string() + " " + (dir / "main.c").string() + " -lm -o " + exe.string() +
                          " > " + log.string() + " 2>&1";
  if (std::system(cmd.c_str()) != 0) {
    std::ifstream in(log);
    std::stringstream text;
    text << in.rdbuf();
    throw std::runtime_error("C compilation failed:\n" + text.str());
  }
  return exe;
}

/// Feeds little-endian values of `bytes` each and returns the printed lines.
inline std::vector<std::string> run_binary(const std::filesystem::path& exe, const std::vector<std::uint32_t>& words,
                                           int bytes) {
  const auto dir = exe.parent_path();
  const auto in_path = dir / "input.bin";
  const auto out_path = dir / "output.txt";
  {
    std::ofstream out(in_path, std::ios::binary);
    for (std::uint32_t w : words) {
      for (int b = 0; b < bytes; ++b) out.put(static_cast<char>((w >> (8 * b)) & 0xFF));
    }
  }
  const std::string cmd = exe.string() + " < " + in_path.string() + " > " + out_path.string();
  if (std::system(cmd.c_str()) != 0) throw std::runtime_error("generated program failed");
  std::ifstream in(out_path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

}  // namespace nnc::testing
