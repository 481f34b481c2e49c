#include <doctest.h>

#include <random>

#include "nnc/costmodel.hpp"
#include "nnc/error.hpp"
#include "nnc/interpreter.hpp"
#include "nnc/ir/templates.hpp"
#include "nnc/quantizer.hpp"
#include "nnc/transforms.hpp"
#include "support/random_graph.hpp"

using namespace nnc;

namespace {

Graph one_layer(Shape in, LayerNode node) {
  Graph g;
  g.input_shape = in;
  g.add(LayerNode{.id = "input", .kind = LayerKind::Input});
  node.inputs = {"input"};
  const std::string id = node.id;
  g.add(std::move(node));
  g.output = id;
  return g;
}

OpCounts static_counts(const Graph& g, const std::string& id) { return count_static(g, infer_shapes(g)).at(id).counts; }

}  // namespace

TEST_CASE("operation table spot values") {
  SUBCASE("Conv1D f=16, s=128, c=9, k=3") {
    LayerNode c{.id = "c", .kind = LayerKind::Conv1D};
    c.attrs.filters = 16;
    c.attrs.kernel = 3;
    const Graph g = one_layer({9, 130}, c);
    const OpCounts n = static_counts(g, "c");
    CHECK(n.macc == 55296);
    CHECK(n.shift == 4096);
    CHECK(n.maxsat == 2048);
    CHECK(estimate_cycles(n) == 63488);
  }
  SUBCASE("MaxPool c=16, s=64, k=2") {
    LayerNode p{.id = "p", .kind = LayerKind::MaxPool1D};
    p.attrs.kernel = 2;
    p.attrs.stride = 2;
    CHECK(static_counts(one_layer({16, 128}, p), "p").maxsat == 2048);
  }
  SUBCASE("ReLU c=16, s=128") {
    CHECK(static_counts(one_layer({16, 128}, LayerNode{.id = "r", .kind = LayerKind::ReLU}), "r").maxsat == 2048);
  }
  SUBCASE("SoftMax has no formula") {
    const Graph g = one_layer({1, 4}, LayerNode{.id = "s", .kind = LayerKind::SoftMax});
    CHECK_THROWS_AS(count_static(g, infer_shapes(g)), Error);
  }
  SUBCASE("AvgPool is marked extrapolated") {
    LayerNode p{.id = "p", .kind = LayerKind::AvgPool1D};
    p.attrs.kernel = 4;
    p.attrs.stride = 4;
    const Graph g = one_layer({2, 16}, p);
    const auto cost = count_static(g, infer_shapes(g)).at("p");
    CHECK(cost.extrapolated);
    CHECK(cost.counts.add == 2 * 4 * 3);
  }
}

TEST_CASE("estimate_cycles") {
  CHECK(estimate_cycles({}) == 0);
  CHECK(estimate_cycles(OpCounts{.add = 2048, .shift = 4096, .maxsat = 2048}) == 10240);
}

TEST_CASE("ROM footprint of ResNetv1-6") {
  const Graph g = run_pipeline(build_resnet_v1_6(16, {9, 128}, 6));
  CHECK(rom_bytes(g, 8, RomMode::Uniform) == 3958);
  CHECK(rom_bytes(g, 16, RomMode::Uniform) == 7916);
  CHECK(rom_bytes(g, 32, RomMode::Uniform) == 4 * 3958);
  std::size_t biases = 0;
  for (const auto& [id, node] : g.nodes) biases += node.weights.bias.size();
  CHECK(rom_bytes(g, 8, RomMode::Deployed) == 3958 + biases);
  CHECK(rom_bytes(g, 16, RomMode::Deployed) == 7916 + 2 * biases);
  Graph empty;
  CHECK(rom_bytes(empty, 8, RomMode::Uniform) == 0);

  const CostReport report = build_cost_report(g, 8);
  CHECK(report.rom_uniform_bytes == 3958);
  CHECK(report_to_table(report).find("ROM (uniform, 8-bit): 3958 bytes") != std::string::npos);
  CHECK(report_to_json(report)["rom_bytes"]["uniform"] == 3958);
}

TEST_CASE("ROM scales linearly with parameter count") {
  for (int f : {2, 5, 9}) {
    const Graph g = build_resnet_v1_6(f, {3, 32}, 4);
    for (int w : {8, 9, 16, 32}) {
      CHECK(rom_bytes(g, w, RomMode::Uniform) == parameter_count(g) * static_cast<std::size_t>(container_bytes(w)));
    }
  }
}

TEST_CASE("static counts equal instrumented counts") {
  std::mt19937 rng(42);
  testing::RandomModelOptions opt;
  opt.padding = opt.strides = false;
  opt.batchnorm = true;
  for (int trial = 0; trial < 60; ++trial) {
    opt.min_residual = trial % 3;
    const Graph g = run_pipeline(testing::random_model(rng, opt));
    const auto fixed = count_static(g, infer_shapes(g));
    const QuantizedModel m = quantize_model(g, QuantizationScheme::per_network(16, 9));
    const ExecutionTrace trace =
        run_instrumented(m, quantize_tensor(testing::random_input(rng, g.input_shape), m.input_format(), g.input_shape));
    OpCounts total_static;
    for (const auto& [id, cost] : fixed) {
      CHECK_MESSAGE(cost.counts == trace.counts.at(id), id);
      total_static += cost.counts;
    }
    CHECK(total_static == trace.total());
  }
}

TEST_CASE("padded and strided convolutions count the products performed") {
  std::mt19937 rng(43);
  testing::RandomModelOptions opt;
  for (int trial = 0; trial < 40; ++trial) {
    const Graph g = run_pipeline(testing::random_model(rng, opt));
    const auto fixed = count_static(g, infer_shapes(g));
    const QuantizedModel m = quantize_model(g, QuantizationScheme::per_network(16, 9));
    const ExecutionTrace trace =
        run_instrumented(m, quantize_tensor(testing::random_input(rng, g.input_shape), m.input_format(), g.input_shape));
    for (const auto& [id, cost] : fixed) CHECK(cost.counts == trace.counts.at(id));
  }
}
