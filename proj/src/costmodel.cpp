#include "nnc/costmodel.hpp"

#include <iomanip>
#include <sstream>

#include "nnc/allocator.hpp"
#include "nnc/error.hpp"
#include "nnc/fxp.hpp"

namespace nnc {

std::map<std::string, NodeCost> count_static(const Graph& graph, const ShapeMap& shapes) {
  std::map<std::string, NodeCost> result;
  for (const auto& [id, node] : graph.nodes) {
    NodeCost cost;
    OpCounts& n = cost.counts;
    const Shape out = shapes.at(id);
    const auto c_out = static_cast<std::uint64_t>(out.channels);
    const auto s_out = static_cast<std::uint64_t>(out.samples);
    const LayerAttrs& a = node.attrs;
    switch (node.kind) {
      case LayerKind::Input:
      case LayerKind::Flatten:
      case LayerKind::ZeroPad1D:
        break;
      case LayerKind::Conv1D: {
        const Shape in = shapes.at(node.inputs.front());
        std::uint64_t taps = 0;  // taps landing inside the input, over all output positions
        for (int o = 0; o < out.samples; ++o) {
          for (int t = 0; t < a.kernel; ++t) {
            const int pos = o * a.stride + t - a.pad_left;
            if (pos >= 0 && pos < in.samples) ++taps;
          }
        }
        const auto f = static_cast<std::uint64_t>(a.filters);
        n.macc = f * static_cast<std::uint64_t>(in.channels) * taps;
        n.shift = 2 * f * s_out;
        n.maxsat = f * s_out;
        break;
      }
      case LayerKind::Dense: {
        const auto units = static_cast<std::uint64_t>(a.units);
        n.macc = units * shapes.at(node.inputs.front()).size();
        n.shift = 2 * units;
        n.maxsat = units;
        break;
      }
      case LayerKind::MaxPool1D:
        n.maxsat = c_out * s_out * static_cast<std::uint64_t>(a.kernel);
        break;
      case LayerKind::AvgPool1D:
        n.add = c_out * s_out * static_cast<std::uint64_t>(a.kernel - 1);
        cost.extrapolated = true;
        break;
      case LayerKind::Add: {
        const auto i = static_cast<std::uint64_t>(node.inputs.size());
        n.add = s_out * c_out * (i - 1);
        n.shift = s_out * c_out * i;
        n.maxsat = c_out * s_out;
        break;
      }
      case LayerKind::ReLU:
        n.maxsat = c_out * s_out;
        break;
      case LayerKind::Affine:
      case LayerKind::BatchNorm:
        n.macc = c_out * s_out;
        n.shift = 2 * c_out * s_out;
        n.maxsat = c_out * s_out;
        cost.extrapolated = true;
        break;
      case LayerKind::SoftMax:
        throw Error(ErrorCode::UnsupportedLayer, "SoftMax '" + id + "' has no cost formula");
    }
    if (a.fused_relu) n.maxsat += c_out * s_out;
    result.emplace(id, cost);
  }
  return result;
}

std::uint64_t estimate_cycles(const OpCounts& counts) {
  return counts.macc + counts.add + counts.shift + 2 * counts.maxsat;
}

std::size_t rom_bytes(const Graph& graph, int width, RomMode mode) {
  const auto operand = static_cast<std::size_t>(container_bytes(width));
  const bool fixed = width <= kMaxWidth;
  std::size_t total = 0;
  for (const auto& [id, node] : graph.nodes) {
    const LayerWeights& w = node.weights;
    const std::size_t params = parameter_count(node);
    if (mode == RomMode::Deployed && fixed) {
      const std::size_t wide = w.bias.size() + w.offset.size();
      total += (params - wide) * operand + wide * static_cast<std::size_t>(container_bytes(2 * width));
    } else {
      total += params * operand;
    }
  }
  return total;
}

CostReport build_cost_report(const Graph& graph, int width) {
  const ShapeMap shapes = infer_shapes(graph);
  CostReport report;
  report.width = width;
  report.nodes = count_static(graph, shapes);
  for (const auto& [id, cost] : report.nodes) report.total += cost.counts;
  report.cycles = estimate_cycles(report.total);
  report.parameters = parameter_count(graph);
  report.rom_uniform_bytes = rom_bytes(graph, width, RomMode::Uniform);
  report.rom_deployed_bytes = rom_bytes(graph, width, RomMode::Deployed);
  report.ram_bytes = ram_bytes(plan_buffers(graph, shapes), width);
  return report;
}

nlohmann::json report_to_json(const CostReport& report) {
  nlohmann::json nodes = nlohmann::json::object();
  for (const auto& [id, cost] : report.nodes) {
    const OpCounts& c = cost.counts;
    nodes[id] = {{"macc", c.macc},
                 {"add", c.add},
                 {"shift", c.shift},
                 {"maxsat", c.maxsat},
                 {"cycles", estimate_cycles(c)},
                 {"extrapolated", cost.extrapolated}};
  }
  const OpCounts& t = report.total;
  return {{"width", report.width},
          {"nodes", nodes},
          {"total", {{"macc", t.macc}, {"add", t.add}, {"shift", t.shift}, {"maxsat", t.maxsat}}},
          {"cycles", report.cycles},
          {"parameters", report.parameters},
          {"rom_bytes", {{"uniform", report.rom_uniform_bytes}, {"deployed", report.rom_deployed_bytes}}},
          {"ram_bytes", report.ram_bytes}};
}

std::string report_to_table(const CostReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(20) << "node" << std::right << std::setw(12) << "macc" << std::setw(10) << "add"
     << std::setw(10) << "shift" << std::setw(10) << "maxsat" << std::setw(12) << "cycles" << '\n';
  for (const auto& [id, cost] : report.nodes) {
    const OpCounts& c = cost.counts;
    os << std::left << std::setw(20) << (cost.extrapolated ? id + " *" : id) << std::right << std::setw(12) << c.macc
       << std::setw(10) << c.add << std::setw(10) << c.shift << std::setw(10) << c.maxsat << std::setw(12)
       << estimate_cycles(c) << '\n';
  }
  const OpCounts& t = report.total;
  os << std::left << std::setw(20) << "total" << std::right << std::setw(12) << t.macc << std::setw(10) << t.add
     << std::setw(10) << t.shift << std::setw(10) << t.maxsat << std::setw(12) << report.cycles << '\n';
  bool any_extrapolated = false;
  for (const auto& [id, cost] : report.nodes) any_extrapolated = any_extrapolated || cost.extrapolated;
  if (any_extrapolated) os << "* extrapolated: layer kind outside the reference operation table\n";
  os << "parameters: " << report.parameters << '\n';
  os << "ROM (uniform, " << report.width << "-bit): " << report.rom_uniform_bytes << " bytes\n";
  os << "ROM (deployed): " << report.rom_deployed_bytes << " bytes\n";
  os << "RAM (buffer pools): " << report.ram_bytes << " bytes\n";
  return os.str();
}

}  // namespace nnc
