#include "nnc/allocator.hpp"

#include <algorithm>
#include <optional>

#include "nnc/fxp.hpp"

namespace nnc {

AllocationPlan plan_buffers(const Graph& graph, const ShapeMap& shapes) {
  const std::vector<std::string> order = topo_order(graph);
  const std::string& input_id = input_node_id(graph);
  const ConsumerMap consumers = consumers_of(graph);

  // Consumers of each buffer that have not executed yet.
  std::map<std::string, std::size_t> pending;
  for (const auto& [id, users] : consumers) pending[id] = users.size();

  AllocationPlan plan;
  std::vector<std::optional<std::string>> tenant;  // buffer currently held by each pool

  for (const auto& id : order) {
    const LayerNode& node = graph.nodes.at(id);
    if (id != input_id) {
      std::optional<std::size_t> chosen;
      for (std::size_t p = 0; p < tenant.size() && !chosen; ++p) {
        const auto& held = tenant[p];
        const bool holds_input =
            held && std::find(node.inputs.begin(), node.inputs.end(), *held) != node.inputs.end();
        const bool holds_live = held && (pending.at(*held) > 0 || *held == graph.output);
        if (!holds_input && !holds_live) chosen = p;
      }
      if (!chosen) {
        chosen = tenant.size();
        tenant.emplace_back();
        plan.pool_sizes.push_back(0);
      }
      tenant[*chosen] = id;
      plan.assignment[id] = *chosen;
      plan.pool_sizes[*chosen] = std::max(plan.pool_sizes[*chosen], shapes.at(id).size());
    }
    // This node has now executed; its inputs lose one pending reader each.
    std::vector<std::string> distinct = node.inputs;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    for (const auto& src : distinct) --pending.at(src);
  }
  return plan;
}

std::size_t ram_bytes(const AllocationPlan& plan, int width) {
  std::size_t total = 0;
  for (auto size : plan.pool_sizes) total += size;
  return total * static_cast<std::size_t>(container_bytes(width));
}

nlohmann::json plan_to_json(const AllocationPlan& plan) {
  nlohmann::json assignment = nlohmann::json::object();
  for (const auto& [id, pool] : plan.assignment) assignment[id] = pool;
  return {{"assignment", assignment}, {"pool_sizes", plan.pool_sizes}, {"pool_count", plan.pool_count()}};
}

}  // namespace nnc
