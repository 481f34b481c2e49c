#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "nnc/ir/graph.hpp"

namespace nnc {

/// Layer outputs mapped onto reusable scratch pools. The Input node is not
/// assigned: its buffer belongs to the caller.
struct AllocationPlan {
  std::map<std::string, std::size_t> assignment;
  std::vector<std::size_t> pool_sizes;  // elements

  std::size_t pool_count() const { return pool_sizes.size(); }
};

/// Greedy first-fit over topo_order: each node takes the lowest-index pool
/// that holds neither one of its inputs nor a buffer some unexecuted node
/// still reads; a new pool is opened otherwise. Pools are sized to their
/// largest tenant.
AllocationPlan plan_buffers(const Graph& graph, const ShapeMap& shapes);

/// Sum of pool sizes times container_bytes(width); width 32 means float32.
std::size_t ram_bytes(const AllocationPlan& plan, int width);

nlohmann::json plan_to_json(const AllocationPlan& plan);

}  // namespace nnc
