#pragma once

#include "cinnrl/causal/dag.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cinnrl::causal {

/// Topological layers over the action and next-state nodes. Current-state
/// nodes are conditioning inputs and are not layered.
struct Layering {
  std::vector<std::vector<std::string>> layers;

  std::size_t node_count() const;
  std::vector<std::size_t> widths() const;
  bool operator==(const Layering&) const = default;
};

/// Layer of a node = length of the longest path reaching it through action
/// and next-state nodes. Actions sit in layer 0; a next-state node is at
/// least in layer 1. Nodes keep declaration order within a layer.
Layering topo_layering(const CausalDag& dag);

/// Layer index of every layered node, keyed by DAG node index (-1 for
/// current-state nodes).
std::vector<int> layer_of(const Layering& layering, const CausalDag& dag);

/// Reassigns next-state nodes to layer positions by a seeded permutation,
/// keeping every layer's width and layer 0 intact. Seed 0 is the identity.
Layering shuffle_order(const Layering& layering, std::uint64_t seed);

std::string describe(const Layering& layering);

}  // namespace cinnrl::causal
