#pragma once

#include "cinnrl/causal/dag.hpp"
#include "cinnrl/causal/layering.hpp"

#include <json.hpp>

#include <string>
#include <variant>
#include <vector>

namespace cinnrl::causal {

/// Square block: u1 (the running hidden representation, d1 wide) is fused
/// with the current states of `state_slots` (d2 wide) into a d1+d2 output.
struct SymmetricSpec {
  int io_dim = 0;
  int d1 = 0;
  int d2 = 0;
  std::vector<int> state_slots;

  bool operator==(const SymmetricSpec&) const = default;
};

/// Final projection from [hidden; current states of known_slots] to the
/// next state.
struct AsymmetricSpec {
  int in_dim = 0;
  int out_dim = 0;
  std::vector<int> known_slots;

  bool operator==(const AsymmetricSpec&) const = default;
};

using BlockSpec = std::variant<SymmetricSpec, AsymmetricSpec>;

struct BlockPlan {
  int state_dim = 0;
  int action_dim = 0;
  std::vector<BlockSpec> blocks;

  int symmetric_count() const;
  int asymmetric_count() const;
  bool operator==(const BlockPlan&) const = default;
};

/// Walks the layers accumulating the predecessor width. While the next layer
/// matches it (and is not the last layer) a symmetric block injects that
/// layer's states; the remaining layers merge into one asymmetric block
/// that maps to all n next-state slots.
BlockPlan plan_structure(const Layering& layering, const CausalDag& dag);

/// Throws GraphError unless the plan's widths chain from the actions to n.
void validate(const BlockPlan& plan);

std::string describe(const BlockPlan& plan);

nlohmann::json to_json(const BlockPlan& plan);
BlockPlan plan_from_json(const nlohmann::json& doc);

}  // namespace cinnrl::causal
