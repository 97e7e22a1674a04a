#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace cinnrl::causal {

enum class NodeKind { state, action, next_state };

const char* to_string(NodeKind kind);
NodeKind parse_kind(const std::string& text);

struct DagNode {
  std::string name;
  NodeKind kind;
  /// Slot within its kind: action index, or state index shared by the
  /// S^t and S^{t+1} node of the same variable.
  int index;
};

/// Causal graph over current states, actions and next states.
///
/// Invariants checked on construction: acyclic, unique names, every next
/// state has a parent, actions have only state parents, state nodes have no
/// parents, and S^t / S^{t+1} cover the same slots 0..n-1.
class CausalDag {
 public:
  CausalDag(std::vector<DagNode> nodes, const std::vector<std::pair<std::string, std::string>>& edges);

  /// {"nodes":[{"name","kind"[,"index"]}], "edges":[["src","dst"]]}. Without
  /// "index", slots follow declaration order within each kind.
  static CausalDag from_json(const nlohmann::json& doc);
  static CausalDag load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  const std::vector<DagNode>& nodes() const { return nodes_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<int>& parents(int node) const { return parents_[static_cast<std::size_t>(node)]; }
  int find(const std::string& name) const;

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }

 private:
  std::vector<DagNode> nodes_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> parents_;
  int state_dim_ = 0;
  int action_dim_ = 0;
};

}  // namespace cinnrl::causal
