#include "cinnrl/causal/dag.hpp"

#include "cinnrl/error.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

namespace cinnrl::causal {

const char* to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::state: return "state";
    case NodeKind::action: return "action";
    case NodeKind::next_state: return "next_state";
  }
  return "?";
}

NodeKind parse_kind(const std::string& text) {
  if (text == "state") return NodeKind::state;
  if (text == "action") return NodeKind::action;
  if (text == "next_state") return NodeKind::next_state;
  throw ParseError("unknown node kind '" + text + "'");
}

namespace {

// Returns a cycle as a list of node indices, or empty when acyclic.
std::vector<int> find_cycle(std::size_t n, const std::vector<std::vector<int>>& children) {
  enum Color { white, grey, black };
  std::vector<Color> color(n, white);
  std::vector<int> parent(n, -1);
  for (std::size_t root = 0; root < n; ++root) {
    if (color[root] != white) continue;
    std::vector<std::pair<int, std::size_t>> stack{{static_cast<int>(root), 0}};
    color[root] = grey;
    while (!stack.empty()) {
      auto& [u, next] = stack.back();
      const auto& kids = children[static_cast<std::size_t>(u)];
      if (next < kids.size()) {
        const int v = kids[next++];
        if (color[static_cast<std::size_t>(v)] == grey) {
          std::vector<int> cycle{v};
          for (int w = u; w != v; w = parent[static_cast<std::size_t>(w)]) cycle.push_back(w);
          std::reverse(cycle.begin() + 1, cycle.end());
          return cycle;
        }
        if (color[static_cast<std::size_t>(v)] == white) {
          color[static_cast<std::size_t>(v)] = grey;
          parent[static_cast<std::size_t>(v)] = u;
          stack.emplace_back(v, 0);
        }
      } else {
        color[static_cast<std::size_t>(u)] = black;
        stack.pop_back();
      }
    }
  }
  return {};
}

}  // namespace

CausalDag::CausalDag(std::vector<DagNode> nodes,
                     const std::vector<std::pair<std::string, std::string>>& edges)
    : nodes_(std::move(nodes)) {
  std::map<std::string, int> by_name;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!by_name.emplace(nodes_[i].name, static_cast<int>(i)).second) {
      throw GraphError("duplicate node name '" + nodes_[i].name + "'");
    }
  }
  parents_.assign(nodes_.size(), {});
  std::vector<std::vector<int>> children(nodes_.size());
  for (const auto& [src, dst] : edges) {
    const auto s = by_name.find(src);
    const auto d = by_name.find(dst);
    if (s == by_name.end()) throw GraphError("edge references unknown node '" + src + "'");
    if (d == by_name.end()) throw GraphError("edge references unknown node '" + dst + "'");
    edges_.emplace_back(s->second, d->second);
    parents_[static_cast<std::size_t>(d->second)].push_back(s->second);
    children[static_cast<std::size_t>(s->second)].push_back(d->second);
  }

  if (auto cycle = find_cycle(nodes_.size(), children); !cycle.empty()) {
    std::string witness;
    for (int v : cycle) witness += nodes_[static_cast<std::size_t>(v)].name + " -> ";
    witness += nodes_[static_cast<std::size_t>(cycle.front())].name;
    throw GraphError("causal graph has a cycle: " + witness);
  }

  std::set<int> state_slots, next_slots, action_slots;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const DagNode& node = nodes_[i];
    const auto& pa = parents_[i];
    switch (node.kind) {
      case NodeKind::state:
        if (!pa.empty()) throw GraphError("state node '" + node.name + "' must not have parents");
        if (!state_slots.insert(node.index).second) {
          throw GraphError("state slot " + std::to_string(node.index) + " declared twice");
        }
        break;
      case NodeKind::action:
        for (int p : pa) {
          if (nodes_[static_cast<std::size_t>(p)].kind != NodeKind::state) {
            throw GraphError("action node '" + node.name + "' has non-state parent '" +
                             nodes_[static_cast<std::size_t>(p)].name + "'");
          }
        }
        if (!action_slots.insert(node.index).second) {
          throw GraphError("action slot " + std::to_string(node.index) + " declared twice");
        }
        break;
      case NodeKind::next_state:
        if (pa.empty()) throw GraphError("next-state node '" + node.name + "' has no parent");
        if (!next_slots.insert(node.index).second) {
          throw GraphError("next-state slot " + std::to_string(node.index) + " declared twice");
        }
        break;
    }
  }
  auto contiguous = [](const std::set<int>& slots) {
    int expect = 0;
    for (int s : slots)
      if (s != expect++) return false;
    return true;
  };
  if (state_slots != next_slots) {
    throw GraphError("S^t has " + std::to_string(state_slots.size()) + " slots but S^{t+1} has " +
                     std::to_string(next_slots.size()) + " (or they differ)");
  }
  if (!contiguous(next_slots)) throw GraphError("state slots must be 0..n-1");
  if (action_slots.empty() || !contiguous(action_slots)) {
    throw GraphError("action slots must be 0..k-1 with k >= 1");
  }
  state_dim_ = static_cast<int>(next_slots.size());
  action_dim_ = static_cast<int>(action_slots.size());
}

int CausalDag::find(const std::string& name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].name == name) return static_cast<int>(i);
  return -1;
}

CausalDag CausalDag::from_json(const nlohmann::json& doc) {
  try {
    std::vector<DagNode> nodes;
    std::map<NodeKind, int> next_index;
    for (const auto& item : doc.at("nodes")) {
      DagNode node;
      node.name = item.at("name").get<std::string>();
      node.kind = parse_kind(item.at("kind").get<std::string>());
      node.index = item.contains("index") ? item.at("index").get<int>() : next_index[node.kind];
      next_index[node.kind] = node.index + 1;
      nodes.push_back(std::move(node));
    }
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& e : doc.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw ParseError("edge must be a [src, dst] pair");
      edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    }
    return CausalDag(std::move(nodes), edges);
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("causal graph document: ") + ex.what());
  }
}

CausalDag CausalDag::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open causal graph " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError("causal graph " + path.string() + ": " + ex.what());
  }
  return from_json(doc);
}

nlohmann::json CausalDag::to_json() const {
  nlohmann::json doc;
  doc["nodes"] = nlohmann::json::array();
  for (const DagNode& n : nodes_) {
    doc["nodes"].push_back({{"name", n.name}, {"kind", to_string(n.kind)}, {"index", n.index}});
  }
  doc["edges"] = nlohmann::json::array();
  for (const auto& [s, d] : edges_) {
    doc["edges"].push_back({nodes_[static_cast<std::size_t>(s)].name,
                            nodes_[static_cast<std::size_t>(d)].name});
  }
  return doc;
}

}  // namespace cinnrl::causal
