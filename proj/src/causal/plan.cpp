#include "cinnrl/causal/plan.hpp"

#include "cinnrl/error.hpp"

#include <algorithm>
#include <set>

namespace cinnrl::causal {

int BlockPlan::symmetric_count() const {
  return static_cast<int>(std::count_if(blocks.begin(), blocks.end(), [](const BlockSpec& b) {
    return std::holds_alternative<SymmetricSpec>(b);
  }));
}

int BlockPlan::asymmetric_count() const {
  return static_cast<int>(blocks.size()) - symmetric_count();
}

BlockPlan plan_structure(const Layering& layering, const CausalDag& dag) {
  const auto& layers = layering.layers;
  if (layers.size() < 2) throw GraphError("plan_structure: need an action layer and a next-state layer");

  const auto kind_of = [&](const std::string& name) {
    const int v = dag.find(name);
    if (v < 0) throw GraphError("plan_structure: unknown node '" + name + "'");
    return dag.nodes()[static_cast<std::size_t>(v)];
  };
  if (static_cast<int>(layers.front().size()) != dag.action_dim()) {
    throw GraphError("plan_structure: first layer must hold all " +
                     std::to_string(dag.action_dim()) + " actions");
  }
  for (const auto& name : layers.front()) {
    if (kind_of(name).kind != NodeKind::action) {
      throw GraphError("plan_structure: '" + name + "' in the action layer is not an action");
    }
  }
  std::set<int> seen;
  for (std::size_t l = 1; l < layers.size(); ++l) {
    for (const auto& name : layers[l]) {
      const DagNode node = kind_of(name);
      if (node.kind != NodeKind::next_state) {
        throw GraphError("plan_structure: '" + name + "' outside the action layer is not a next state");
      }
      if (!seen.insert(node.index).second) {
        throw GraphError("plan_structure: next state '" + name + "' appears twice");
      }
    }
  }
  if (static_cast<int>(seen.size()) != dag.state_dim()) {
    throw GraphError("plan_structure: layering covers " + std::to_string(seen.size()) + " of " +
                     std::to_string(dag.state_dim()) + " next states");
  }

  BlockPlan plan;
  plan.state_dim = dag.state_dim();
  plan.action_dim = dag.action_dim();
  std::set<int> injected;
  int predecessor = 0;
  const std::size_t last = layers.size() - 1;
  for (std::size_t i = 0; i < last; ++i) {
    predecessor += static_cast<int>(layers[i].size());
    const int successor = static_cast<int>(layers[i + 1].size());
    if (predecessor != successor || i + 1 == last) break;
    SymmetricSpec spec;
    spec.d1 = predecessor;
    spec.d2 = successor;
    spec.io_dim = predecessor + successor;
    for (const auto& name : layers[i + 1]) {
      const int slot = kind_of(name).index;
      spec.state_slots.push_back(slot);
      injected.insert(slot);
    }
    plan.blocks.emplace_back(std::move(spec));
  }

  AsymmetricSpec tail;
  for (int s = 0; s < plan.state_dim; ++s)
    if (!injected.contains(s)) tail.known_slots.push_back(s);
  const int hidden = plan.blocks.empty() ? plan.action_dim
                                         : std::get<SymmetricSpec>(plan.blocks.back()).io_dim;
  tail.in_dim = hidden + static_cast<int>(tail.known_slots.size());
  tail.out_dim = plan.state_dim;
  plan.blocks.emplace_back(std::move(tail));
  validate(plan);
  return plan;
}

void validate(const BlockPlan& plan) {
  if (plan.blocks.empty()) throw GraphError("plan has no blocks");
  int hidden = plan.action_dim;
  std::set<int> injected;
  for (std::size_t i = 0; i < plan.blocks.size(); ++i) {
    const std::string where = "block " + std::to_string(i) + ": ";
    if (const auto* sym = std::get_if<SymmetricSpec>(&plan.blocks[i])) {
      if (i + 1 == plan.blocks.size()) throw GraphError(where + "plan must end in an asymmetric block");
      if (sym->d1 != hidden || sym->d2 != static_cast<int>(sym->state_slots.size()) ||
          sym->io_dim != sym->d1 + sym->d2 || sym->d2 <= 0) {
        throw GraphError(where + "symmetric widths do not chain");
      }
      for (int s : sym->state_slots) {
        if (s < 0 || s >= plan.state_dim || !injected.insert(s).second) {
          throw GraphError(where + "state slot " + std::to_string(s) + " invalid or reused");
        }
      }
      hidden = sym->io_dim;
    } else {
      const auto& asym = std::get<AsymmetricSpec>(plan.blocks[i]);
      if (i + 1 != plan.blocks.size()) throw GraphError(where + "asymmetric block must be last");
      for (int s : asym.known_slots) {
        if (s < 0 || s >= plan.state_dim || !injected.insert(s).second) {
          throw GraphError(where + "known slot " + std::to_string(s) + " invalid or reused");
        }
      }
      if (static_cast<int>(injected.size()) != plan.state_dim) {
        throw GraphError(where + "not every state slot reaches the network");
      }
      if (asym.in_dim != hidden + static_cast<int>(asym.known_slots.size()) ||
          asym.out_dim != plan.state_dim) {
        throw GraphError(where + "asymmetric widths do not chain");
      }
      if (hidden > asym.out_dim) {
        throw GraphError(where + "hidden width " + std::to_string(hidden) +
                         " exceeds output width; inverse would be underdetermined");
      }
    }
  }
}

std::string describe(const BlockPlan& plan) {
  std::string out;
  for (const BlockSpec& b : plan.blocks) {
    if (!out.empty()) out += ", ";
    if (const auto* s = std::get_if<SymmetricSpec>(&b)) {
      out += "Symmetric(" + std::to_string(s->io_dim) + ", (" + std::to_string(s->d1) + "," +
             std::to_string(s->d2) + "))";
    } else {
      const auto& a = std::get<AsymmetricSpec>(b);
      out += "Asymmetric(" + std::to_string(a.in_dim) + "->" + std::to_string(a.out_dim) +
             ", known=" + std::to_string(a.known_slots.size()) + ")";
    }
  }
  return "[" + out + "]";
}

nlohmann::json to_json(const BlockPlan& plan) {
  nlohmann::json doc;
  doc["state_dim"] = plan.state_dim;
  doc["action_dim"] = plan.action_dim;
  doc["blocks"] = nlohmann::json::array();
  for (const BlockSpec& b : plan.blocks) {
    if (const auto* s = std::get_if<SymmetricSpec>(&b)) {
      doc["blocks"].push_back({{"type", "symmetric"},
                               {"io_dim", s->io_dim},
                               {"d1", s->d1},
                               {"d2", s->d2},
                               {"state_slots", s->state_slots}});
    } else {
      const auto& a = std::get<AsymmetricSpec>(b);
      doc["blocks"].push_back({{"type", "asymmetric"},
                               {"in_dim", a.in_dim},
                               {"out_dim", a.out_dim},
                               {"known_slots", a.known_slots}});
    }
  }
  return doc;
}

BlockPlan plan_from_json(const nlohmann::json& doc) {
  BlockPlan plan;
  plan.state_dim = doc.at("state_dim").get<int>();
  plan.action_dim = doc.at("action_dim").get<int>();
  for (const auto& b : doc.at("blocks")) {
    const auto type = b.at("type").get<std::string>();
    if (type == "symmetric") {
      SymmetricSpec s;
      s.io_dim = b.at("io_dim").get<int>();
      s.d1 = b.at("d1").get<int>();
      s.d2 = b.at("d2").get<int>();
      s.state_slots = b.at("state_slots").get<std::vector<int>>();
      plan.blocks.emplace_back(std::move(s));
    } else if (type == "asymmetric") {
      AsymmetricSpec a;
      a.in_dim = b.at("in_dim").get<int>();
      a.out_dim = b.at("out_dim").get<int>();
      a.known_slots = b.at("known_slots").get<std::vector<int>>();
      plan.blocks.emplace_back(std::move(a));
    } else {
      throw ParseError("unknown block type '" + type + "'");
    }
  }
  validate(plan);
  return plan;
}

}  // namespace cinnrl::causal
