#include "cinnrl/causal/layering.hpp"

#include "cinnrl/error.hpp"
#include "cinnrl/numkit/random.hpp"

#include <algorithm>
#include <random>

namespace cinnrl::causal {

std::size_t Layering::node_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.size();
  return n;
}

std::vector<std::size_t> Layering::widths() const {
  std::vector<std::size_t> out;
  for (const auto& l : layers) out.push_back(l.size());
  return out;
}

Layering topo_layering(const CausalDag& dag) {
  const auto& nodes = dag.nodes();
  const std::size_t n = nodes.size();
  auto layered = [&](int v) { return nodes[static_cast<std::size_t>(v)].kind != NodeKind::state; };

  // Kahn's algorithm restricted to layered nodes, taking the longest path.
  std::vector<int> indegree(n, 0);
  std::vector<std::vector<int>> children(n);
  for (const auto& [s, d] : dag.edges()) {
    if (layered(s) && layered(d)) {
      ++indegree[static_cast<std::size_t>(d)];
      children[static_cast<std::size_t>(s)].push_back(d);
    }
  }
  std::vector<int> depth(n, -1);
  std::vector<int> ready;
  for (std::size_t v = 0; v < n; ++v) {
    if (!layered(static_cast<int>(v))) continue;
    depth[v] = nodes[v].kind == NodeKind::action ? 0 : 1;
    if (indegree[v] == 0) ready.push_back(static_cast<int>(v));
  }
  std::size_t visited = 0;
  while (!ready.empty()) {
    const int u = ready.back();
    ready.pop_back();
    ++visited;
    for (int c : children[static_cast<std::size_t>(u)]) {
      auto& dc = depth[static_cast<std::size_t>(c)];
      dc = std::max(dc, depth[static_cast<std::size_t>(u)] + 1);
      if (--indegree[static_cast<std::size_t>(c)] == 0) ready.push_back(c);
    }
  }
  const auto layered_count = static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const DagNode& d) { return d.kind != NodeKind::state; }));
  if (visited != layered_count) throw GraphError("topo_layering: graph has a cycle");

  const int max_depth = *std::max_element(depth.begin(), depth.end());
  Layering out;
  out.layers.resize(static_cast<std::size_t>(max_depth + 1));
  for (std::size_t v = 0; v < n; ++v) {
    if (depth[v] >= 0) out.layers[static_cast<std::size_t>(depth[v])].push_back(nodes[v].name);
  }
  // A next-state node forced to depth >= 1 can leave an empty layer behind.
  std::erase_if(out.layers, [](const auto& l) { return l.empty(); });
  return out;
}

std::vector<int> layer_of(const Layering& layering, const CausalDag& dag) {
  std::vector<int> out(dag.nodes().size(), -1);
  for (std::size_t l = 0; l < layering.layers.size(); ++l) {
    for (const std::string& name : layering.layers[l]) {
      const int v = dag.find(name);
      if (v < 0) throw GraphError("layering names unknown node '" + name + "'");
      out[static_cast<std::size_t>(v)] = static_cast<int>(l);
    }
  }
  return out;
}

Layering shuffle_order(const Layering& layering, std::uint64_t seed) {
  if (seed == 0 || layering.layers.size() < 2) return layering;
  std::vector<std::string> pool;
  for (std::size_t l = 1; l < layering.layers.size(); ++l)
    pool.insert(pool.end(), layering.layers[l].begin(), layering.layers[l].end());

  num::Rng rng(num::derive_seed(seed, "shuffle_order"));
  // Fisher-Yates with an explicit draw so the result is reproducible.
  for (std::size_t i = pool.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(pool[i - 1], pool[j]);
  }

  Layering out;
  out.layers.push_back(layering.layers.front());
  std::size_t offset = 0;
  for (std::size_t l = 1; l < layering.layers.size(); ++l) {
    const std::size_t w = layering.layers[l].size();
    out.layers.emplace_back(pool.begin() + static_cast<std::ptrdiff_t>(offset),
                            pool.begin() + static_cast<std::ptrdiff_t>(offset + w));
    offset += w;
  }
  return out;
}

std::string describe(const Layering& layering) {
  std::string out;
  for (std::size_t l = 0; l < layering.layers.size(); ++l) {
    if (l > 0) out += " | ";
    for (std::size_t i = 0; i < layering.layers[l].size(); ++i) {
      if (i > 0) out += ",";
      out += layering.layers[l][i];
    }
  }
  return out;
}

}  // namespace cinnrl::causal
