#pragma once

// Small digraph helpers shared by the analysis modules. Vertices are dense
// indices; arcs are (src, dst) pairs identified by their position in the
// arc list so callers can map results back to channels.

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace snnc::detail {

struct Arc {
  int src = 0;
  int dst = 0;
};

/// Outgoing arc ids per vertex, in arc-id order.
inline std::vector<std::vector<int>> out_arcs(int n, const std::vector<Arc>& arcs) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(n));
  for (int a = 0; a < static_cast<int>(arcs.size()); ++a) out[arcs[a].src].push_back(a);
  return out;
}

/// Arc ids of some directed cycle, or nullopt when the graph is acyclic.
/// Deterministic: iterative DFS from vertex 0 upward, arcs in id order; the
/// first back arc found closes the cycle.
inline std::optional<std::vector<int>> find_cycle(int n, const std::vector<Arc>& arcs) {
  const auto out = out_arcs(n, arcs);
  enum : char { White, Grey, Black };
  std::vector<char> color(static_cast<std::size_t>(n), White);
  std::vector<int> via(static_cast<std::size_t>(n), -1);  // arc used to enter vertex
  for (int root = 0; root < n; ++root) {
    if (color[root] != White) continue;
    std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
    color[root] = Grey;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      if (next == out[v].size()) {
        color[v] = Black;
        stack.pop_back();
        continue;
      }
      const int a = out[v][next++];
      const int w = arcs[a].dst;
      if (color[w] == White) {
        color[w] = Grey;
        via[w] = a;
        stack.push_back({w, 0});
      } else if (color[w] == Grey) {
        std::vector<int> cycle{a};
        for (int u = v; u != w; u = arcs[via[u]].src) cycle.push_back(via[u]);
        std::reverse(cycle.begin(), cycle.end());  // walk starts at w
        return cycle;
      }
    }
  }
  return std::nullopt;
}

/// Strongly connected component id per vertex (iterative Tarjan). Component
/// ids are assigned in reverse topological order of the condensation.
inline std::vector<int> scc_ids(int n, const std::vector<Arc>& arcs) {
  const auto out = out_arcs(n, arcs);
  std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0),
      comp(static_cast<std::size_t>(n), -1);
  std::vector<char> on_stack(static_cast<std::size_t>(n), 0);
  std::vector<int> stack;
  int counter = 0, comps = 0;
  for (int root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    std::vector<std::pair<int, std::size_t>> call{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& [v, next] = call.back();
      if (next < out[v].size()) {
        const int w = arcs[out[v][next++]].dst;
        if (index[w] < 0) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = comps;
        } while (w != v);
        ++comps;
      }
      const int done = v;
      call.pop_back();
      if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[done]);
    }
  }
  return comp;
}

/// Shortest-number-of-digits rendering that round-trips.
inline std::string format_number(double v) { return nlohmann::json(v).dump(); }

}  // namespace snnc::detail
