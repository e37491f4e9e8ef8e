#include "vesselreg/decomposition.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

namespace vesselreg {

std::vector<int> bfs_distances(const SkeletonGraph& graph, int source) {
  std::vector<int> dist(graph.size(), -1);
  std::deque<int> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v : graph.neighbors[u]) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

int geodesic_distance(const SkeletonGraph& graph, int u, int v) {
  const int n = graph.size();
  if (u < 0 || u >= n || v < 0 || v >= n) {
    throw Error(errc::empty_input, "node index out of range");
  }
  if (u == v) return 0;
  const auto dist = bfs_distances(graph, u);
  if (dist[v] < 0) throw Error(errc::unreachable, "no path between nodes");
  return dist[v];
}

namespace {

// Canonical shortest path from `from` down a BFS distance field toward its
// source: at every hop take the smallest-index neighbour one step closer.
std::vector<int> descend_path(const SkeletonGraph& graph, const std::vector<int>& dist, int from) {
  std::vector<int> path{from};
  int cur = from;
  while (dist[cur] > 0) {
    int next = -1;
    for (int v : graph.neighbors[cur]) {
      if (dist[v] == dist[cur] - 1) {
        next = v;
        break;  // neighbours are sorted, first hit is the smallest index
      }
    }
    path.push_back(next);
    cur = next;
  }
  return path;
}

std::vector<int> restricted_bfs(const SkeletonGraph& graph, int source,
                                const std::vector<char>& blocked) {
  std::vector<int> dist(graph.size(), -1);
  if (blocked[source]) return dist;
  std::deque<int> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (int v : graph.neighbors[u]) {
      if (dist[v] < 0 && !blocked[v]) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

}  // namespace

NodeDecomposition classify_nodes(const SkeletonGraph& graph, const DecompositionConfig& config) {
  const int n = graph.size();
  const int tau = config.preserve_count;
  if (tau < 1) throw Error(errc::invalid_params, "preserve count must be >= 1");
  if (n < 2) throw Error(errc::empty_input, "graph needs at least 2 nodes");

  NodeDecomposition out;
  for (int i = 0; i < n; ++i) {
    if (graph.degrees[i] == 1) out.end_nodes.push_back(i);
    if (graph.degrees[i] >= 3) out.quasi_junction_nodes.push_back(i);
  }
  if (static_cast<int>(out.end_nodes.size()) < tau) {
    throw Error(errc::too_few_end_nodes,
                std::to_string(out.end_nodes.size()) + " end-nodes but preserve count is " +
                    std::to_string(tau));
  }
  if (out.quasi_junction_nodes.empty()) {
    throw Error(errc::too_few_junctions, "graph has no node of degree >= 3 (pure path)");
  }

  // One junction per connected component of the quasi-junction subgraph: the
  // node of largest degree, smallest index on ties.
  std::vector<char> is_qc(n, 0);
  for (int i : out.quasi_junction_nodes) is_qc[i] = 1;
  std::vector<char> junction(n, 0);
  {
    std::vector<char> seen(n, 0);
    for (int i : out.quasi_junction_nodes) {
      if (seen[i]) continue;
      std::deque<int> queue{i};
      seen[i] = 1;
      int best = i;
      while (!queue.empty()) {
        const int u = queue.front();
        queue.pop_front();
        if (graph.degrees[u] > graph.degrees[best] ||
            (graph.degrees[u] == graph.degrees[best] && u < best)) {
          best = u;
        }
        for (int v : graph.neighbors[u]) {
          if (is_qc[v] && !seen[v]) {
            seen[v] = 1;
            queue.push_back(v);
          }
        }
      }
      junction[best] = 1;
    }
  }

  // Branch phase. End nodes discover their nearest junction in rings of
  // growing geodesic distance; while more end nodes remain marked than the
  // preserve count, found branches are deleted (shorter than the length
  // threshold) or omitted and the junction loses the consumed edge. The last
  // `tau` found branches -- the longest ones -- are preserved.
  std::vector<std::vector<int>> end_dist;
  end_dist.reserve(out.end_nodes.size());
  for (int e : out.end_nodes) end_dist.push_back(bfs_distances(graph, e));

  std::vector<char> marked(out.end_nodes.size(), 1);
  int marked_count = static_cast<int>(out.end_nodes.size());
  std::vector<char> deleted(n, 0);
  std::map<int, std::set<int>> consumed;  // junction -> branch attachment neighbours
  std::vector<std::vector<int>> preserved;

  for (int s = 0; s <= n && marked_count > 0; ++s) {
    for (size_t ei = 0; ei < out.end_nodes.size(); ++ei) {
      if (!marked[ei]) continue;
      for (int j = 0; j < n; ++j) {
        if (end_dist[ei][j] != s || !junction[j]) continue;
        const int remaining = marked_count;
        marked[ei] = 0;
        --marked_count;
        std::vector<int> branch = descend_path(graph, end_dist[ei], j);  // junction -> end
        if (remaining > tau) {
          if (static_cast<int>(branch.size()) < config.delete_length) {
            for (size_t k = 1; k < branch.size(); ++k) deleted[branch[k]] = 1;
          }
          if (branch.size() >= 2) consumed[j].insert(branch[1]);
          const int effective_degree = graph.degrees[j] - static_cast<int>(consumed[j].size());
          if (effective_degree < 3) junction[j] = 0;
        } else {
          preserved.push_back(std::move(branch));
        }
        break;
      }
    }
  }
  if (marked_count > 0) {
    throw Error(errc::too_few_junctions,
                "some end-nodes cannot reach a junction (all junctions demoted)");
  }

  // Longest first; ties broken by the end-node index.
  std::stable_sort(preserved.begin(), preserved.end(),
                   [](const std::vector<int>& a, const std::vector<int>& b) {
                     if (a.size() != b.size()) return a.size() > b.size();
                     return a.back() < b.back();
                   });
  out.branches = std::move(preserved);
  for (int i = 0; i < n; ++i) {
    if (junction[i]) out.junction_nodes.push_back(i);
    if (deleted[i]) out.deleted_nodes.push_back(i);
  }

  // Trunk phase: one trunk per pair of neighbouring junctions, i.e. pairs
  // joined by a shortest path containing no third junction. The stored path
  // runs from the smaller to the larger junction index.
  const auto& junctions = out.junction_nodes;
  std::vector<std::vector<int>> full_dist(junctions.size());
  for (size_t a = 0; a < junctions.size(); ++a) full_dist[a] = bfs_distances(graph, junctions[a]);
  struct TrunkRec {
    std::vector<int> path;
    int length;
  };
  std::vector<TrunkRec> trunks;
  for (size_t a = 0; a < junctions.size(); ++a) {
    for (size_t b = a + 1; b < junctions.size(); ++b) {
      const int g = full_dist[a][junctions[b]];
      if (g < 0) continue;
      std::vector<char> blocked(n, 0);
      for (size_t c = 0; c < junctions.size(); ++c) {
        if (c != a && c != b) blocked[junctions[c]] = 1;
      }
      const auto rdist = restricted_bfs(graph, junctions[a], blocked);
      if (rdist[junctions[b]] != g) continue;  // not neighbouring
      auto path = descend_path(graph, rdist, junctions[b]);
      std::reverse(path.begin(), path.end());  // junction a -> junction b
      trunks.push_back({std::move(path), g});
    }
  }
  std::stable_sort(trunks.begin(), trunks.end(), [](const TrunkRec& x, const TrunkRec& y) {
    if (x.length != y.length) return x.length > y.length;
    return x.path.front() < y.path.front();
  });
  for (auto& t : trunks) out.trunks.push_back(std::move(t.path));
  return out;
}

}  // namespace vesselreg
