#pragma once

#include <vector>

#include "vesselreg/skeleton.hpp"

namespace vesselreg {

struct DecompositionConfig {
  int preserve_count = 5;     // branches kept for matching
  double delete_length = 10;  // branches shorter than this many nodes are deleted
};

// Output of skeleton node classification: preserved branches (ordered
// junction -> end), trunks (ordered between two junction nodes), and the
// end / junction / quasi-junction / deleted index sets.
struct NodeDecomposition {
  std::vector<std::vector<int>> branches;
  std::vector<std::vector<int>> trunks;
  std::vector<int> end_nodes;
  std::vector<int> junction_nodes;
  std::vector<int> quasi_junction_nodes;
  std::vector<int> deleted_nodes;
};

// Minimum hop count between two nodes.
int geodesic_distance(const SkeletonGraph& graph, int u, int v);

// BFS distances from `source` to every node (-1 when unreachable).
std::vector<int> bfs_distances(const SkeletonGraph& graph, int source);

NodeDecomposition classify_nodes(const SkeletonGraph& graph, const DecompositionConfig& config);

}  // namespace vesselreg
