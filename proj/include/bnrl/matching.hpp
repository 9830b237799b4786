#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace bnrl {

struct WeightedEdge {
  int u = 0;
  int v = 0;
  std::int64_t weight = 0;
};

/// Maximum-weight (not maximum-cardinality) matching in a general graph,
/// Edmonds' blossom algorithm with dual variables, O(V^3). Integer weights
/// keep every dual update exact. Returns mate[v], or -1 when unmatched.
std::vector<int> max_weight_matching(int n_vertices, std::span<const WeightedEdge> edges);

}  // namespace bnrl
