#pragma once

#include <limits>
#include <vector>

#include "bnrl/data.hpp"

namespace bnrl {

/// Partial injective projection of nodes of graph A onto nodes of graph B.
class Projection {
 public:
  Projection(int n_a, int n_b) : to_b_(n_a, -1), to_a_(n_b, -1) {}

  int image(int a) const { return to_b_[a]; }
  int preimage(int b) const { return to_a_[b]; }
  bool mapped_a(int a) const { return to_b_[a] >= 0; }
  bool mapped_b(int b) const { return to_a_[b] >= 0; }
  /// Throws Error if either node is already mapped.
  void add(int a, int b);
  int size() const { return size_; }

 private:
  std::vector<int> to_b_;
  std::vector<int> to_a_;
  int size_ = 0;
};

inline constexpr double kOmegaCollision = std::numeric_limits<double>::infinity();

/// Neighbour weight 1/log(d), with 1/log(d + 1) for d <= 1 where log(d) is 0.
double neighbour_weight(int degree);

/// Network distance of projecting a (in A) onto b (in B) under the current
/// mapping: 1 - 2 w(L_a ∩ L_b) / (w(L_a) + w(L_b)). L_a holds the mapped
/// neighbours of a, L_b the neighbours of b that are images; an element of
/// the intersection is weighted by the mean of its weights in A and B.
/// Infinite when a or b is already taken by another pair; 1 when both
/// neighbourhoods are empty.
double omega(const Adjacency& graph_a, const Adjacency& graph_b, const Projection& mapping, int a, int b);

struct GreedyOptions {
  double cutoff = 0.95;
};

/// Greedy anchor propagation. Starting from the anchors, repeatedly commits
/// the candidate (a, b) with the lowest omega, ties broken by (a, b), among
/// unmapped pairs whose nodes neighbour a mapped pair, while the score is at
/// most the cutoff. Returns file-0/file-1 pairs including the anchors.
RecordPairs greedy_match(const Adjacency& graph_a, const Adjacency& graph_b, const RecordPairs& anchors,
                         const GreedyOptions& options = {});

}  // namespace bnrl
