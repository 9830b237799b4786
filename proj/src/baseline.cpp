#include "bnrl/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

namespace bnrl {

void Projection::add(int a, int b) {
  if (to_b_[a] >= 0 || to_a_[b] >= 0) throw Error("projection is not injective");
  to_b_[a] = b;
  to_a_[b] = a;
  ++size_;
}

double neighbour_weight(int degree) {
  if (degree <= 1) return 1.0 / std::log(static_cast<double>(degree) + 1.0);
  return 1.0 / std::log(static_cast<double>(degree));
}

double omega(const Adjacency& graph_a, const Adjacency& graph_b, const Projection& mapping, int a, int b) {
  if ((mapping.mapped_a(a) && mapping.image(a) != b) || (mapping.mapped_b(b) && mapping.preimage(b) != a))
    return kOmegaCollision;
  double w_a = 0.0, w_b = 0.0, w_both = 0.0;
  for (int x : graph_a.neighbors(a)) {
    const int y = mapping.image(x);
    if (y < 0) continue;
    const double wx = neighbour_weight(graph_a.degree(x));
    w_a += wx;
    if (graph_b.has_edge(b, y)) w_both += 0.5 * (wx + neighbour_weight(graph_b.degree(y)));
  }
  for (int y : graph_b.neighbors(b)) {
    if (mapping.mapped_b(y)) w_b += neighbour_weight(graph_b.degree(y));
  }
  if (w_a + w_b <= 0.0) return 1.0;
  return std::clamp(1.0 - 2.0 * w_both / (w_a + w_b), 0.0, 1.0);
}

RecordPairs greedy_match(const Adjacency& graph_a, const Adjacency& graph_b, const RecordPairs& anchors,
                         const GreedyOptions& options) {
  validate_record_pairs(anchors, {graph_a.n_actors(), graph_b.n_actors()});
  Projection mapping(graph_a.n_actors(), graph_b.n_actors());
  for (auto [x, y] : anchors.pairs) {
    if (x.file != 0) std::swap(x, y);
    mapping.add(x.index, y.index);
  }

  // Live candidates with their scores, plus an ordered queue over them.
  std::map<std::pair<int, int>, double> score;
  std::set<std::tuple<double, int, int>> queue;
  std::vector<std::set<int>> by_a(graph_a.n_actors()), by_b(graph_b.n_actors());

  const auto erase = [&](int a, int b) {
    const auto it = score.find({a, b});
    if (it == score.end()) return;
    queue.erase({it->second, a, b});
    score.erase(it);
    by_a[a].erase(b);
    by_b[b].erase(a);
  };
  const auto refresh = [&](int a, int b) {
    erase(a, b);
    const double s = omega(graph_a, graph_b, mapping, a, b);
    score[{a, b}] = s;
    queue.emplace(s, a, b);
    by_a[a].insert(b);
    by_b[b].insert(a);
  };
  const auto seed_from = [&](int x, int y) {
    for (int a : graph_a.neighbors(x)) {
      if (mapping.mapped_a(a)) continue;
      for (int b : graph_b.neighbors(y))
        if (!mapping.mapped_b(b)) refresh(a, b);
    }
  };

  for (int x = 0; x < graph_a.n_actors(); ++x)
    if (mapping.mapped_a(x)) seed_from(x, mapping.image(x));

  while (!queue.empty()) {
    const auto [s, a, b] = *queue.begin();
    if (s > options.cutoff) break;
    mapping.add(a, b);
    // Candidates sharing a node with the new pair collide with it.
    for (int other : std::vector<int>(by_a[a].begin(), by_a[a].end())) erase(a, other);
    for (int other : std::vector<int>(by_b[b].begin(), by_b[b].end())) erase(other, b);
    // Scores change for candidates next to either endpoint.
    std::set<std::pair<int, int>> stale;
    for (int x : graph_a.neighbors(a))
      for (int y : by_a[x]) stale.emplace(x, y);
    for (int y : graph_b.neighbors(b))
      for (int x : by_b[y]) stale.emplace(x, y);
    for (const auto& [x, y] : stale) refresh(x, y);
    seed_from(a, b);
  }

  RecordPairs out;
  for (int a = 0; a < graph_a.n_actors(); ++a)
    if (mapping.mapped_a(a)) out.pairs.push_back({RecordRef{0, a}, RecordRef{1, mapping.image(a)}});
  return out;
}

}  // namespace bnrl
