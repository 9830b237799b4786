#include "bnrl/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "bnrl/csv.hpp"
#include "bnrl/matching.hpp"

namespace bnrl {
namespace {

std::uint64_t pair_key(int x, int y) {
  if (x > y) std::swap(x, y);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) | static_cast<std::uint32_t>(y);
}

// Partner of every record in one sample, -1 for singletons.
std::vector<int> partners_of(const std::vector<int>& labels) {
  std::vector<int> first(labels.size(), -1);
  std::vector<int> partner(labels.size(), -1);
  for (int r = 0; r < static_cast<int>(labels.size()); ++r) {
    const int c = labels[r];
    if (c < 0) throw Error("negative cluster label");
    if (static_cast<std::size_t>(c) >= first.size()) throw Error("cluster label out of range");
    if (first[c] < 0) {
      first[c] = r;
    } else {
      if (partner[first[c]] >= 0) throw Error("cluster with more than two records");
      partner[first[c]] = r;
      partner[r] = first[c];
    }
  }
  return partner;
}

void sort_pairs(RecordPairs& pairs) {
  for (auto& [a, b] : pairs.pairs)
    if (b < a) std::swap(a, b);
  std::sort(pairs.pairs.begin(), pairs.pairs.end());
}

}  // namespace

double MatchProbabilityTable::prob(RecordRef x, RecordRef y) const {
  if (y < x) std::swap(x, y);
  const auto it = std::lower_bound(entries.begin(), entries.end(), std::pair{x, y},
                                   [](const MatchProbability& e, const std::pair<RecordRef, RecordRef>& key) {
                                     return std::pair{e.a, e.b} < key;
                                   });
  if (it != entries.end() && it->a == x && it->b == y) return it->prob;
  return 0.0;
}

MatchProbabilityTable match_probabilities(const Dataset& data, const std::vector<std::vector<int>>& samples) {
  if (samples.empty()) throw Error("match_probabilities: no samples");
  const int n = data.total_records();
  std::unordered_map<std::uint64_t, int> counts;
  for (const auto& labels : samples) {
    if (static_cast<int>(labels.size()) != n) throw Error("linkage sample length does not match the dataset");
    const auto partner = partners_of(labels);
    for (int r = 0; r < n; ++r) {
      if (partner[r] > r) {
        if (data.file_of(r) == data.file_of(partner[r])) throw Error("linkage sample pairs two records of one file");
        ++counts[pair_key(r, partner[r])];
      }
    }
  }
  MatchProbabilityTable table;
  table.samples = static_cast<int>(samples.size());
  table.entries.reserve(counts.size());
  for (const auto& [key, count] : counts) {
    const int x = static_cast<int>(key >> 32);
    const int y = static_cast<int>(key & 0xffffffffu);
    MatchProbability e{data.ref_of(x), data.ref_of(y), static_cast<double>(count) / table.samples};
    if (e.b < e.a) std::swap(e.a, e.b);
    table.entries.push_back(e);
  }
  std::sort(table.entries.begin(), table.entries.end(),
            [](const MatchProbability& l, const MatchProbability& r) { return std::pair{l.a, l.b} < std::pair{r.a, r.b}; });
  return table;
}

void write_match_probabilities(const std::string& path, const MatchProbabilityTable& table) {
  std::ostringstream out;
  out.precision(17);
  out << "file_a,index_a,file_b,index_b,prob\n";
  for (const auto& e : table.entries) {
    out << e.a.file + 1 << ',' << e.a.index + 1 << ',' << e.b.file + 1 << ',' << e.b.index + 1 << ',' << e.prob
        << '\n';
  }
  csv::write_file_atomic(path, out.str());
}

MatchProbabilityTable read_match_probabilities(const std::string& path) {
  MatchProbabilityTable table;
  const auto rows = csv::lines(csv::read_file(path));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string line = csv::trim(rows[r]);
    if (line.empty()) continue;
    const auto cells = csv::split_line(line);
    if (r == 0 && csv::trim(cells[0]) == "file_a") continue;
    const std::string ctx = path + " line " + std::to_string(r + 1);
    if (cells.size() != 5) throw LoadError(ctx + ": expected 5 columns");
    MatchProbability e;
    e.a = {static_cast<int>(csv::parse_integer(cells[0], ctx)) - 1, static_cast<int>(csv::parse_integer(cells[1], ctx)) - 1};
    e.b = {static_cast<int>(csv::parse_integer(cells[2], ctx)) - 1, static_cast<int>(csv::parse_integer(cells[3], ctx)) - 1};
    e.prob = csv::parse_double(cells[4], ctx);
    if (e.prob < 0.0 || e.prob > 1.0) throw LoadError(ctx + ": probability outside [0, 1]");
    if (e.b < e.a) std::swap(e.a, e.b);
    table.entries.push_back(e);
  }
  std::sort(table.entries.begin(), table.entries.end(),
            [](const MatchProbability& l, const MatchProbability& r) { return std::pair{l.a, l.b} < std::pair{r.a, r.b}; });
  return table;
}

PopulationSizePosterior population_size_posterior(const std::vector<std::vector<int>>& samples) {
  if (samples.empty()) throw Error("population_size_posterior: no samples");
  PopulationSizePosterior out;
  double mean = 0.0, m2 = 0.0;
  int s = 0;
  for (const auto& labels : samples) {
    std::vector<int> sorted(labels);
    std::sort(sorted.begin(), sorted.end());
    const int n = static_cast<int>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
    ++out.histogram[n];
    ++s;
    const double d = n - mean;
    mean += d / s;
    m2 += d * (n - mean);
  }
  out.mean = mean;
  out.sd = s > 1 ? std::sqrt(m2 / (s - 1)) : 0.0;
  return out;
}

std::string to_string(PointEstimator kind) { return kind == PointEstimator::Binder ? "binder" : "mpmms"; }

PointEstimator point_estimator_from_string(const std::string& text) {
  if (text == "binder") return PointEstimator::Binder;
  if (text == "mpmms") return PointEstimator::Mpmms;
  throw Error("unknown estimator '" + text + "' (expected binder or mpmms)");
}

PosteriorLinkage binder_point_estimate(const MatchProbabilityTable& table, const BinderOptions& options) {
  if (!(options.loss_ratio > 0.0) || !std::isfinite(options.loss_ratio)) throw Error("loss_ratio must be positive");
  const double tau = options.loss_ratio / (1.0 + options.loss_ratio);
  PosteriorLinkage out;
  out.estimator = PointEstimator::Binder;
  out.parameter = options.loss_ratio;

  // Compact vertex ids for records that carry at least one candidate edge.
  std::vector<RecordRef> refs;
  std::vector<const MatchProbability*> candidates;
  for (const auto& e : table.entries) {
    if (e.prob > tau) {
      candidates.push_back(&e);
      refs.push_back(e.a);
      refs.push_back(e.b);
    }
  }
  std::sort(refs.begin(), refs.end());
  refs.erase(std::unique(refs.begin(), refs.end()), refs.end());
  const auto vertex = [&](RecordRef r) {
    return static_cast<int>(std::lower_bound(refs.begin(), refs.end(), r) - refs.begin());
  };
  const int n = static_cast<int>(refs.size());

  if (n <= options.exact_vertex_limit) {
    constexpr double kScale = 1099511627776.0;  // 2^40
    std::vector<WeightedEdge> edges;
    std::vector<const MatchProbability*> kept;
    for (const auto* e : candidates) {
      const auto w = static_cast<std::int64_t>(std::llround((e->prob - tau) * kScale));
      if (w <= 0) continue;
      edges.push_back({vertex(e->a), vertex(e->b), w});
      kept.push_back(e);
    }
    const auto mate = max_weight_matching(n, edges);
    for (int v = 0; v < n; ++v)
      if (mate[v] > v) out.pairs.pairs.emplace_back(refs[v], refs[mate[v]]);
  } else {
    out.approximate = true;
    std::sort(candidates.begin(), candidates.end(), [](const MatchProbability* l, const MatchProbability* r) {
      if (l->prob != r->prob) return l->prob > r->prob;
      return std::pair{l->a, l->b} < std::pair{r->a, r->b};
    });
    std::vector<char> used(n, 0);
    for (const auto* e : candidates) {
      const int x = vertex(e->a), y = vertex(e->b);
      if (used[x] || used[y]) continue;
      used[x] = used[y] = 1;
      out.pairs.pairs.emplace_back(e->a, e->b);
    }
  }
  sort_pairs(out.pairs);
  return out;
}

double binder_expected_loss(const MatchProbabilityTable& table, const RecordPairs& matching, double loss_ratio) {
  // Costs normalized so a missed link costs 1 and a false link costs loss_ratio.
  double loss = 0.0;
  for (const auto& e : table.entries) loss += e.prob;
  for (const auto& [a, b] : matching.pairs) {
    const double p = table.prob(a, b);
    loss += loss_ratio * (1.0 - p) - p;
  }
  return loss;
}

PosteriorLinkage mpmms_point_estimate(const Dataset& data, const std::vector<std::vector<int>>& samples) {
  if (samples.empty()) throw Error("mpmms_point_estimate: no samples");
  const int n = data.total_records();
  // Per record: partner -> count, partner -1 meaning singleton.
  std::vector<std::map<int, int>> counts(n);
  for (const auto& labels : samples) {
    if (static_cast<int>(labels.size()) != n) throw Error("linkage sample length does not match the dataset");
    const auto partner = partners_of(labels);
    for (int r = 0; r < n; ++r) ++counts[r][partner[r]];
  }
  std::vector<int> best(n, 0);
  for (int r = 0; r < n; ++r)
    for (const auto& [p, c] : counts[r]) best[r] = std::max(best[r], c);
  const auto modal = [&](int r, int p) {
    const auto it = counts[r].find(p);
    return it != counts[r].end() && it->second == best[r];
  };

  struct Candidate {
    int x, y, freq;
  };
  std::vector<Candidate> kept;
  for (int r = 0; r < n; ++r) {
    for (const auto& [p, c] : counts[r]) {
      if (p > r && c == best[r] && modal(p, r)) kept.push_back({r, p, c});
    }
  }
  std::sort(kept.begin(), kept.end(), [](const Candidate& l, const Candidate& r) {
    if (l.freq != r.freq) return l.freq > r.freq;
    return std::pair{l.x, l.y} < std::pair{r.x, r.y};
  });
  PosteriorLinkage out;
  out.estimator = PointEstimator::Mpmms;
  out.parameter = 0.0;
  std::vector<char> used(n, 0);
  for (const auto& c : kept) {
    if (used[c.x] || used[c.y]) continue;
    used[c.x] = used[c.y] = 1;
    out.pairs.pairs.emplace_back(data.ref_of(c.x), data.ref_of(c.y));
  }
  sort_pairs(out.pairs);
  return out;
}

}  // namespace bnrl
