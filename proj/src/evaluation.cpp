#include "bnrl/evaluation.hpp"

#include <algorithm>
#include <set>
#include <vector>

namespace bnrl {
namespace {

std::set<std::pair<RecordRef, RecordRef>> normalized(const RecordPairs& pairs) {
  std::set<std::pair<RecordRef, RecordRef>> out;
  for (auto [a, b] : pairs.pairs) {
    if (b < a) std::swap(a, b);
    out.emplace(a, b);
  }
  return out;
}

std::vector<int> file_sizes(const Dataset& data) {
  std::vector<int> sizes(data.n_files());
  for (int j = 0; j < data.n_files(); ++j) sizes[j] = data.file_size(j);
  return sizes;
}

}  // namespace

ConfusionCounts confusion(const RecordPairs& predicted, const RecordPairs& truth, const Dataset& data) {
  const auto sizes = file_sizes(data);
  validate_record_pairs(predicted, sizes);
  validate_record_pairs(truth, sizes);
  const auto p = normalized(predicted);
  const auto t = normalized(truth);
  ConfusionCounts c;
  for (const auto& pair : p) c.tp += t.count(pair);
  c.fp = static_cast<std::int64_t>(p.size()) - c.tp;
  c.fn = static_cast<std::int64_t>(t.size()) - c.tp;
  c.tn = data.cross_file_pairs() - c.tp - c.fp - c.fn;
  return c;
}

LinkageMetrics precision_recall_f1(const ConfusionCounts& c) {
  LinkageMetrics m;
  if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  // Harmonic mean of P and R, written to stay defined when P = R = 0.
  if (m.recall && m.precision)
    m.f1 = 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
  return m;
}

std::optional<double> recall_on(const RecordPairs& predicted, const RecordPairs& subset) {
  if (subset.empty()) return std::nullopt;
  const auto p = normalized(predicted);
  const auto s = normalized(subset);
  std::size_t hit = 0;
  for (const auto& pair : s) hit += p.count(pair);
  return static_cast<double>(hit) / static_cast<double>(s.size());
}

std::string to_string(UnitSubset subset) {
  switch (subset) {
    case UnitSubset::Network:
      return "network";
    case UnitSubset::Profile:
      return "profile";
    default:
      return "all";
  }
}

UnitSubset unit_subset_from_string(const std::string& text) {
  if (text == "all") return UnitSubset::All;
  if (text == "network") return UnitSubset::Network;
  if (text == "profile") return UnitSubset::Profile;
  throw Error("unknown unit subset '" + text + "' (expected all, network or profile)");
}

CriterionReport information_criteria(const PointwiseStats& stats, UnitSubset subset, int K) {
  if (stats.samples() < 2) throw Error("information criteria need at least two posterior samples");
  int begin = 0, end = stats.units();
  if (subset == UnitSubset::Network) end = stats.network_units();
  if (subset == UnitSubset::Profile) begin = stats.network_units();
  CriterionReport r;
  r.K = K;
  r.units = end - begin;
  double mean_ll = 0.0;
  for (int u = begin; u < end; ++u) {
    r.lppd += stats.log_mean_exp(u);
    r.p_waic += stats.variance(u);
    mean_ll += stats.mean(u);
  }
  r.waic = -2.0 * (r.lppd - r.p_waic);
  r.mean_deviance = -2.0 * mean_ll;
  r.p_dic = r.mean_deviance + 2.0 * r.lppd;
  r.dic = r.mean_deviance + r.p_dic;
  return r;
}

double waic(const PointwiseStats& stats, UnitSubset subset) { return information_criteria(stats, subset).waic; }
double dic(const PointwiseStats& stats, UnitSubset subset) { return information_criteria(stats, subset).dic; }

}  // namespace bnrl
