#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "bnrl/data.hpp"
#include "bnrl/pointwise.hpp"

namespace bnrl {

/// Pairwise classification over all cross-file record pairs.
struct ConfusionCounts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const { return tp + fp + fn + tn; }
};

/// Throws Error when either side references a record outside the dataset or
/// is not a valid matching.
ConfusionCounts confusion(const RecordPairs& predicted, const RecordPairs& truth, const Dataset& data);

/// 0/0 gives an empty optional rather than 0.
struct LinkageMetrics {
  std::optional<double> recall;
  std::optional<double> precision;
  std::optional<double> f1;
};

LinkageMetrics precision_recall_f1(const ConfusionCounts& counts);

/// Fraction of `subset` pairs that appear in `predicted`; empty subset gives
/// an empty optional.
std::optional<double> recall_on(const RecordPairs& predicted, const RecordPairs& subset);

enum class UnitSubset { All, Network, Profile };

std::string to_string(UnitSubset subset);
UnitSubset unit_subset_from_string(const std::string& text);

struct CriterionReport {
  int K = 0;
  double lppd = 0.0;
  double mean_deviance = 0.0;  // D-bar
  double p_dic = 0.0;
  double dic = 0.0;
  double p_waic = 0.0;
  double waic = 0.0;
  int units = 0;
};

/// DIC and WAIC from streaming pointwise log-likelihood summaries.
/// WAIC = -2 (lppd - sum_u var_s ll_u). DIC = D-bar + p_D with the plug-in
/// deviance taken at the posterior mean of each unit's likelihood, so
/// p_D = D-bar + 2 lppd. Throws Error with fewer than two samples.
CriterionReport information_criteria(const PointwiseStats& stats, UnitSubset subset = UnitSubset::All, int K = 0);

double waic(const PointwiseStats& stats, UnitSubset subset = UnitSubset::All);
double dic(const PointwiseStats& stats, UnitSubset subset = UnitSubset::All);

}  // namespace bnrl
