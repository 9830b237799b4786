#pragma once

#include <map>
#include <string>
#include <vector>

#include "bnrl/data.hpp"

namespace bnrl {

struct MatchProbability {
  RecordRef a;  // a.file < b.file
  RecordRef b;
  double prob = 0.0;
};

/// Posterior co-assignment frequency of cross-file record pairs. Pairs never
/// co-assigned are omitted. Entries are sorted by (a, b).
struct MatchProbabilityTable {
  int samples = 0;
  std::vector<MatchProbability> entries;

  /// 0 when the pair is absent. Order of the two refs does not matter.
  double prob(RecordRef x, RecordRef y) const;
};

/// `samples` holds 0-based cluster labels in global record order.
MatchProbabilityTable match_probabilities(const Dataset& data, const std::vector<std::vector<int>>& samples);

void write_match_probabilities(const std::string& path, const MatchProbabilityTable& table);
MatchProbabilityTable read_match_probabilities(const std::string& path);

struct PopulationSizePosterior {
  double mean = 0.0;
  double sd = 0.0;  // sample sd, 0 for a single sample
  std::map<int, int> histogram;
};

PopulationSizePosterior population_size_posterior(const std::vector<std::vector<int>>& samples);

enum class PointEstimator { Binder, Mpmms };

std::string to_string(PointEstimator kind);
PointEstimator point_estimator_from_string(const std::string& text);

struct PosteriorLinkage {
  RecordPairs pairs;  // sorted
  PointEstimator estimator = PointEstimator::Binder;
  double parameter = 1.0;    // loss ratio for Binder
  bool approximate = false;  // greedy fallback was used
};

struct BinderOptions {
  double loss_ratio = 1.0;  // cost of a false link / cost of a missed link
  /// Above this many vertices the matching is solved greedily.
  int exact_vertex_limit = 5000;
};

/// Minimizes posterior expected Binder loss over valid matchings: maximum
/// weight matching with weights p - tau over pairs with p > tau, where
/// tau = loss_ratio / (1 + loss_ratio).
PosteriorLinkage binder_point_estimate(const MatchProbabilityTable& table, const BinderOptions& options = {});

/// Expected Binder loss (up to the constant sum of missed-link costs) of a
/// candidate matching; lower is better. Used by the tests and reports.
double binder_expected_loss(const MatchProbabilityTable& table, const RecordPairs& matching, double loss_ratio);

/// Most probable maximal matching sets. Each record's modal set is its most
/// frequent partner (or none) across samples; every tied maximum counts as
/// modal. A pair is kept when it is modal for both records. If ties let a
/// record appear in two kept pairs, the pair with the higher joint frequency
/// wins, then the pair with the lower record indices.
PosteriorLinkage mpmms_point_estimate(const Dataset& data, const std::vector<std::vector<int>>& samples);

}  // namespace bnrl
