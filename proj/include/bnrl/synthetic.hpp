#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bnrl/data.hpp"

namespace bnrl {

struct SyntheticField {
  std::string name;
  FieldKind kind = FieldKind::Categorical;
  int n_levels = 4;  // categories, or size of the generated string support
};

struct SyntheticSpec {
  std::vector<int> file_sizes{25, 25};
  int n_pairs = 10;  // true cross-file pairs; N = sum(file_sizes) - n_pairs
  std::vector<SyntheticField> fields{{"f1", FieldKind::Categorical, 4}};
  int K = 2;
  std::vector<double> beta{0.0};  // one value per file, or one shared value
  double sigma2 = 1.0;
  std::vector<double> psi{0.01};  // one per field, or one shared value
  double lambda = 1.0;
  /// Give every latent individual its own level in every field (needs
  /// n_levels >= N). Otherwise truths are drawn uniformly.
  bool distinct_truths = false;
  bool networks = true;
  std::uint64_t seed = 1;

  int total_records() const;
  int population_size() const { return total_records() - n_pairs; }
  /// Throws Error on an infeasible spec.
  void validate() const;
};

/// Number of true pairs for a match fraction, defined as the share of
/// records that belong to a pair: round(fraction * sum(I) / 2).
int pairs_for_match_fraction(const std::vector<int>& file_sizes, double fraction);

struct SyntheticData {
  Dataset data;
  RecordPairs truth;
  std::vector<int> labels;  // 0-based latent individual per global record
  std::vector<std::vector<std::string>> latent_profiles;  // N x L
  std::vector<std::vector<double>> positions;             // N x K
};

/// Forward simulation of the model: truths, positions, a uniformly drawn
/// linkage with exactly n_pairs cross-file pairs, distortion flags, observed
/// profiles and networks. Field levels are rebuilt from the observed values.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

/// Flat `key = value` text; see docs/config.md for keys.
SyntheticSpec parse_synthetic_spec(const std::string& text);

/// Writes profiles_<j>.csv, network_<j>.txt, truth.csv and dataset.conf
/// (a run-config fragment pointing at them) into `dir`.
void write_synthetic(const std::string& dir, const SyntheticData& synth);

}  // namespace bnrl
