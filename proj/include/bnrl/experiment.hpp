#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bnrl/data.hpp"
#include "bnrl/estimator.hpp"
#include "bnrl/evaluation.hpp"
#include "bnrl/sampler.hpp"

namespace bnrl {

/// PM: profiles only. PNM: profiles and networks. NetworkOnly: networks only.
enum class ModelMode { PM, PNM, NetworkOnly };

std::string to_string(ModelMode mode);
ModelMode model_mode_from_string(const std::string& text);
LikelihoodSwitches switches_for(ModelMode mode);

struct RunConfig {
  std::vector<std::string> profiles;  // absolute or relative to the config file
  std::vector<std::string> networks;
  std::string truth;
  std::vector<std::string> string_fields;

  std::vector<ModelMode> modes{ModelMode::PNM};
  std::vector<int> K{2};
  std::vector<double> anchor_fractions{0.0};
  std::uint64_t anchor_seed = 1;

  SamplerConfig sampler;
  std::string hyper_text;  // `hyper.` keys with the prefix removed

  PointEstimator estimator = PointEstimator::Binder;
  double loss_ratio = 1.0;
  UnitSubset criteria_units = UnitSubset::All;
  bool baseline = false;
  double baseline_cutoff = 0.95;

  std::string output = "bnrl_run";
  int threads = 1;
  bool write_samples = true;

  /// Parses flat `key = value` text. Relative paths are resolved against
  /// `base_dir`. A `dataset = <file>` key merges that file's keys first, with
  /// its paths resolved against its own directory.
  static RunConfig parse(const std::string& text, const std::string& base_dir = ".");
  static RunConfig load(const std::string& path);

  /// Canonical text with absolute paths; parsing it gives the same config.
  std::string to_text() const;
};

struct ValidationReport {
  std::vector<std::string> issues;
  std::vector<std::pair<std::string, std::string>> digests;  // path, digest
  std::size_t memory_bytes = 0;  // rough peak per cell
  int cells = 0;

  bool ok() const { return issues.empty(); }
  std::string to_text() const;
};

/// Checks files, dataset consistency, ranges and sampler settings without
/// sampling.
ValidationReport validate(const RunConfig& config);

/// Loads the dataset named by the config; throws Error on failure.
Dataset load_config_dataset(const RunConfig& config);

/// Anchors for a fraction of the true pairs: a prefix of one seeded
/// permutation, so smaller fractions are subsets of larger ones.
RecordPairs draw_anchors(const RecordPairs& truth, double fraction, std::uint64_t seed);

struct CellResult {
  std::string name;
  ModelMode mode = ModelMode::PNM;
  int K = 0;
  double anchor_fraction = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  int anchors = 0;
  LinkageMetrics metrics;
  std::optional<double> anchored_recall;          // point estimate
  std::optional<double> anchored_recall_samples;  // minimum over stored samples
  PopulationSizePosterior population;
  std::optional<CriterionReport> criteria;
  int predicted_pairs = 0;
  bool approximate = false;
  std::map<std::string, double> acceptance;
};

struct BaselineResult {
  double anchor_fraction = 0.0;
  int anchors = 0;
  LinkageMetrics metrics;
  int predicted_pairs = 0;
  bool ok = false;
  std::string error;
};

struct RunSummary {
  std::string directory;
  std::vector<CellResult> cells;
  std::vector<BaselineResult> baseline;
};

/// Runs every (mode, K, anchor fraction) cell, writing per-cell outputs,
/// metrics.csv, criteria.csv, baseline.csv (when enabled), run.conf and
/// manifest.json under config.output. A failing cell is recorded and the
/// rest proceed.
RunSummary run(const RunConfig& config);

}  // namespace bnrl
