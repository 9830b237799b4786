#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bnrl/data.hpp"

namespace bnrl {

/// Finite stand-in for log(0). Kept well inside double range so sums of a few
/// of them stay finite and comparisons in accept/reject remain total.
inline constexpr double kLogZero = -1e300;

enum class LinkFunction { Logit };

/// Cluster assignment of every record. Clusters hold one record or two
/// records from different files; cluster ids are always 0..N-1 (written
/// 1-based in external formats).
class LinkageStructure {
 public:
  LinkageStructure() = default;

  static LinkageStructure singletons(int n_records);
  /// Throws Error unless labels form a valid singleton/cross-file-pair
  /// partition with consecutive ids 0..N-1.
  static LinkageStructure from_labels(std::span<const int> labels, const Dataset& data);

  int n_records() const { return static_cast<int>(labels_.size()); }
  int n_clusters() const { return static_cast<int>(members_.size()); }
  int label(int record) const { return labels_[record]; }
  const std::vector<int>& labels() const { return labels_; }
  int cluster_size(int cluster) const { return members_[cluster][1] < 0 ? 1 : 2; }
  /// Member records of a cluster (one or two entries).
  std::span<const int> members(int cluster) const {
    return {members_[cluster].data(), static_cast<std::size_t>(cluster_size(cluster))};
  }
  /// The other record in this record's cluster, or -1.
  int partner(int record) const;
  bool is_singleton(int record) const { return partner(record) < 0; }

  /// Structural check: sizes, cross-file pairs, consistent inverse index.
  bool is_valid(const Dataset& data) const;

  // Low-level edits. They never leave empty clusters behind: a cluster that
  // loses its only record is swap-removed, so the former last cluster takes
  // its id. The return value reports that relabeling so parallel per-cluster
  // arrays can follow.
  struct Relabel {
    int removed = -1;     // id that was vacated, or -1
    int moved_from = -1;  // old id of the cluster now living at `removed`, or -1
  };
  /// Moves record into a new singleton cluster with id n_clusters()-1 after the call.
  Relabel detach(int record);
  /// Moves record into `cluster`, which must currently be a singleton.
  /// `cluster` is given before the move; the returned Relabel applies after.
  Relabel join(int record, int cluster);

  friend bool operator==(const LinkageStructure&, const LinkageStructure&) = default;

 private:
  void remove_from(int record, int cluster);
  Relabel drop_if_empty(int cluster);

  std::vector<int> labels_;
  std::vector<std::array<int, 2>> members_;
};

/// Latent individuals: true profile levels (N x L) and positions (N x K).
class LatentPopulation {
 public:
  LatentPopulation() = default;
  LatentPopulation(int n_fields, int dim) : n_fields_(n_fields), dim_(dim) {}

  int size() const { return n_rows_; }
  int n_fields() const { return n_fields_; }
  int dim() const { return dim_; }

  int profile(int n, int field) const { return profiles_[static_cast<std::size_t>(n) * n_fields_ + field]; }
  int& profile(int n, int field) { return profiles_[static_cast<std::size_t>(n) * n_fields_ + field]; }
  std::span<const int> profile_row(int n) const {
    return {profiles_.data() + static_cast<std::size_t>(n) * n_fields_, static_cast<std::size_t>(n_fields_)};
  }
  std::span<const double> position(int n) const {
    return {positions_.data() + static_cast<std::size_t>(n) * dim_, static_cast<std::size_t>(dim_)};
  }
  std::span<double> position(int n) {
    return {positions_.data() + static_cast<std::size_t>(n) * dim_, static_cast<std::size_t>(dim_)};
  }

  void append(std::span<const int> profile, std::span<const double> position);
  /// Moves the last row into slot n and shrinks by one.
  void swap_remove(int n);

  friend bool operator==(const LatentPopulation&, const LatentPopulation&) = default;

 private:
  int n_fields_ = 0;
  int dim_ = 0;
  int n_rows_ = 0;
  std::vector<int> profiles_;
  std::vector<double> positions_;
};

struct GlobalParams {
  std::vector<double> beta;                // per file
  double sigma2 = 1.0;
  std::vector<std::vector<double>> theta;  // per field, length M_l
  std::vector<double> psi;                 // per field

  friend bool operator==(const GlobalParams&, const GlobalParams&) = default;
};

enum class AlphaMode { Ones, Empirical };

struct HyperParams {
  std::vector<double> omega;                // per file, sd of beta prior
  double a_sigma = 1.0;
  double b_sigma = 1.0;
  double cv_sigma = 0.5;
  std::vector<AlphaMode> alpha_mode;        // per field
  std::vector<std::vector<double>> alpha;   // per field, length M_l
  std::vector<double> a_psi;                // per field
  std::vector<double> b_psi;                // per field
  double lambda = 1.0;
  int K = 2;
  LinkFunction link = LinkFunction::Logit;

  /// Throws Error when a value is non-positive or a length disagrees with data.
  void validate(const Dataset& data) const;
};

/// One full MCMC state. Distortion flags are stored record-major
/// (global record x field); flag 0 forces the record's cell to equal the
/// latent truth of its cluster.
struct ModelState {
  LinkageStructure linkage;
  LatentPopulation latent;
  std::vector<std::uint8_t> w;
  GlobalParams globals;

  std::uint8_t flag(int record, int field) const {
    return w[static_cast<std::size_t>(record) * latent.n_fields() + field];
  }
  std::uint8_t& flag(int record, int field) {
    return w[static_cast<std::size_t>(record) * latent.n_fields() + field];
  }

  /// Applies a LinkageStructure edit result to the latent rows.
  void follow(const LinkageStructure::Relabel& relabel);

  friend bool operator==(const ModelState&, const ModelState&) = default;
};

/// True when every w=0 cell equals its cluster's latent truth. Missing cells
/// are ignored.
bool flags_consistent(const Dataset& data, const ModelState& state);

/// Throws Error naming the first violated invariant.
void check_state(const Dataset& data, const ModelState& state);

// --- Network model ----------------------------------------------------------

double distance(std::span<const double> a, std::span<const double> b);

/// Logit-link latent distance edge probability.
double edge_probability(double beta, std::span<const double> u_a, std::span<const double> u_b);

/// log P(y | beta, distance) without forming the probability, stable for
/// large |beta - distance|.
double dyad_loglik(bool edge, double beta, double dist);

double network_loglik(const Dataset& data, const ModelState& state);

// --- Profile model ----------------------------------------------------------

/// Distortion pmf over the field's levels for a string-valued truth:
/// zeta_s proportional to gamma(s) * exp(-lambda * d(s, truth)).
/// If h_out is given it receives 1 / sum_s gamma(s) exp(-lambda d(s, truth)),
/// so zeta_s = gamma(s) * h * exp(-lambda * d(s, truth)).
std::vector<double> string_distortion_pmf(const FieldSpec& field, int truth, double lambda,
                                          double* h_out = nullptr);

/// log[(1 - psi) 1{p = truth} + psi * zeta_p]; kLogZero when the mixture is 0.
double profile_cell_loglik_marginal(int observed, int truth, double psi, double zeta_observed);

/// Precomputed per-field distortion tables for string fields.
class DistortionTables {
 public:
  DistortionTables() = default;
  DistortionTables(const std::vector<FieldSpec>& fields, double lambda);

  bool has_table(int field) const { return !tables_[field].pmf.empty(); }
  /// zeta[truth][observed] for a string field.
  double zeta(int field, int truth, int observed) const {
    const auto& t = tables_[field];
    return t.pmf[static_cast<std::size_t>(truth) * t.m + observed];
  }
  double log_h(int field, int truth) const { return tables_[field].log_h[truth]; }

 private:
  struct Table {
    int m = 0;
    std::vector<double> pmf;
    std::vector<double> log_h;
  };
  std::vector<Table> tables_;
};

/// Which likelihood factors participate. Turning both off leaves the prior.
struct LikelihoodSwitches {
  bool network = true;
  bool profiles = true;
};

/// Read-only bundle shared by every update of one chain.
class ModelContext {
 public:
  ModelContext(const Dataset& data, const HyperParams& hyper, LikelihoodSwitches switches = {});

  const Dataset& data() const { return *data_; }
  const HyperParams& hyper() const { return *hyper_; }
  LikelihoodSwitches switches() const { return switches_; }
  bool use_network() const { return switches_.network && data_->has_networks(); }
  bool use_profiles() const { return switches_.profiles; }
  const DistortionTables& tables() const { return tables_; }
  bool is_string(int field) const { return data_->fields[field].kind == FieldKind::StringValued; }

  /// Distortion probability of observing `observed` when the truth is `truth`.
  double zeta(const GlobalParams& g, int field, int truth, int observed) const {
    return is_string(field) ? tables_.zeta(field, truth, observed) : g.theta[field][observed];
  }

  /// w-marginalized log-likelihood of all profile cells of one record when
  /// its cluster's truth row is `truth`.
  double record_profile_loglik(const GlobalParams& g, int record, std::span<const int> truth) const;

  /// Sum over the record's same-file dyads when the record sits at `position`.
  double record_network_loglik(const ModelState& state, int record, std::span<const double> position) const;

 private:
  const Dataset* data_;
  const HyperParams* hyper_;
  LikelihoodSwitches switches_;
  DistortionTables tables_;
};

/// Additive pieces of the joint log density.
struct LogJointTerms {
  double network = 0.0;
  double profile = 0.0;        // given w: point mass or zeta
  double w_prior = 0.0;
  double pi_prior = 0.0;
  double theta_prior = 0.0;
  double psi_prior = 0.0;
  double beta_prior = 0.0;
  double sigma2_prior = 0.0;
  double u_prior = 0.0;

  double total() const;
};

LogJointTerms log_joint_terms(const ModelContext& ctx, const ModelState& state);
double log_joint(const Dataset& data, const ModelState& state, const HyperParams& hyper);

// --- Hyperparameters --------------------------------------------------------

/// Prior mean of sigma^2 that gives every node room in K dimensions.
double sigma2_prior_mean(int total_records, int K);

struct InverseGammaParams {
  double shape = 0.0;
  double scale = 0.0;
};

/// Inverse-gamma with mean sigma2_prior_mean(I, K) and coefficient of
/// variation cv. Requires sqrt(I) > 2.
InverseGammaParams elicit_sigma_prior(int total_records, int K, double cv = 0.5);

HyperParams default_hyperparams(const Dataset& data, int K);

/// Flat `key = value` text. Keys: omega, a_sigma, b_sigma, cv_sigma, lambda,
/// K, a_psi, b_psi, alpha_mode.<field> (ones|empirical). Unset keys keep the
/// defaults for the dataset; a_sigma/b_sigma are re-elicited from K and
/// cv_sigma unless both are given.
HyperParams parse_hyperparams(const std::string& text, const Dataset& data);
std::string format_hyperparams(const HyperParams& hyper, const Dataset& data);

}  // namespace bnrl
