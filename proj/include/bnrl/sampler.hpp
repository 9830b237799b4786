#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bnrl/data.hpp"
#include "bnrl/model.hpp"
#include "bnrl/pointwise.hpp"
#include "bnrl/random.hpp"

namespace bnrl {

/// Switches for the individual Gibbs/MH blocks. Freezing a block keeps its
/// parameters at their current value (used by the exactness tests).
struct SamplerBlocks {
  bool linkage = true;
  bool distortions = true;
  bool latent_profiles = true;
  bool positions = true;
  bool psi = true;
  bool theta = true;
  bool beta = true;
  bool sigma2 = true;
};

/// Proposal for the latent individual created when a record is detached.
/// Prior: truth and position drawn from their priors. Informed: truth drawn
/// from the record's own single-record posterior, position drawn around the
/// cluster it leaves. Both keep the posterior invariant.
enum class FreshLatents { Prior, Informed };

std::string to_string(FreshLatents mode);
FreshLatents fresh_latents_from_string(const std::string& text);

struct SamplerConfig {
  int iterations = 2000;
  int burn_in = 1000;
  int thin = 1;
  int R = 1;  // linkage sweeps per iteration
  double step_u = 1.0;
  double step_beta = 0.5;
  int adapt_window = 50;
  double target_accept_scalar = 0.44;
  double target_accept_vector = 0.234;
  bool adapt = true;
  std::uint64_t seed = 1;
  LikelihoodSwitches likelihood;
  SamplerBlocks blocks;
  /// Use only the network factor in the linkage acceptance ratio, dropping
  /// the profile factor. Kept for comparison; it does not target the posterior.
  bool network_only_linkage_ratio = false;
  FreshLatents fresh_latents = FreshLatents::Informed;
  double fresh_position_scale = 1.0;  // sd of the informed position proposal
  /// Share of the burn-in during which linkage moves ignore the network
  /// factor when both profiles and networks are used. Links then form from
  /// profiles first and align the per-file latent configurations. Only the
  /// burn-in is affected.
  double linkage_warmup = 0.5;
  /// Keep every pointwise log-likelihood row (memory S x units).
  bool store_pointwise = false;

  /// Throws Error on an infeasible configuration.
  void validate() const;
};

struct MoveStats {
  long proposed = 0;
  long accepted = 0;

  double rate() const { return proposed > 0 ? static_cast<double>(accepted) / proposed : 0.0; }
  void record(bool accept) {
    ++proposed;
    accepted += accept ? 1 : 0;
  }
};

struct StepSizes {
  double u = 1.0;
  std::vector<double> beta;  // per file
};

/// Multiplicative step update: step * exp(rate - target).
double adapt_step(double step, double rate, double target);

/// Applies adapt_step to every block using the window acceptance rates.
StepSizes adapt_step_sizes(const StepSizes& steps, const MoveStats& u_window,
                           std::span<const MoveStats> beta_window, const SamplerConfig& config, int K);

/// Per-record flag: 1 when the record belongs to a clamped anchor pair.
std::vector<std::uint8_t> anchored_records(const Dataset& data, const RecordPairs& anchors);

// --- Individual updates (one block each) -------------------------------------

struct LinkageMoveOptions {
  int R = 1;
  bool network_only_ratio = false;
  FreshLatents fresh = FreshLatents::Informed;
  double position_scale = 1.0;
};

/// Constrained single-record linkage moves, R sweeps over non-anchored
/// records. The acceptance ratio multiplies the network and w-marginalized
/// profile likelihood ratios of the moved record by the proposal-size ratio.
void update_linkage(ModelState& state, const ModelContext& ctx, std::span<const std::uint8_t> anchored,
                    const LinkageMoveOptions& options, Rng& rng, MoveStats* stats = nullptr);

/// Marginal probability of one observed cell under a fresh latent individual:
/// sum over truths of prior(truth) * P(cell | truth) with w marginalized.
double fresh_cell_marginal(const ModelState& state, const ModelContext& ctx, int field, int observed);

/// P(w = 1 | rest) for one cell. 1 when the cell differs from its truth.
double distortion_probability(const ModelState& state, const ModelContext& ctx, int record, int field);
void update_distortions(ModelState& state, const ModelContext& ctx, Rng& rng);

/// Full conditional pmf of one latent truth.
std::vector<double> latent_profile_conditional(const ModelState& state, const ModelContext& ctx, int cluster,
                                               int field);
void update_latent_profiles(ModelState& state, const ModelContext& ctx, Rng& rng);

void update_positions(ModelState& state, const ModelContext& ctx, double step, Rng& rng,
                      MoveStats* stats = nullptr);

struct BetaParams {
  double a = 1.0;
  double b = 1.0;
};
BetaParams psi_conditional(const ModelState& state, const ModelContext& ctx, int field);
void update_psi(ModelState& state, const ModelContext& ctx, Rng& rng);

std::vector<double> theta_conditional(const ModelState& state, const ModelContext& ctx, int field);
void update_theta(ModelState& state, const ModelContext& ctx, Rng& rng);

void update_beta(ModelState& state, const ModelContext& ctx, std::span<const double> steps, Rng& rng,
                 std::span<MoveStats> stats = {});

InverseGammaParams sigma2_conditional(const ModelState& state, const ModelContext& ctx);
void update_sigma2(ModelState& state, const ModelContext& ctx, Rng& rng);

/// Pointwise log-likelihood contributions of the current state: every dyad
/// (file-major, i < i') when the network is used, then every observed profile
/// cell (record-major) with w marginalized, when profiles are used.
void pointwise_loglik(const ModelContext& ctx, const ModelState& state, std::vector<double>& out);
int network_unit_count(const ModelContext& ctx);
int profile_unit_count(const ModelContext& ctx);

// --- Chain ------------------------------------------------------------------

/// Runs the blocks in order (linkage, distortions, latent profiles,
/// positions, psi, theta, beta, sigma^2) and owns step-size adaptation.
class Sampler {
 public:
  Sampler(const ModelContext& ctx, SamplerConfig config, const RecordPairs& anchors = {});

  /// Starting state: singletons with anchors pre-paired, truths copied from
  /// records where possible, w = 0 where consistent, globals at prior means.
  ModelState initial_state(Rng& rng) const;

  /// One full iteration. `iteration` is 1-based; adaptation happens at the
  /// end of each window while iteration <= burn_in.
  void iterate(ModelState& state, Rng& rng, int iteration = 0);

  const StepSizes& steps() const { return steps_; }
  const std::vector<std::uint8_t>& anchored() const { return anchored_; }
  std::map<std::string, double> acceptance_rates() const;

 private:
  const ModelContext* ctx_;
  std::optional<ModelContext> warmup_ctx_;  // network switched off
  int warmup_iterations_ = 0;
  SamplerConfig config_;
  RecordPairs anchors_;
  std::vector<std::uint8_t> anchored_;
  StepSizes steps_;
  MoveStats linkage_total_, u_total_;
  std::vector<MoveStats> beta_total_;
  MoveStats u_window_;
  std::vector<MoveStats> beta_window_;
};

struct ScalarTraces {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;  // one per stored sample
};

struct PosteriorSampleSet {
  std::vector<std::vector<int>> linkage;  // 0-based labels per stored sample
  ScalarTraces traces;
  PointwiseStats pointwise;
  std::vector<std::vector<double>> pointwise_rows;  // only with store_pointwise
  std::map<std::string, double> acceptance;

  std::size_t size() const { return linkage.size(); }
};

struct TraceSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double ess = 0.0;
};

struct ChainDiagnostics {
  std::map<std::string, double> acceptance;
  std::vector<TraceSummary> traces;
  StepSizes final_steps;
};

/// Initial-positive-sequence effective sample size.
double effective_sample_size(std::span<const double> x);

struct ChainResult {
  PosteriorSampleSet samples;
  ChainDiagnostics diagnostics;
  ModelState final_state;
};

ChainResult run_chain(const Dataset& data, const HyperParams& hyper, const SamplerConfig& config,
                      const RecordPairs& anchors = {});

}  // namespace bnrl
