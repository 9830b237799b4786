#include "bnrl/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bnrl {

void SamplerConfig::validate() const {
  if (iterations < 1) throw Error("iterations must be positive");
  if (burn_in < 0 || burn_in >= iterations) throw Error("burn_in must lie in [0, iterations)");
  if (thin < 1) throw Error("thin must be at least 1");
  if (R < 1) throw Error("R must be at least 1");
  if (!(step_u > 0.0) || !(step_beta > 0.0)) throw Error("step sizes must be positive");
  if (adapt_window < 1) throw Error("adapt_window must be positive");
  if (!(fresh_position_scale > 0.0)) throw Error("fresh_position_scale must be positive");
  if (!(linkage_warmup >= 0.0 && linkage_warmup <= 1.0)) throw Error("linkage_warmup must lie in [0, 1]");
  for (double t : {target_accept_scalar, target_accept_vector}) {
    if (!(t > 0.0 && t < 1.0)) throw Error("target acceptance must lie in (0, 1)");
  }
}

double adapt_step(double step, double rate, double target) { return step * std::exp(rate - target); }

StepSizes adapt_step_sizes(const StepSizes& steps, const MoveStats& u_window,
                           std::span<const MoveStats> beta_window, const SamplerConfig& config, int K) {
  StepSizes out = steps;
  const double u_target = K > 1 ? config.target_accept_vector : config.target_accept_scalar;
  if (u_window.proposed > 0) out.u = adapt_step(steps.u, u_window.rate(), u_target);
  for (std::size_t j = 0; j < out.beta.size() && j < beta_window.size(); ++j) {
    if (beta_window[j].proposed > 0) {
      out.beta[j] = adapt_step(steps.beta[j], beta_window[j].rate(), config.target_accept_scalar);
    }
  }
  return out;
}

std::vector<std::uint8_t> anchored_records(const Dataset& data, const RecordPairs& anchors) {
  validate_record_pairs(anchors, [&] {
    std::vector<int> sizes(data.n_files());
    for (int j = 0; j < data.n_files(); ++j) sizes[j] = data.file_size(j);
    return sizes;
  }());
  std::vector<std::uint8_t> out(data.total_records(), 0);
  for (const auto& [a, b] : anchors.pairs) {
    out[data.global_index(a)] = 1;
    out[data.global_index(b)] = 1;
  }
  return out;
}

namespace {

std::span<const double> prior_pmf(const ModelState& state, const ModelContext& ctx, int field) {
  return ctx.is_string(field) ? std::span<const double>(ctx.data().fields[field].empirical_freq)
                              : std::span<const double>(state.globals.theta[field]);
}

void resample_record_flags(ModelState& state, const ModelContext& ctx, int record, Rng& rng) {
  for (int l = 0; l < ctx.data().n_fields(); ++l) {
    if (ctx.data().cell(record, l) == kMissing) {
      state.flag(record, l) = 0;
      continue;
    }
    state.flag(record, l) = rng.bernoulli(distortion_probability(state, ctx, record, l)) ? 1 : 0;
  }
}

/// Singleton records grouped by file, with O(1) insert/erase.
class SingletonIndex {
 public:
  SingletonIndex(const ModelState& state, const Dataset& data, std::span<const std::uint8_t> anchored)
      : lists_(data.n_files()), pos_(data.total_records(), -1) {
    for (int r = 0; r < data.total_records(); ++r) {
      if (!anchored[r] && state.linkage.is_singleton(r)) insert(r, data.file_of(r));
    }
  }

  int total() const { return total_; }
  int in_file(int file) const { return static_cast<int>(lists_[file].size()); }

  /// k-th singleton among files other than `excluded` (0 <= k < total - in_file(excluded)).
  int pick(int k, int excluded) const {
    for (int j = 0; j < static_cast<int>(lists_.size()); ++j) {
      if (j == excluded) continue;
      if (k < in_file(j)) return lists_[j][k];
      k -= in_file(j);
    }
    return -1;
  }

  void insert(int record, int file) {
    pos_[record] = static_cast<int>(lists_[file].size());
    lists_[file].push_back(record);
    ++total_;
  }

  void erase(int record, int file) {
    auto& list = lists_[file];
    const int at = pos_[record];
    list[at] = list.back();
    pos_[list[at]] = at;
    list.pop_back();
    pos_[record] = -1;
    --total_;
  }

 private:
  std::vector<std::vector<int>> lists_;
  std::vector<int> pos_;
  int total_ = 0;
};

}  // namespace

// --- Step 1: linkage ---------------------------------------------------------

std::string to_string(FreshLatents mode) { return mode == FreshLatents::Prior ? "prior" : "informed"; }

FreshLatents fresh_latents_from_string(const std::string& text) {
  if (text == "prior") return FreshLatents::Prior;
  if (text == "informed") return FreshLatents::Informed;
  throw Error("unknown fresh_latents '" + text + "' (expected prior or informed)");
}

double fresh_cell_marginal(const ModelState& state, const ModelContext& ctx, int field, int observed) {
  const auto prior = prior_pmf(state, ctx, field);
  // Categorical distortion ignores the truth, so the sum collapses to theta_p.
  if (!ctx.is_string(field)) return prior[observed];
  const double psi = state.globals.psi[field];
  double total = (1.0 - psi) * prior[observed];
  for (std::size_t s = 0; s < prior.size(); ++s) {
    total += psi * prior[s] * ctx.tables().zeta(field, static_cast<int>(s), observed);
  }
  return total;
}

void update_linkage(ModelState& state, const ModelContext& ctx, std::span<const std::uint8_t> anchored,
                    const LinkageMoveOptions& options, Rng& rng, MoveStats* stats) {
  const Dataset& data = ctx.data();
  const int L = data.n_fields();
  const int K = ctx.hyper().K;
  SingletonIndex singles(state, data, anchored);
  std::vector<int> fresh_profile(L);
  std::vector<double> fresh_position(K);

  const bool use_profile = ctx.use_profiles() && !options.network_only_ratio;
  const bool informed_truth = options.fresh == FreshLatents::Informed && use_profile;
  const bool informed_position = options.fresh == FreshLatents::Informed && ctx.use_network();
  const double sd_prior = std::sqrt(state.globals.sigma2);
  const double sd_local = options.position_scale;

  // log fresh_cell_marginal per (field, level), filled on demand. Globals do
  // not change during this step.
  std::vector<std::vector<double>> log_marginal(L);
  for (int l = 0; l < L; ++l) log_marginal[l].assign(data.fields[l].n_levels(), 1.0);
  const auto fresh_profile_term = [&](int record) {
    double total = 0.0;
    for (int l = 0; l < L; ++l) {
      const int p = data.cell(record, l);
      if (p == kMissing) continue;
      double& v = log_marginal[l][p];
      if (v > 0.0) v = std::log(fresh_cell_marginal(state, ctx, l, p));
      total += v;
    }
    return total;
  };
  const auto draw_informed_truth = [&](int record) {
    for (int l = 0; l < L; ++l) {
      const auto prior = prior_pmf(state, ctx, l);
      const int p = data.cell(record, l);
      if (p == kMissing) {
        fresh_profile[l] = rng.categorical(prior);
        continue;
      }
      const double psi = state.globals.psi[l];
      std::vector<double> w(prior.size());
      for (std::size_t s = 0; s < w.size(); ++s) {
        const double zeta = ctx.zeta(state.globals, l, static_cast<int>(s), p);
        w[s] = prior[s] * ((static_cast<int>(s) == p ? 1.0 - psi : 0.0) + psi * zeta);
      }
      fresh_profile[l] = rng.categorical(w);
    }
  };
  const auto log_normal = [](std::span<const double> x, std::span<const double> mean, double sd) {
    double total = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double z = (x[k] - (mean.empty() ? 0.0 : mean[k])) / sd;
      total += -0.5 * z * z - std::log(sd);
    }
    return total;
  };
  const auto profile_term = [&](int record, std::span<const int> truth) {
    return use_profile ? ctx.record_profile_loglik(state.globals, record, truth) : 0.0;
  };
  // Log target over proposal for a record sitting alone in a fresh
  // individual at `position`, proposed around `around`.
  const auto fresh_position_term = [&](int record, std::span<const double> position, std::span<const double> around) {
    double v = ctx.record_network_loglik(state, record, position);
    if (informed_position) v += log_normal(position, {}, sd_prior) - log_normal(position, around, sd_local);
    return v;
  };
  const auto record_loglik = [&](int record, std::span<const int> truth, std::span<const double> position) {
    const double profile = profile_term(record, truth);
    if (profile <= kLogZero) return kLogZero;
    return profile + ctx.record_network_loglik(state, record, position);
  };

  for (int r = 0; r < data.total_records(); ++r) {
    if (anchored[r]) continue;
    const int file = data.file_of(r);
    for (int rep = 0; rep < options.R; ++rep) {
      const int eligible = singles.total() - singles.in_file(file);
      const int n_options = 1 + eligible;
      const int choice = rng.uniform_int(n_options);
      const int current = state.linkage.label(r);
      const int partner = state.linkage.partner(r);

      if (choice == 0) {
        if (partner < 0) continue;  // already alone: the move is the identity
        const auto around = state.latent.position(current);
        double ll_new = 0.0;
        if (informed_position) {
          for (int k = 0; k < K; ++k) fresh_position[k] = rng.normal(around[k], sd_local);
        } else {
          for (int k = 0; k < K; ++k) fresh_position[k] = rng.normal(0.0, sd_prior);
        }
        if (informed_truth) {
          ll_new = fresh_profile_term(r);
        } else {
          for (int l = 0; l < L; ++l) fresh_profile[l] = rng.categorical(prior_pmf(state, ctx, l));
          ll_new = profile_term(r, fresh_profile);
        }
        if (ll_new > kLogZero) ll_new += fresh_position_term(r, fresh_position, around);
        const double ll_old = record_loglik(r, state.latent.profile_row(current), around);
        // After detaching, the old partner becomes an eligible singleton.
        const double log_ratio = ll_new - ll_old + std::log(n_options) - std::log(n_options + 1.0);
        const bool accept = ll_new > kLogZero && std::log(rng.uniform()) < log_ratio;
        if (stats) stats->record(accept);
        if (!accept) continue;
        // The informed truth does not enter the ratio, so it is drawn only now.
        if (informed_truth) draw_informed_truth(r);
        state.linkage.detach(r);
        state.latent.append(fresh_profile, fresh_position);
        singles.insert(r, file);
        singles.insert(partner, data.file_of(partner));
        resample_record_flags(state, ctx, r, rng);
        continue;
      }

      const int target = singles.pick(choice - 1, file);
      const int target_cluster = state.linkage.label(target);
      const auto target_position = state.latent.position(target_cluster);
      const double ll_new = record_loglik(r, state.latent.profile_row(target_cluster), target_position);
      double ll_old = 0.0;
      if (partner < 0) {
        // r's own individual disappears; score it as the reverse detach would.
        ll_old = informed_truth ? fresh_profile_term(r) : profile_term(r, state.latent.profile_row(current));
        ll_old += fresh_position_term(r, state.latent.position(current), target_position);
      } else {
        ll_old = record_loglik(r, state.latent.profile_row(current), state.latent.position(current));
      }
      // Joining from a singleton removes one option; switching partners frees
      // the old partner and uses the target, leaving the count unchanged.
      const double options_after = partner < 0 ? n_options - 1.0 : static_cast<double>(n_options);
      const double log_ratio = ll_new - ll_old + std::log(n_options) - std::log(options_after);
      const bool accept = ll_new > kLogZero && std::log(rng.uniform()) < log_ratio;
      if (stats) stats->record(accept);
      if (!accept) continue;
      if (partner < 0) {
        singles.erase(r, file);
      } else {
        singles.insert(partner, data.file_of(partner));
      }
      singles.erase(target, data.file_of(target));
      state.follow(state.linkage.join(r, target_cluster));
      resample_record_flags(state, ctx, r, rng);
    }
  }
}

// --- Step 2: distortion indicators --------------------------------------------

double distortion_probability(const ModelState& state, const ModelContext& ctx, int record, int field) {
  const double psi = state.globals.psi[field];
  if (!ctx.use_profiles()) return psi;
  const int p = ctx.data().cell(record, field);
  const int truth = state.latent.profile(state.linkage.label(record), field);
  if (p != truth) return 1.0;
  const double q = psi * ctx.zeta(state.globals, field, truth, p);
  return q / (q + 1.0 - psi);
}

void update_distortions(ModelState& state, const ModelContext& ctx, Rng& rng) {
  for (int r = 0; r < ctx.data().total_records(); ++r) resample_record_flags(state, ctx, r, rng);
}

// --- Step 3: latent truths ----------------------------------------------------

std::vector<double> latent_profile_conditional(const ModelState& state, const ModelContext& ctx, int cluster,
                                               int field) {
  const Dataset& data = ctx.data();
  const auto prior = prior_pmf(state, ctx, field);
  std::vector<double> pmf(prior.begin(), prior.end());
  if (!ctx.use_profiles()) return pmf;

  int pinned = kMissing;
  for (int r : state.linkage.members(cluster)) {
    const int p = data.cell(r, field);
    if (p == kMissing || state.flag(r, field) != 0) continue;
    if (pinned != kMissing && pinned != p) {
      throw Error("two undistorted records of one cluster disagree on field '" + data.fields[field].name + "'");
    }
    pinned = p;
  }
  if (pinned != kMissing) {
    std::fill(pmf.begin(), pmf.end(), 0.0);
    pmf[pinned] = 1.0;
    return pmf;
  }
  if (!ctx.is_string(field)) return pmf;  // distorted categorical cells do not depend on the truth

  std::vector<double> logw(pmf.size());
  for (std::size_t s = 0; s < pmf.size(); ++s) logw[s] = pmf[s] > 0.0 ? std::log(pmf[s]) : kLogZero;
  for (int r : state.linkage.members(cluster)) {
    const int p = data.cell(r, field);
    if (p == kMissing) continue;
    for (std::size_t s = 0; s < pmf.size(); ++s) {
      logw[s] += std::log(ctx.tables().zeta(field, static_cast<int>(s), p));
    }
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  double total = 0.0;
  for (std::size_t s = 0; s < pmf.size(); ++s) {
    pmf[s] = std::exp(logw[s] - top);
    total += pmf[s];
  }
  for (double& v : pmf) v /= total;
  return pmf;
}

void update_latent_profiles(ModelState& state, const ModelContext& ctx, Rng& rng) {
  for (int n = 0; n < state.latent.size(); ++n) {
    for (int l = 0; l < ctx.data().n_fields(); ++l) {
      state.latent.profile(n, l) = rng.categorical(latent_profile_conditional(state, ctx, n, l));
    }
  }
}

// --- Step 4: latent positions --------------------------------------------------

void update_positions(ModelState& state, const ModelContext& ctx, double step, Rng& rng, MoveStats* stats) {
  const int K = ctx.hyper().K;
  const double inv_two_s2 = 0.5 / state.globals.sigma2;
  std::vector<double> proposal(K);
  for (int n = 0; n < state.latent.size(); ++n) {
    auto current = state.latent.position(n);
    double sq_old = 0.0, sq_new = 0.0;
    for (int k = 0; k < K; ++k) {
      proposal[k] = current[k] + step * rng.normal();
      sq_old += current[k] * current[k];
      sq_new += proposal[k] * proposal[k];
    }
    double log_ratio = -(sq_new - sq_old) * inv_two_s2;
    if (ctx.use_network()) {
      for (int r : state.linkage.members(n)) {
        log_ratio += ctx.record_network_loglik(state, r, proposal) - ctx.record_network_loglik(state, r, current);
      }
    }
    const bool accept = std::log(rng.uniform()) < log_ratio;
    if (stats) stats->record(accept);
    if (accept) std::copy(proposal.begin(), proposal.end(), current.begin());
  }
}

// --- Step 5: distortion probabilities ------------------------------------------

BetaParams psi_conditional(const ModelState& state, const ModelContext& ctx, int field) {
  const Dataset& data = ctx.data();
  double distorted = 0.0, observed = 0.0;
  for (int r = 0; r < data.total_records(); ++r) {
    if (data.cell(r, field) == kMissing) continue;
    observed += 1.0;
    distorted += state.flag(r, field);
  }
  return {ctx.hyper().a_psi[field] + distorted, ctx.hyper().b_psi[field] + observed - distorted};
}

void update_psi(ModelState& state, const ModelContext& ctx, Rng& rng) {
  for (int l = 0; l < ctx.data().n_fields(); ++l) {
    const auto p = psi_conditional(state, ctx, l);
    // Clamp away from the boundary: Beta draws can round to exactly 0 or 1.
    state.globals.psi[l] = std::clamp(rng.beta(p.a, p.b), 1e-300, 1.0 - 1e-16);
  }
}

// --- Step 6: categorical distortion distributions ------------------------------

std::vector<double> theta_conditional(const ModelState& state, const ModelContext& ctx, int field) {
  const Dataset& data = ctx.data();
  std::vector<double> alpha = ctx.hyper().alpha[field];
  for (int n = 0; n < state.latent.size(); ++n) alpha[state.latent.profile(n, field)] += 1.0;
  if (ctx.use_profiles()) {
    for (int r = 0; r < data.total_records(); ++r) {
      const int p = data.cell(r, field);
      if (p != kMissing && state.flag(r, field)) alpha[p] += 1.0;
    }
  }
  return alpha;
}

void update_theta(ModelState& state, const ModelContext& ctx, Rng& rng) {
  for (int l = 0; l < ctx.data().n_fields(); ++l) {
    if (ctx.is_string(l)) continue;
    state.globals.theta[l] = rng.dirichlet(theta_conditional(state, ctx, l));
  }
}

// --- Step 7: intercepts ---------------------------------------------------------

void update_beta(ModelState& state, const ModelContext& ctx, std::span<const double> steps, Rng& rng,
                 std::span<MoveStats> stats) {
  const Dataset& data = ctx.data();
  std::vector<double> dist;
  std::vector<std::uint8_t> edge;
  for (int j = 0; j < data.n_files(); ++j) {
    const double current = state.globals.beta[j];
    const double proposal = current + steps[j] * rng.normal();
    const double omega = ctx.hyper().omega[j];
    double log_ratio = -(proposal * proposal - current * current) / (2.0 * omega * omega);
    if (ctx.use_network()) {
      const auto& graph = data.networks[j];
      const int offset = data.file_offset(j);
      for (int a = 0; a < graph.n_actors(); ++a) {
        const auto ua = state.latent.position(state.linkage.label(offset + a));
        for (int b = a + 1; b < graph.n_actors(); ++b) {
          const double d = distance(ua, state.latent.position(state.linkage.label(offset + b)));
          const bool y = graph.has_edge(a, b);
          log_ratio += dyad_loglik(y, proposal, d) - dyad_loglik(y, current, d);
        }
      }
    }
    const bool accept = std::log(rng.uniform()) < log_ratio;
    if (j < static_cast<int>(stats.size())) stats[j].record(accept);
    if (accept) state.globals.beta[j] = proposal;
  }
}

// --- Step 8: latent scale --------------------------------------------------------

InverseGammaParams sigma2_conditional(const ModelState& state, const ModelContext& ctx) {
  const int K = ctx.hyper().K;
  double sq = 0.0;
  for (int n = 0; n < state.latent.size(); ++n) {
    for (double x : state.latent.position(n)) sq += x * x;
  }
  return {ctx.hyper().a_sigma + 0.5 * state.latent.size() * K, ctx.hyper().b_sigma + 0.5 * sq};
}

void update_sigma2(ModelState& state, const ModelContext& ctx, Rng& rng) {
  const auto p = sigma2_conditional(state, ctx);
  state.globals.sigma2 = rng.inverse_gamma(p.shape, p.scale);
}

// --- Pointwise log-likelihood -----------------------------------------------------

int network_unit_count(const ModelContext& ctx) {
  if (!ctx.use_network()) return 0;
  int total = 0;
  for (const auto& g : ctx.data().networks) total += g.n_actors() * (g.n_actors() - 1) / 2;
  return total;
}

int profile_unit_count(const ModelContext& ctx) {
  if (!ctx.use_profiles()) return 0;
  int total = 0;
  for (int l = 0; l < ctx.data().n_fields(); ++l) total += ctx.data().observed_cells(l);
  return total;
}

void pointwise_loglik(const ModelContext& ctx, const ModelState& state, std::vector<double>& out) {
  const Dataset& data = ctx.data();
  out.clear();
  if (ctx.use_network()) {
    for (int j = 0; j < data.n_files(); ++j) {
      const auto& graph = data.networks[j];
      const int offset = data.file_offset(j);
      const double beta = state.globals.beta[j];
      for (int a = 0; a < graph.n_actors(); ++a) {
        const auto ua = state.latent.position(state.linkage.label(offset + a));
        for (int b = a + 1; b < graph.n_actors(); ++b) {
          const auto ub = state.latent.position(state.linkage.label(offset + b));
          out.push_back(dyad_loglik(graph.has_edge(a, b), beta, distance(ua, ub)));
        }
      }
    }
  }
  if (ctx.use_profiles()) {
    const auto& g = state.globals;
    for (int r = 0; r < data.total_records(); ++r) {
      const int n = state.linkage.label(r);
      for (int l = 0; l < data.n_fields(); ++l) {
        const int p = data.cell(r, l);
        if (p == kMissing) continue;
        const int truth = state.latent.profile(n, l);
        out.push_back(profile_cell_loglik_marginal(p, truth, g.psi[l], ctx.zeta(g, l, truth, p)));
      }
    }
  }
}

// --- Sampler ------------------------------------------------------------------

Sampler::Sampler(const ModelContext& ctx, SamplerConfig config, const RecordPairs& anchors)
    : ctx_(&ctx), config_(std::move(config)) {
  config_.validate();
  ctx.hyper().validate(ctx.data());
  anchored_ = anchored_records(ctx.data(), anchors);
  steps_.u = config_.step_u;
  steps_.beta.assign(ctx.data().n_files(), config_.step_beta);
  beta_total_.assign(ctx.data().n_files(), {});
  beta_window_.assign(ctx.data().n_files(), {});
  anchors_ = anchors;
  if (ctx.use_network() && ctx.use_profiles() && config_.linkage_warmup > 0.0) {
    warmup_ctx_.emplace(ctx.data(), ctx.hyper(), LikelihoodSwitches{false, true});
    warmup_iterations_ = static_cast<int>(std::lround(config_.linkage_warmup * config_.burn_in));
  }
}

ModelState Sampler::initial_state(Rng& rng) const {
  const Dataset& data = ctx_->data();
  const HyperParams& hyper = ctx_->hyper();
  const int L = data.n_fields();
  ModelState state;

  state.linkage = LinkageStructure::singletons(data.total_records());
  for (const auto& [a, b] : anchors_.pairs) {
    const int ga = data.global_index(a);
    const int gb = data.global_index(b);
    state.linkage.join(gb, state.linkage.label(ga));  // swap-remove keeps labels dense
  }

  auto& g = state.globals;
  g.beta.assign(data.n_files(), 0.0);
  g.sigma2 = hyper.a_sigma > 1.0 ? hyper.b_sigma / (hyper.a_sigma - 1.0) : hyper.b_sigma / (hyper.a_sigma + 1.0);
  g.psi.resize(L);
  g.theta.resize(L);
  for (int l = 0; l < L; ++l) {
    g.psi[l] = hyper.a_psi[l] / (hyper.a_psi[l] + hyper.b_psi[l]);
    if (ctx_->is_string(l)) {
      g.theta[l] = data.fields[l].empirical_freq;
    } else {
      const double total = std::accumulate(hyper.alpha[l].begin(), hyper.alpha[l].end(), 0.0);
      g.theta[l].resize(hyper.alpha[l].size());
      for (std::size_t m = 0; m < g.theta[l].size(); ++m) g.theta[l][m] = hyper.alpha[l][m] / total;
    }
  }

  state.latent = LatentPopulation(L, hyper.K);
  const double sd = std::sqrt(g.sigma2);
  std::vector<int> profile(L);
  std::vector<double> position(hyper.K);
  for (int n = 0; n < state.linkage.n_clusters(); ++n) {
    for (int l = 0; l < L; ++l) {
      profile[l] = kMissing;
      for (int r : state.linkage.members(n)) {
        if (const int p = data.cell(r, l); p != kMissing) {
          profile[l] = p;
          break;
        }
      }
      if (profile[l] == kMissing) profile[l] = rng.categorical(prior_pmf(state, *ctx_, l));
    }
    for (double& x : position) x = rng.normal(0.0, sd);
    state.latent.append(profile, position);
  }

  state.w.assign(static_cast<std::size_t>(data.total_records()) * L, 0);
  for (int r = 0; r < data.total_records(); ++r) {
    const int n = state.linkage.label(r);
    for (int l = 0; l < L; ++l) {
      const int p = data.cell(r, l);
      state.flag(r, l) = (p != kMissing && p != state.latent.profile(n, l)) ? 1 : 0;
    }
  }
  return state;
}

void Sampler::iterate(ModelState& state, Rng& rng, int iteration) {
  const auto& b = config_.blocks;
  const ModelContext& ctx = *ctx_;
  MoveStats u_now;
  std::vector<MoveStats> beta_now(beta_total_.size());

  if (b.linkage) {
    LinkageMoveOptions options;
    options.R = config_.R;
    options.network_only_ratio = config_.network_only_linkage_ratio;
    options.fresh = config_.fresh_latents;
    options.position_scale = config_.fresh_position_scale;
    const bool warming = warmup_ctx_ && iteration >= 1 && iteration <= warmup_iterations_;
    update_linkage(state, warming ? *warmup_ctx_ : ctx, anchored_, options, rng, &linkage_total_);
  }
  if (b.distortions) update_distortions(state, ctx, rng);
  if (b.latent_profiles) update_latent_profiles(state, ctx, rng);
  if (b.positions) update_positions(state, ctx, steps_.u, rng, &u_now);
  if (b.psi) update_psi(state, ctx, rng);
  if (b.theta) update_theta(state, ctx, rng);
  if (b.beta) update_beta(state, ctx, steps_.beta, rng, beta_now);
  if (b.sigma2) update_sigma2(state, ctx, rng);

  const auto merge = [](MoveStats& into, const MoveStats& from) {
    into.proposed += from.proposed;
    into.accepted += from.accepted;
  };
  merge(u_total_, u_now);
  merge(u_window_, u_now);
  for (std::size_t j = 0; j < beta_now.size(); ++j) {
    merge(beta_total_[j], beta_now[j]);
    merge(beta_window_[j], beta_now[j]);
  }

  if (config_.adapt && iteration > 0 && iteration <= config_.burn_in && iteration % config_.adapt_window == 0) {
    steps_ = adapt_step_sizes(steps_, u_window_, beta_window_, config_, ctx.hyper().K);
    u_window_ = {};
    std::fill(beta_window_.begin(), beta_window_.end(), MoveStats{});
  }
}

std::map<std::string, double> Sampler::acceptance_rates() const {
  std::map<std::string, double> out;
  out["linkage"] = linkage_total_.rate();
  out["u"] = u_total_.rate();
  for (std::size_t j = 0; j < beta_total_.size(); ++j) out["beta_" + std::to_string(j + 1)] = beta_total_[j].rate();
  return out;
}

// --- Diagnostics ----------------------------------------------------------------

double effective_sample_size(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 4) return static_cast<double>(n);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  if (var <= 0.0) return static_cast<double>(n);
  const auto autocorr = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - mean) * (x[i + lag] - mean);
    return s / (n * var);
  };
  double sum = 0.0;
  for (std::size_t lag = 1; lag + 1 < n; lag += 2) {
    const double pair = autocorr(lag) + autocorr(lag + 1);
    if (pair <= 0.0) break;
    sum += pair;
  }
  const double tau = 1.0 + 2.0 * sum;
  return n / std::max(tau, 1.0 / n);
}

ChainResult run_chain(const Dataset& data, const HyperParams& hyper, const SamplerConfig& config,
                      const RecordPairs& anchors) {
  config.validate();
  const ModelContext ctx(data, hyper, config.likelihood);
  Sampler sampler(ctx, config, anchors);
  Rng rng(config.seed);
  ModelState state = sampler.initial_state(rng);

  ChainResult result;
  auto& samples = result.samples;
  auto& names = samples.traces.names;
  names = {"N", "matches", "sigma2"};
  for (int j = 0; j < data.n_files(); ++j) names.push_back("beta_" + std::to_string(j + 1));
  for (const auto& f : data.fields) names.push_back("psi_" + f.name);
  names.push_back("loglik");

  samples.pointwise = PointwiseStats(network_unit_count(ctx), profile_unit_count(ctx));
  std::vector<double> row;

  for (int it = 1; it <= config.iterations; ++it) {
    sampler.iterate(state, rng, it);
    if (it <= config.burn_in || (it - config.burn_in) % config.thin != 0) continue;

    samples.linkage.push_back(state.linkage.labels());
    pointwise_loglik(ctx, state, row);
    samples.pointwise.add(row);
    const double loglik = std::accumulate(row.begin(), row.end(), 0.0);
    if (config.store_pointwise) samples.pointwise_rows.push_back(row);

    std::vector<double> trace;
    const int n_clusters = state.linkage.n_clusters();
    trace.push_back(n_clusters);
    trace.push_back(data.total_records() - n_clusters);
    trace.push_back(state.globals.sigma2);
    for (double b : state.globals.beta) trace.push_back(b);
    for (double p : state.globals.psi) trace.push_back(p);
    trace.push_back(loglik);
    samples.traces.rows.push_back(std::move(trace));
  }

  samples.acceptance = sampler.acceptance_rates();
  auto& diag = result.diagnostics;
  diag.acceptance = samples.acceptance;
  diag.final_steps = sampler.steps();
  for (std::size_t c = 0; c < names.size(); ++c) {
    std::vector<double> column;
    column.reserve(samples.traces.rows.size());
    for (const auto& r : samples.traces.rows) column.push_back(r[c]);
    TraceSummary s;
    s.name = names[c];
    if (!column.empty()) {
      s.mean = std::accumulate(column.begin(), column.end(), 0.0) / column.size();
      double ss = 0.0;
      for (double v : column) ss += (v - s.mean) * (v - s.mean);
      s.sd = column.size() > 1 ? std::sqrt(ss / (column.size() - 1.0)) : 0.0;
      s.ess = effective_sample_size(column);
    }
    diag.traces.push_back(s);
  }
  result.final_state = std::move(state);
  return result;
}

}  // namespace bnrl
