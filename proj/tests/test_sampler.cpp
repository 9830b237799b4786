#include <gtest/gtest.h>

#include <cmath>

#include "bnrl/estimator.hpp"
#include "bnrl/sampler.hpp"
#include "support.hpp"

using namespace bnrl;
using bnrl::testing::Rows;
using bnrl::testing::make_dataset;

namespace {

/// Default hyperparameters, with a fixed IGam(3, 2) sigma^2 prior when the data
/// are too small for the elicitation.
HyperParams hyper_for(const Dataset& data, int K) {
  if (data.total_records() > 4) return default_hyperparams(data, K);
  HyperParams h;
  h.K = K;
  h.omega.assign(data.n_files(), 100.0);
  h.a_sigma = 3.0;
  h.b_sigma = 2.0;
  for (const auto& f : data.fields) {
    const bool is_string = f.kind == FieldKind::StringValued;
    h.alpha_mode.push_back(is_string ? AlphaMode::Empirical : AlphaMode::Ones);
    h.alpha.push_back(is_string ? f.empirical_freq : std::vector<double>(f.n_levels(), 1.0));
    h.a_psi.push_back(1.0);
    h.b_psi.push_back(99.0);
  }
  return h;
}

/// State with the given labels; truths copied from each cluster's first
/// record, positions at zero, flags zero, globals at simple values.
ModelState simple_state(const Dataset& data, const std::vector<int>& labels, int K) {
  ModelState s;
  s.linkage = LinkageStructure::from_labels(labels, data);
  s.latent = LatentPopulation(data.n_fields(), K);
  for (int n = 0; n < s.linkage.n_clusters(); ++n) {
    const int r = s.linkage.members(n)[0];
    std::vector<int> truth;
    for (int l = 0; l < data.n_fields(); ++l) truth.push_back(std::max(data.cell(r, l), 0));
    s.latent.append(truth, std::vector<double>(K, 0.0));
  }
  s.w.assign(static_cast<std::size_t>(data.total_records()) * data.n_fields(), 0);
  for (int r = 0; r < data.total_records(); ++r) {
    for (int l = 0; l < data.n_fields(); ++l) {
      const int p = data.cell(r, l);
      s.flag(r, l) = p != kMissing && p != s.latent.profile(s.linkage.label(r), l);
    }
  }
  s.globals.beta.assign(data.n_files(), 0.0);
  s.globals.sigma2 = 1.0;
  for (const auto& f : data.fields) {
    s.globals.theta.push_back(std::vector<double>(f.n_levels(), 1.0 / f.n_levels()));
    s.globals.psi.push_back(0.1);
  }
  return s;
}

Dataset two_by_two() { return make_dataset({"f"}, {{{"a"}, {"b"}}, {{"a"}, {"c"}}}); }

}  // namespace

TEST(Distortions, ProbabilityExamples) {
  const auto data = make_dataset({"f"}, {{{"a"}, {"b"}, {"c"}, {"d"}}, {{"a"}}});
  const auto hyper = hyper_for(data, 2);
  const ModelContext ctx(data, hyper);
  auto s = simple_state(data, {0, 1, 2, 3, 0}, 2);
  s.globals.psi = {0.01};
  s.globals.theta = {{0.25, 0.25, 0.25, 0.25}};
  EXPECT_NEAR(distortion_probability(s, ctx, 0, 0), 0.01 * 0.25 / (0.01 * 0.25 + 0.99), 1e-15);
  EXPECT_NEAR(distortion_probability(s, ctx, 0, 0), 0.002519, 1e-6);
  s.latent.profile(1, 0) = 2;
  EXPECT_DOUBLE_EQ(distortion_probability(s, ctx, 1, 0), 1.0);
  s.globals.psi = {1e-12};
  EXPECT_LT(distortion_probability(s, ctx, 0, 0), 1e-12);
}

TEST(Distortions, UpdateRestoresConsistency) {
  const auto data = make_dataset({"f"}, {{{"a"}, {"b"}}, {{"a"}, {"c"}}});
  const auto hyper = hyper_for(data, 2);
  const ModelContext ctx(data, hyper);
  auto s = simple_state(data, {0, 1, 0, 1}, 2);  // b and c share a cluster
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    update_distortions(s, ctx, rng);
    EXPECT_TRUE(flags_consistent(data, s));
    EXPECT_EQ(s.flag(3, 0), 1);
  }
}

TEST(Psi, ConditionalExamples) {
  std::vector<Rows> files(2);
  for (int i = 0; i < 5; ++i) files[0].push_back({"v" + std::to_string(i)});
  for (int i = 0; i < 5; ++i) files[1].push_back({"w" + std::to_string(i)});
  const auto data = make_dataset({"f"}, files);
  const auto hyper = hyper_for(data, 2);
  const ModelContext ctx(data, hyper);
  auto s = simple_state(data, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, 2);
  auto p = psi_conditional(s, ctx, 0);
  EXPECT_DOUBLE_EQ(p.a, 1.0);
  EXPECT_DOUBLE_EQ(p.b, 109.0);
  s.flag(0, 0) = s.flag(4, 0) = s.flag(7, 0) = 1;
  p = psi_conditional(s, ctx, 0);
  EXPECT_DOUBLE_EQ(p.a, 4.0);
  EXPECT_DOUBLE_EQ(p.b, 106.0);
  double last = 0.0;
  for (int k = 0; k <= 10; ++k) {
    for (int r = 0; r < 10; ++r) s.flag(r, 0) = r < k;
    p = psi_conditional(s, ctx, 0);
    EXPECT_GT(p.a / (p.a + p.b), last);
    last = p.a / (p.a + p.b);
  }
}

TEST(Theta, ConditionalPlugIn) {
  // alpha = (1, 1), truth counts (2, 0), distorted observations (1, 0) -> (4, 1).
  auto data = make_dataset({"f"}, {{{"m1"}}, {{"m1"}, {"m2"}}});
  data.profiles[1].at(1, 0) = kMissing;  // keep level m2 but drop its only cell
  const auto hyper = hyper_for(data, 1);
  const ModelContext ctx(data, hyper);
  auto s = simple_state(data, {0, 1, 0}, 1);
  s.flag(0, 0) = 1;
  EXPECT_EQ(theta_conditional(s, ctx, 0), (std::vector<double>{4, 1}));
  s.flag(0, 0) = 0;
  EXPECT_EQ(theta_conditional(s, ctx, 0), (std::vector<double>{3, 1}));
}

TEST(Sigma2, ConditionalExample) {
  const auto data = make_dataset({"f"}, {{{"a"}}, {{"b"}}});
  auto hyper = hyper_for(data, 1);
  hyper.a_sigma = 3;
  hyper.b_sigma = 4;
  const ModelContext ctx(data, hyper);
  auto s = simple_state(data, {0, 1}, 1);
  auto p = sigma2_conditional(s, ctx);
  EXPECT_DOUBLE_EQ(p.shape, 4.0);
  EXPECT_DOUBLE_EQ(p.scale, 4.0);
  s.latent.position(0)[0] = 1;
  s.latent.position(1)[0] = 2;
  p = sigma2_conditional(s, ctx);
  EXPECT_DOUBLE_EQ(p.shape, 4.0);
  EXPECT_DOUBLE_EQ(p.scale, 6.5);
  // The posterior mean lies between the prior mean and the sum-of-squares scale.
  const double post = p.scale / (p.shape - 1), prior = 4.0 / 2.0, data_scale = 5.0 / 2.0;
  EXPECT_GT(post, std::min(prior, data_scale));
  EXPECT_LT(post, std::max(prior, data_scale));
}

TEST(LatentProfiles, PinnedAndPrior) {
  const auto data = make_dataset({"f"}, {{{"a"}, {"b"}}, {{"c"}, {"d"}}});
  const auto hyper = hyper_for(data, 1);
  const ModelContext ctx(data, hyper);
  auto s = simple_state(data, {0, 1, 2, 3}, 1);
  s.globals.theta = {{0.1, 0.2, 0.3, 0.4}};
  EXPECT_EQ(latent_profile_conditional(s, ctx, 1, 0), (std::vector<double>{0, 1, 0, 0}));
  s.flag(1, 0) = 1;
  EXPECT_EQ(latent_profile_conditional(s, ctx, 1, 0), s.globals.theta[0]);
}

TEST(LatentProfiles, StringConditionalByHand) {
  const auto data = make_dataset({"s"}, {{{"ab"}, {"ac"}, {"ac"}}, {{"ab"}}}, {{"s", FieldKind::StringValued}});
  const auto hyper = hyper_for(data, 1);
  const ModelContext ctx(data, hyper);
  auto s = simple_state(data, {0, 1, 2, 3}, 1);
  s.flag(0, 0) = 1;
  const auto& f = data.fields[0];  // levels ab, ac with gamma 0.5, 0.5
  ASSERT_EQ(f.n_levels(), 2);
  // p = "ab". Weight of s: gamma(s) exp(log h(s) - lambda d(ab, s)).
  const double h_ab = 1.0 / (0.5 + 0.5 * std::exp(-1.0));
  const double h_ac = h_ab;
  const double w_ab = 0.5 * h_ab * 1.0;
  const double w_ac = 0.5 * h_ac * std::exp(-1.0);
  const auto pmf = latent_profile_conditional(s, ctx, 0, 0);
  EXPECT_NEAR(pmf[0], w_ab / (w_ab + w_ac), 1e-12);
  EXPECT_NEAR(pmf[1], w_ac / (w_ab + w_ac), 1e-12);
}

TEST(Linkage, FreshCellMarginal) {
  const auto data = make_dataset({"c", "s"}, {{{"x", "ab"}}, {{"y", "ac"}}}, {{"s", FieldKind::StringValued}});
  const auto hyper = hyper_for(data, 1);
  const ModelContext ctx(data, hyper);
  auto s = simple_state(data, {0, 1}, 1);
  s.globals.theta[0] = {0.3, 0.7};
  s.globals.psi = {0.2, 0.4};
  EXPECT_DOUBLE_EQ(fresh_cell_marginal(s, ctx, 0, 1), 0.7);
  const auto& gamma = data.fields[1].empirical_freq;
  double expected = 0.0;
  for (int t = 0; t < 2; ++t) {
    expected += gamma[t] * ((t == 0 ? 0.6 : 0.0) + 0.4 * ctx.tables().zeta(1, t, 0));
  }
  EXPECT_NEAR(fresh_cell_marginal(s, ctx, 1, 0), expected, 1e-15);
}

TEST(Linkage, AllAnchoredStaysPut) {
  const auto data = two_by_two();
  const auto hyper = hyper_for(data, 1);
  const ModelContext ctx(data, hyper);
  const auto anchors = bnrl::testing::pairs_of({{0, 0, 1, 1}, {0, 1, 1, 0}});
  SamplerConfig config;
  Sampler sampler(ctx, config, anchors);
  Rng rng(5);
  auto s = sampler.initial_state(rng);
  const auto labels = s.linkage.labels();
  for (int i = 0; i < 200; ++i) {
    sampler.iterate(s, rng, i + 1);
    EXPECT_EQ(s.linkage.labels(), labels);
  }
}

namespace {

/// Frequency of each cross pair being linked over many sweeps with the
/// likelihood switched off or on, versus the exact enumeration.
void check_against_enumeration(bool likelihood, FreshLatents fresh, int sweeps, double tol) {
  const auto data = make_dataset({"f"}, {{{"a"}, {"b"}}, {{"a"}, {"c"}}});
  const auto hyper = hyper_for(data, 1);
  const double psi = 0.3;
  const std::vector<double> theta{0.5, 0.3, 0.2};
  SamplerConfig config;
  config.likelihood = {false, likelihood};
  config.blocks.psi = config.blocks.theta = config.blocks.positions = false;
  config.blocks.beta = config.blocks.sigma2 = false;
  config.fresh_latents = fresh;
  const ModelContext ctx(data, hyper, config.likelihood);
  Sampler sampler(ctx, config);
  Rng rng(11);
  auto s = sampler.initial_state(rng);
  s.globals.psi = {psi};
  s.globals.theta = {theta};
  std::vector<std::vector<double>> count(2, std::vector<double>(2, 0.0));
  for (int i = 0; i < sweeps; ++i) {
    sampler.iterate(s, rng, 0);
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) count[a][b] += s.linkage.label(a) == s.linkage.label(2 + b);
    }
  }
  const auto exact = likelihood ? bnrl::testing::exact_match_probabilities(data, psi, theta)
                                : std::vector<std::vector<double>>(2, std::vector<double>(2, 2.0 / 7.0));
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) EXPECT_NEAR(count[a][b] / sweeps, exact[a][b], tol) << a << "," << b;
  }
}

}  // namespace

TEST(Linkage, UniformPartitionsWithoutLikelihood) {
  check_against_enumeration(false, FreshLatents::Informed, 60000, 0.01);
}

TEST(Linkage, ExactPosteriorPriorFreshLatents) { check_against_enumeration(true, FreshLatents::Prior, 60000, 0.015); }

TEST(Linkage, ExactPosteriorInformedFreshLatents) {
  check_against_enumeration(true, FreshLatents::Informed, 60000, 0.015);
}

TEST(Linkage, IdenticalRareProfilesMatch) {
  // Two records share a rare value; both the exact posterior and the chain
  // favour the match.
  const auto data = make_dataset({"f"}, {{{"rare"}, {"x"}}, {{"rare"}, {"y"}}});
  std::vector<double> theta(data.fields[0].n_levels(), 0.99 / (data.fields[0].n_levels() - 1));
  theta[data.fields[0].level_of("rare")] = 0.01;
  const auto exact = bnrl::testing::exact_match_probabilities(data, 0.01, theta);
  EXPECT_GT(exact[0][0], 0.5);

  const auto hyper = hyper_for(data, 1);
  SamplerConfig config;
  config.likelihood.network = false;
  config.blocks.psi = config.blocks.theta = false;
  const ModelContext ctx(data, hyper, config.likelihood);
  Sampler sampler(ctx, config);
  Rng rng(21);
  auto s = sampler.initial_state(rng);
  s.globals.psi = {0.01};
  s.globals.theta = {theta};
  int linked = 0;
  const int sweeps = 40000;
  for (int i = 0; i < sweeps; ++i) {
    sampler.iterate(s, rng, 0);
    linked += s.linkage.label(0) == s.linkage.label(2);
  }
  EXPECT_GT(static_cast<double>(linked) / sweeps, 0.5);
  EXPECT_NEAR(static_cast<double>(linked) / sweeps, exact[0][0], 0.02);
}

TEST(Chain, DeterministicAndValid) {
  auto data = make_dataset({"f"}, {{{"a"}, {"b"}, {"c"}}, {{"a"}, {"b"}, {"d"}}});
  bnrl::testing::attach_networks(data, {{{0, 1}}, {{0, 1}, {1, 2}}});
  const auto hyper = hyper_for(data, 2);
  SamplerConfig config;
  config.iterations = 300;
  config.burn_in = 100;
  config.thin = 2;
  config.store_pointwise = true;
  const auto anchors = bnrl::testing::pairs_of({{0, 2, 1, 2}});
  const auto one = run_chain(data, hyper, config, anchors);
  const auto two = run_chain(data, hyper, config, anchors);
  ASSERT_EQ(one.samples.size(), 100u);
  EXPECT_EQ(one.samples.linkage, two.samples.linkage);
  EXPECT_EQ(one.samples.traces.rows, two.samples.traces.rows);
  EXPECT_EQ(one.samples.pointwise_rows, two.samples.pointwise_rows);
  EXPECT_TRUE(one.final_state == two.final_state);
  for (const auto& labels : one.samples.linkage) {
    EXPECT_NO_THROW(LinkageStructure::from_labels(labels, data));
    EXPECT_EQ(labels[2], labels[5]);
  }
  check_state(data, one.final_state);
  for (const auto& [name, rate] : one.diagnostics.acceptance) {
    EXPECT_GE(rate, 0.0);
    EXPECT_LE(rate, 1.0);
  }
}

TEST(Chain, InvariantsAfterEveryIteration) {
  auto data = make_dataset({"c", "s"}, {{{"a", "ann"}, {"b", "bo"}, {"a", "anne"}}, {{"a", "ann"}, {"c", "bob"}}},
                           {{"s", FieldKind::StringValued}});
  bnrl::testing::attach_networks(data, {{{0, 1}, {1, 2}}, {{0, 1}}});
  const auto hyper = hyper_for(data, 2);
  const ModelContext ctx(data, hyper);
  SamplerConfig config;
  Sampler sampler(ctx, config);
  Rng rng(9);
  auto s = sampler.initial_state(rng);
  for (int i = 1; i <= 300; ++i) {
    sampler.iterate(s, rng, i);
    ASSERT_NO_THROW(check_state(data, s));
    ASSERT_TRUE(flags_consistent(data, s));
    ASSERT_TRUE(s.linkage.is_valid(data));
  }
}

TEST(Positions, TinyStepAlwaysAccepted) {
  auto data = make_dataset({"f"}, {{{"a"}, {"b"}, {"c"}}, {{"d"}}});
  bnrl::testing::attach_networks(data, {{{0, 1}}, {}});
  const auto hyper = hyper_for(data, 2);
  const ModelContext ctx(data, hyper);
  auto s = simple_state(data, {0, 1, 2, 3}, 2);
  Rng rng(2);
  MoveStats stats;
  for (int i = 0; i < 200; ++i) update_positions(s, ctx, 1e-9, rng, &stats);
  EXPECT_EQ(stats.rate(), 1.0);
}

TEST(Beta, DenseGraphRaisesIntercept) {
  std::vector<Rows> files(2);
  for (int i = 0; i < 8; ++i) {
    files[0].push_back({"a" + std::to_string(i)});
    files[1].push_back({"b" + std::to_string(i)});
  }
  auto data = make_dataset({"f"}, files);
  std::vector<std::pair<int, int>> complete;
  for (int a = 0; a < 8; ++a) {
    for (int b = a + 1; b < 8; ++b) complete.emplace_back(a, b);
  }
  bnrl::testing::attach_networks(data, {complete, {}});
  auto hyper = hyper_for(data, 2);
  hyper.omega = {5.0, 5.0};
  SamplerConfig config;
  config.iterations = 3000;
  config.burn_in = 1000;
  config.blocks.linkage = false;
  const auto result = run_chain(data, hyper, config);
  double dense = 0, empty = 0;
  for (const auto& t : result.diagnostics.traces) {
    if (t.name == "beta_1") dense = t.mean;
    if (t.name == "beta_2") empty = t.mean;
  }
  EXPECT_GT(dense, empty + 2.0);
}

TEST(Adaptation, Direction) {
  EXPECT_GT(adapt_step(1.0, 1.0, 0.44), 1.0);
  EXPECT_LT(adapt_step(1.0, 0.0, 0.44), 1.0);
  EXPECT_NEAR(adapt_step(1.0, 0.44, 0.44), 1.0, 1e-15);
}

TEST(Adaptation, FrozenAfterBurnIn) {
  auto data = make_dataset({"f"}, {{{"a"}, {"b"}, {"c"}}, {{"d"}, {"e"}}});
  bnrl::testing::attach_networks(data, {{{0, 1}}, {{0, 1}}});
  const auto hyper = hyper_for(data, 2);
  const ModelContext ctx(data, hyper);
  SamplerConfig config;
  config.iterations = 400;
  config.burn_in = 200;
  Sampler sampler(ctx, config);
  Rng rng(4);
  auto s = sampler.initial_state(rng);
  for (int i = 1; i <= 200; ++i) sampler.iterate(s, rng, i);
  const auto frozen = sampler.steps();
  for (int i = 201; i <= 400; ++i) sampler.iterate(s, rng, i);
  EXPECT_EQ(sampler.steps().u, frozen.u);
  EXPECT_EQ(sampler.steps().beta, frozen.beta);
}

TEST(SamplerConfig, Validation) {
  SamplerConfig c;
  c.burn_in = c.iterations;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.thin = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.step_u = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.target_accept_scalar = 1.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.linkage_warmup = 1.5;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Diagnostics, EffectiveSampleSize) {
  Rng rng(8);
  std::vector<double> iid(4000), sticky(4000);
  double x = 0.0;
  for (int i = 0; i < 4000; ++i) {
    iid[i] = rng.normal();
    x = 0.95 * x + rng.normal();
    sticky[i] = x;
  }
  EXPECT_GT(effective_sample_size(iid), 3000);
  EXPECT_LT(effective_sample_size(sticky), 400);
}
