#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bnrl/model.hpp"
#include "bnrl/random.hpp"
#include "bnrl/strings.hpp"
#include "bnrl/synthetic.hpp"
#include "support.hpp"

using namespace bnrl;
using bnrl::testing::Rows;
using bnrl::testing::make_dataset;

namespace {

constexpr double kPi = std::numbers::pi;

/// Two files, one categorical and one string field, small networks. The state
/// links record 0 of file 0 with record 0 of file 1.
struct Tiny {
  Dataset data;
  HyperParams hyper;
  ModelState state;

  Tiny() {
    data = make_dataset({"c", "s"}, {{{"a", "ann"}, {"b", "bob"}, {"a", "anne"}}, {{"a", "ann"}, {"c", "bob"}}},
                        {{"s", FieldKind::StringValued}});
    bnrl::testing::attach_networks(data, {{{0, 1}}, {{0, 1}}});
    hyper = default_hyperparams(data, 2);
    hyper.omega = {2.0, 3.0};
    state.linkage = LinkageStructure::from_labels(std::vector<int>{0, 1, 2, 0, 3}, data);
    state.latent = LatentPopulation(2, 2);
    const int ann = data.fields[1].level_of("ann");
    const int bob = data.fields[1].level_of("bob");
    const int anne = data.fields[1].level_of("anne");
    const std::vector<std::vector<int>> truths{{0, ann}, {1, bob}, {0, anne}, {2, bob}};
    const std::vector<std::vector<double>> pos{{0.1, -0.3}, {1.2, 0.4}, {-0.5, 0.9}, {0.7, 0.7}};
    for (int n = 0; n < 4; ++n) state.latent.append(truths[n], pos[n]);
    state.w.assign(5 * 2, 0);
    state.flag(2, 1) = 1;  // "anne" observed, truth kept but flagged
    state.globals.beta = {-0.4, 0.3};
    state.globals.sigma2 = 1.7;
    state.globals.theta = {{0.5, 0.3, 0.2}, data.fields[1].empirical_freq};
    state.globals.psi = {0.05, 0.2};
  }
};

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Independent evaluation of the joint log density for Tiny.
double brute_force_log_joint(const Tiny& t) {
  const auto& d = t.data;
  const auto& s = t.state;
  const auto& g = s.globals;
  const auto& h = t.hyper;
  double total = 0.0;
  // Network: every same-file dyad.
  for (int j = 0; j < 2; ++j) {
    for (int a = 0; a < d.file_size(j); ++a) {
      for (int b = a + 1; b < d.file_size(j); ++b) {
        const auto ua = s.latent.position(s.linkage.label(d.global_index({j, a})));
        const auto ub = s.latent.position(s.linkage.label(d.global_index({j, b})));
        const double dist = std::hypot(ua[0] - ub[0], ua[1] - ub[1]);
        const double p = logistic(g.beta[j] - dist);
        total += d.networks[j].has_edge(a, b) ? std::log(p) : std::log(1 - p);
      }
    }
  }
  // Profiles and flags.
  const auto& sf = d.fields[1];
  for (int r = 0; r < d.total_records(); ++r) {
    const int n = s.linkage.label(r);
    for (int l = 0; l < 2; ++l) {
      const int p = d.cell(r, l);
      const int truth = s.latent.profile(n, l);
      const bool w = s.flag(r, l);
      total += w ? std::log(g.psi[l]) : std::log(1 - g.psi[l]);
      if (!w) {
        EXPECT_EQ(p, truth);
        continue;
      }
      if (l == 0) {
        total += std::log(g.theta[0][p]);
      } else {
        double z = 0.0;
        for (int v = 0; v < sf.n_levels(); ++v) {
          z += sf.empirical_freq[v] * std::exp(-edit_distance(sf.levels[v], sf.levels[truth]));
        }
        total += std::log(sf.empirical_freq[p] * std::exp(-edit_distance(sf.levels[p], sf.levels[truth])) / z);
      }
    }
  }
  // Priors.
  for (int n = 0; n < s.latent.size(); ++n) {
    total += std::log(g.theta[0][s.latent.profile(n, 0)]);
    total += std::log(sf.empirical_freq[s.latent.profile(n, 1)]);
    for (double x : s.latent.position(n)) total += -0.5 * std::log(2 * kPi * g.sigma2) - x * x / (2 * g.sigma2);
  }
  total += std::log(2.0);  // Dirichlet(1, 1, 1) density is Gamma(3)
  for (int l = 0; l < 2; ++l) {
    const double a = h.a_psi[l], b = h.b_psi[l];
    total += (a - 1) * std::log(g.psi[l]) + (b - 1) * std::log(1 - g.psi[l]) - std::lgamma(a) - std::lgamma(b) +
             std::lgamma(a + b);
  }
  for (int j = 0; j < 2; ++j) {
    total += -0.5 * std::log(2 * kPi * h.omega[j] * h.omega[j]) - g.beta[j] * g.beta[j] / (2 * h.omega[j] * h.omega[j]);
  }
  total += h.a_sigma * std::log(h.b_sigma) - std::lgamma(h.a_sigma) - (h.a_sigma + 1) * std::log(g.sigma2) -
           h.b_sigma / g.sigma2;
  return total;
}

}  // namespace

TEST(EdgeProbability, Examples) {
  const std::vector<double> a{0.3, -1.0}, b{1.3, -1.0};
  EXPECT_DOUBLE_EQ(edge_probability(0.0, a, a), 0.5);
  EXPECT_NEAR(edge_probability(0.0, a, b), 1.0 / (1.0 + std::exp(1.0)), 1e-15);
  EXPECT_NEAR(1.0 / (1.0 + std::exp(1.0)), 0.26894, 1e-5);
  EXPECT_LT(edge_probability(-50.0, a, b), 1e-20);
}

TEST(EdgeProbability, SymmetricMonotoneAndRigidInvariant) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a{rng.normal(), rng.normal()}, b{rng.normal(), rng.normal()};
    const double beta = rng.normal(0, 3);
    EXPECT_DOUBLE_EQ(edge_probability(beta, a, b), edge_probability(beta, b, a));
    EXPECT_LT(edge_probability(beta, a, b), edge_probability(beta + 0.1, a, b));
    const double angle = rng.uniform() * 2 * kPi, tx = rng.normal(), ty = rng.normal();
    const auto move = [&](const std::vector<double>& x) {
      return std::vector<double>{std::cos(angle) * x[0] - std::sin(angle) * x[1] + tx,
                                 std::sin(angle) * x[0] + std::cos(angle) * x[1] + ty};
    };
    EXPECT_NEAR(edge_probability(beta, move(a), move(b)), edge_probability(beta, a, b), 1e-12);
  }
}

TEST(DyadLoglik, MatchesDirectFormula) {
  for (double beta : {-3.0, 0.0, 2.5}) {
    for (double d : {0.0, 0.7, 4.0}) {
      const double p = 1.0 / (1.0 + std::exp(-(beta - d)));
      EXPECT_NEAR(dyad_loglik(true, beta, d), std::log(p), 1e-12);
      EXPECT_NEAR(dyad_loglik(false, beta, d), std::log(1 - p), 1e-12);
    }
  }
  EXPECT_TRUE(std::isfinite(dyad_loglik(true, -800.0, 0.0)));
}

TEST(NetworkLoglik, Examples) {
  {
    auto data = make_dataset({"a"}, {{{"x"}, {"y"}, {"z"}}});
    bnrl::testing::attach_networks(data, {{}});
    ModelState s;
    s.linkage = LinkageStructure::singletons(3);
    s.latent = LatentPopulation(1, 2);
    for (int n = 0; n < 3; ++n) s.latent.append(std::vector<int>{n}, std::vector<double>{0.1 * n, -0.2 * n});
    s.globals.beta = {-50.0};
    EXPECT_NEAR(network_loglik(data, s), 0.0, 3 * 1e-6);
  }
  {
    auto data = make_dataset({"a"}, {{{"x"}, {"y"}}});
    bnrl::testing::attach_networks(data, {{{0, 1}}});
    ModelState s;
    s.linkage = LinkageStructure::singletons(2);
    s.latent = LatentPopulation(1, 1);
    s.latent.append(std::vector<int>{0}, std::vector<double>{0.4});
    s.latent.append(std::vector<int>{1}, std::vector<double>{0.4});
    s.globals.beta = {0.0};
    EXPECT_NEAR(network_loglik(data, s), std::log(0.5), 1e-15);
  }
  {
    // Three nodes, one edge 1-3, hand-set positions.
    auto data = make_dataset({"a"}, {{{"x"}, {"y"}, {"z"}}});
    bnrl::testing::attach_networks(data, {{{0, 2}}});
    ModelState s;
    s.linkage = LinkageStructure::singletons(3);
    s.latent = LatentPopulation(1, 2);
    s.latent.append(std::vector<int>{0}, std::vector<double>{0, 0});
    s.latent.append(std::vector<int>{1}, std::vector<double>{3, 4});
    s.latent.append(std::vector<int>{2}, std::vector<double>{1, 0});
    s.globals.beta = {0.5};
    const double l12 = std::log(1 - logistic(0.5 - 5.0));
    const double l13 = std::log(logistic(0.5 - 1.0));
    const double l23 = std::log(1 - logistic(0.5 - std::hypot(2.0, 4.0)));
    EXPECT_NEAR(network_loglik(data, s), l12 + l13 + l23, 1e-12);
  }
}

TEST(StringDistortion, Examples) {
  FieldSpec f;
  f.name = "s";
  f.kind = FieldKind::StringValued;
  f.levels = {"ab", "ac"};
  f.empirical_freq = {0.5, 0.5};
  const auto pmf = string_distortion_pmf(f, 0, 1.0);
  EXPECT_NEAR(pmf[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
  EXPECT_NEAR(pmf[0], 0.7311, 1e-4);
  EXPECT_THROW(string_distortion_pmf(f, 2, 1.0), Error);

  f.levels = {"a", "bb", "ccc"};
  f.empirical_freq = {0.2, 0.3, 0.5};
  const auto flat = string_distortion_pmf(f, 1, 0.0);
  for (int s = 0; s < 3; ++s) EXPECT_NEAR(flat[s], f.empirical_freq[s], 1e-15);
}

TEST(StringDistortion, NormalizedAndScaleInvariant) {
  FieldSpec f;
  f.kind = FieldKind::StringValued;
  f.levels = {"anna", "anne", "bob", "robert"};
  f.empirical_freq = {0.1, 0.2, 0.3, 0.4};
  FieldSpec scaled = f;
  for (double& v : scaled.empirical_freq) v *= 7.5;
  for (int t = 0; t < 4; ++t) {
    double h = 0.0;
    const auto pmf = string_distortion_pmf(f, t, 1.3, &h);
    const auto pmf2 = string_distortion_pmf(scaled, t, 1.3);
    double sum = 0.0;
    for (int s = 0; s < 4; ++s) {
      sum += pmf[s];
      EXPECT_NEAR(pmf[s], pmf2[s], 1e-14);
      EXPECT_NEAR(pmf[s], f.empirical_freq[s] * h * std::exp(-1.3 * edit_distance(f.levels[s], f.levels[t])), 1e-14);
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(ProfileCell, Examples) {
  EXPECT_DOUBLE_EQ(profile_cell_loglik_marginal(2, 2, 0.0, 0.3), 0.0);
  EXPECT_LE(profile_cell_loglik_marginal(1, 2, 0.0, 0.3), kLogZero);
  EXPECT_NEAR(profile_cell_loglik_marginal(1, 2, 0.01, 0.25), std::log(0.0025), 1e-12);
}

TEST(ProfileCell, EqualsTwoTermEnumeration) {
  for (double psi : {0.01, 0.3, 0.9}) {
    for (double zeta : {0.05, 0.5}) {
      for (int p : {0, 1}) {
        const int truth = 0;
        const double w0 = (1 - psi) * (p == truth ? 1.0 : 0.0);
        const double w1 = psi * zeta;
        EXPECT_NEAR(profile_cell_loglik_marginal(p, truth, psi, zeta), std::log(w0 + w1), 1e-12);
      }
    }
  }
}

TEST(LogJoint, MatchesBruteForce) {
  Tiny t;
  check_state(t.data, t.state);
  EXPECT_NEAR(log_joint(t.data, t.state, t.hyper), brute_force_log_joint(t), 1e-9);
}

TEST(LogJoint, AdditiveDecomposition) {
  Tiny t;
  const ModelContext ctx(t.data, t.hyper);
  const auto base = log_joint_terms(ctx, t.state);

  auto doubled = t.state;
  doubled.globals.sigma2 *= 2;
  const auto d = log_joint_terms(ctx, doubled);
  EXPECT_EQ(d.network, base.network);
  EXPECT_EQ(d.profile, base.profile);
  EXPECT_EQ(d.beta_prior, base.beta_prior);
  EXPECT_EQ(d.psi_prior, base.psi_prior);
  EXPECT_NE(d.u_prior, base.u_prior);
  EXPECT_NE(d.sigma2_prior, base.sigma2_prior);

  auto shifted = t.state;
  shifted.globals.beta[1] += 0.7;
  const auto b = log_joint_terms(ctx, shifted);
  EXPECT_NE(b.network, base.network);
  EXPECT_NE(b.beta_prior, base.beta_prior);
  EXPECT_EQ(b.profile, base.profile);
  EXPECT_EQ(b.u_prior, base.u_prior);
  EXPECT_EQ(b.sigma2_prior, base.sigma2_prior);
  EXPECT_NEAR(b.total() - base.total(), (b.network - base.network) + (b.beta_prior - base.beta_prior), 1e-9);
}

TEST(LogJoint, InconsistentFlagsGiveLogZero) {
  Tiny t;
  t.state.latent.profile(1, 0) = 2;  // record "b" has w = 0 but truth "c"
  EXPECT_LE(log_joint(t.data, t.state, t.hyper), kLogZero / 2);
}

TEST(LogJoint, FiniteOnSyntheticState) {
  SyntheticSpec spec;
  spec.file_sizes = {8, 6};
  spec.n_pairs = 3;
  spec.psi = {0.2};
  const auto syn = generate_synthetic(spec);
  const auto hyper = default_hyperparams(syn.data, spec.K);
  ModelState s;
  s.linkage = LinkageStructure::from_labels(syn.labels, syn.data);
  s.latent = LatentPopulation(syn.data.n_fields(), spec.K);
  for (std::size_t n = 0; n < syn.latent_profiles.size(); ++n) {
    std::vector<int> row;
    for (int l = 0; l < syn.data.n_fields(); ++l) row.push_back(syn.data.fields[l].level_of(syn.latent_profiles[n][l]));
    // A truth never observed has no level; pick any level and flag every member.
    for (int& v : row) v = v < 0 ? 0 : v;
    s.latent.append(row, syn.positions[n]);
  }
  s.w.assign(syn.data.total_records() * syn.data.n_fields(), 0);
  for (int r = 0; r < syn.data.total_records(); ++r) {
    for (int l = 0; l < syn.data.n_fields(); ++l) {
      s.flag(r, l) = syn.data.cell(r, l) != s.latent.profile(s.linkage.label(r), l);
    }
  }
  s.globals.beta = spec.beta;
  s.globals.beta.resize(2, spec.beta[0]);
  s.globals.sigma2 = spec.sigma2;
  s.globals.psi = spec.psi;
  s.globals.theta = {std::vector<double>(syn.data.fields[0].n_levels(), 1.0 / syn.data.fields[0].n_levels())};
  EXPECT_TRUE(std::isfinite(log_joint(syn.data, s, hyper)));
  EXPECT_GT(log_joint(syn.data, s, hyper), kLogZero / 2);
}

TEST(Elicitation, PlugInExample) {
  const auto ig = elicit_sigma_prior(100, 2, 0.5);
  EXPECT_NEAR(sigma2_prior_mean(100, 2), 125.0 * kPi, 1e-9);
  EXPECT_DOUBLE_EQ(ig.shape, 6.0);
  EXPECT_NEAR(ig.scale, 125.0 * kPi * 5.0, 1e-9);
  EXPECT_NEAR(ig.scale, 1963.50, 0.01);
  EXPECT_THROW(elicit_sigma_prior(4, 2), Error);
}

TEST(Elicitation, ReproducesMeanAndCv) {
  for (int I : {9, 50, 604, 5000}) {
    for (int K : {1, 2, 3, 5, 8}) {
      for (double cv : {0.25, 0.5, 1.0}) {
        const auto ig = elicit_sigma_prior(I, K, cv);
        const double mean = ig.scale / (ig.shape - 1);
        const double sd = mean / std::sqrt(ig.shape - 2);
        const double target = std::sqrt(I) / (std::sqrt(I) - 2) * std::pow(kPi, K / 2.0) / std::tgamma(K / 2.0 + 1) *
                              std::pow(I, 2.0 / K);
        EXPECT_NEAR(mean, target, 1e-9 * target);
        EXPECT_NEAR(sd / mean, cv, 1e-9);
      }
    }
  }
}

TEST(DefaultHyperparams, Values) {
  const auto data = make_dataset({"c", "s"}, {{{"a", "x"}, {"b", "x"}, {"c", "y"}, {"d", "z"}}, {{"a", "x"}}},
                                 {{"s", FieldKind::StringValued}});
  const auto h = default_hyperparams(data, 2);
  EXPECT_NEAR(h.a_psi[0] / (h.a_psi[0] + h.b_psi[0]), 0.01, 1e-15);
  EXPECT_EQ(h.alpha[0], (std::vector<double>{1, 1, 1, 1}));
  EXPECT_EQ(h.alpha[1], data.fields[1].empirical_freq);
  EXPECT_DOUBLE_EQ(h.omega[0], 100.0);
  EXPECT_DOUBLE_EQ(h.lambda, 1.0);
}

TEST(Hyperparams, ParseAndFormat) {
  const auto data = make_dataset({"c"}, {{{"a"}, {"b"}, {"c"}, {"d"}, {"a"}}, {{"a"}}});
  const auto h = parse_hyperparams("omega = 5\nlambda = 2\nK = 3\na_psi = 2\nb_psi = 50\n", data);
  EXPECT_EQ(h.K, 3);
  EXPECT_DOUBLE_EQ(h.omega[1], 5.0);
  EXPECT_DOUBLE_EQ(h.b_psi[0], 50.0);
  EXPECT_NEAR(h.a_sigma, elicit_sigma_prior(6, 3).shape, 1e-12);
  const auto back = parse_hyperparams(format_hyperparams(h, data), data);
  EXPECT_EQ(back.omega, h.omega);
  EXPECT_DOUBLE_EQ(back.a_sigma, h.a_sigma);
  EXPECT_DOUBLE_EQ(back.b_sigma, h.b_sigma);
  EXPECT_THROW(parse_hyperparams("nonsense = 1\n", data), Error);
  EXPECT_THROW(parse_hyperparams("lambda = -1\n", data), Error);
}

TEST(LinkageStructure, EditsKeepLabelsConsecutive) {
  const auto data = make_dataset({"a"}, {{{"1"}, {"2"}, {"3"}}, {{"4"}, {"5"}}});
  auto xi = LinkageStructure::singletons(5);
  xi.join(0, xi.label(3));
  EXPECT_EQ(xi.n_clusters(), 4);
  EXPECT_EQ(xi.partner(0), 3);
  EXPECT_TRUE(xi.is_valid(data));
  xi.detach(3);
  EXPECT_EQ(xi.n_clusters(), 5);
  EXPECT_TRUE(xi.is_valid(data));
  for (int r = 0; r < 5; ++r) EXPECT_LT(xi.label(r), xi.n_clusters());
  EXPECT_THROW(LinkageStructure::from_labels(std::vector<int>{0, 0, 1, 2, 3}, data), Error);
  EXPECT_THROW(LinkageStructure::from_labels(std::vector<int>{0, 1, 2, 3, 5}, data), Error);
}
