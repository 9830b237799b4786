#include "bnrl/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "bnrl/csv.hpp"
#include "bnrl/strings.hpp"

namespace bnrl {

// --- LinkageStructure -------------------------------------------------------

LinkageStructure LinkageStructure::singletons(int n_records) {
  LinkageStructure out;
  out.labels_.resize(n_records);
  out.members_.resize(n_records);
  for (int r = 0; r < n_records; ++r) {
    out.labels_[r] = r;
    out.members_[r] = {r, -1};
  }
  return out;
}

LinkageStructure LinkageStructure::from_labels(std::span<const int> labels, const Dataset& data) {
  if (static_cast<int>(labels.size()) != data.total_records()) {
    throw Error("linkage has " + std::to_string(labels.size()) + " labels for " +
                std::to_string(data.total_records()) + " records");
  }
  int n = 0;
  for (int label : labels) {
    if (label < 0) throw Error("negative cluster label");
    n = std::max(n, label + 1);
  }
  LinkageStructure out;
  out.labels_.assign(labels.begin(), labels.end());
  out.members_.assign(n, {-1, -1});
  for (int r = 0; r < static_cast<int>(labels.size()); ++r) {
    auto& m = out.members_[labels[r]];
    if (m[0] < 0) {
      m[0] = r;
    } else if (m[1] < 0) {
      if (data.file_of(m[0]) == data.file_of(r)) {
        throw Error("cluster " + std::to_string(labels[r] + 1) + " joins two records of file " +
                    std::to_string(data.file_of(r) + 1));
      }
      m[1] = r;
    } else {
      throw Error("cluster " + std::to_string(labels[r] + 1) + " has more than two records");
    }
  }
  for (int c = 0; c < n; ++c) {
    if (out.members_[c][0] < 0) throw Error("cluster labels are not consecutive");
  }
  return out;
}

int LinkageStructure::partner(int record) const {
  const auto& m = members_[labels_[record]];
  return m[0] == record ? m[1] : m[0];
}

bool LinkageStructure::is_valid(const Dataset& data) const {
  if (n_records() != data.total_records()) return false;
  std::vector<int> seen(labels_.size(), 0);
  for (int c = 0; c < n_clusters(); ++c) {
    const auto& m = members_[c];
    if (m[0] < 0 || m[0] >= n_records()) return false;
    if (labels_[m[0]] != c) return false;
    ++seen[m[0]];
    if (m[1] >= 0) {
      if (m[1] >= n_records() || labels_[m[1]] != c) return false;
      if (data.file_of(m[0]) == data.file_of(m[1])) return false;
      ++seen[m[1]];
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
}

void LinkageStructure::remove_from(int record, int cluster) {
  auto& m = members_[cluster];
  if (m[0] == record) {
    m[0] = m[1];
    m[1] = -1;
  } else if (m[1] == record) {
    m[1] = -1;
  }
}

LinkageStructure::Relabel LinkageStructure::drop_if_empty(int cluster) {
  if (members_[cluster][0] >= 0) return {};
  const int last = n_clusters() - 1;
  Relabel out{cluster, -1};
  if (cluster != last) {
    members_[cluster] = members_[last];
    for (int r : members(cluster)) labels_[r] = cluster;
    out.moved_from = last;
  }
  members_.pop_back();
  return out;
}

LinkageStructure::Relabel LinkageStructure::detach(int record) {
  const int old = labels_[record];
  if (members_[old][1] < 0) throw Error("detach: record is already a singleton");
  remove_from(record, old);
  labels_[record] = n_clusters();
  members_.push_back({record, -1});
  return {};
}

LinkageStructure::Relabel LinkageStructure::join(int record, int cluster) {
  if (members_[cluster][1] >= 0) throw Error("join: target cluster is full");
  const int old = labels_[record];
  if (old == cluster) throw Error("join: record already in target cluster");
  remove_from(record, old);
  members_[cluster][1] = record;
  labels_[record] = cluster;
  return drop_if_empty(old);
}

// --- LatentPopulation -------------------------------------------------------

void LatentPopulation::append(std::span<const int> profile, std::span<const double> position) {
  profiles_.insert(profiles_.end(), profile.begin(), profile.end());
  positions_.insert(positions_.end(), position.begin(), position.end());
  ++n_rows_;
}

void LatentPopulation::swap_remove(int n) {
  const int last = n_rows_ - 1;
  if (n != last) {
    std::copy_n(profiles_.begin() + static_cast<std::ptrdiff_t>(last) * n_fields_, n_fields_,
                profiles_.begin() + static_cast<std::ptrdiff_t>(n) * n_fields_);
    std::copy_n(positions_.begin() + static_cast<std::ptrdiff_t>(last) * dim_, dim_,
                positions_.begin() + static_cast<std::ptrdiff_t>(n) * dim_);
  }
  profiles_.resize(profiles_.size() - n_fields_);
  positions_.resize(positions_.size() - dim_);
  --n_rows_;
}

void ModelState::follow(const LinkageStructure::Relabel& relabel) {
  if (relabel.removed >= 0) latent.swap_remove(relabel.removed);
}

bool flags_consistent(const Dataset& data, const ModelState& state) {
  for (int r = 0; r < data.total_records(); ++r) {
    const int n = state.linkage.label(r);
    for (int l = 0; l < data.n_fields(); ++l) {
      const int p = data.cell(r, l);
      if (p != kMissing && state.flag(r, l) == 0 && p != state.latent.profile(n, l)) return false;
    }
  }
  return true;
}

void check_state(const Dataset& data, const ModelState& state) {
  if (!state.linkage.is_valid(data)) throw Error("linkage violates the singleton/pair constraint");
  if (state.latent.size() != state.linkage.n_clusters()) {
    throw Error("latent population size differs from cluster count");
  }
  if (state.w.size() != static_cast<std::size_t>(data.total_records()) * data.n_fields()) {
    throw Error("distortion flag array has the wrong size");
  }
  for (int n = 0; n < state.latent.size(); ++n) {
    for (int l = 0; l < data.n_fields(); ++l) {
      const int v = state.latent.profile(n, l);
      if (v < 0 || v >= data.fields[l].n_levels()) throw Error("latent profile level out of range");
    }
  }
  if (!flags_consistent(data, state)) throw Error("undistorted cell differs from latent truth");
  const auto& g = state.globals;
  if (!(g.sigma2 > 0.0)) throw Error("sigma2 must be positive");
  for (double psi : g.psi) {
    if (!(psi > 0.0 && psi < 1.0)) throw Error("psi outside (0, 1)");
  }
  for (const auto& theta : g.theta) {
    double total = 0.0;
    for (double t : theta) total += t;
    if (std::abs(total - 1.0) > 1e-9) throw Error("theta does not sum to one");
  }
}

// --- Network model ----------------------------------------------------------

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double log_normal_pdf(double x, double sd) {
  return -0.5 * std::log(2.0 * std::numbers::pi) - std::log(sd) - 0.5 * (x / sd) * (x / sd);
}

double log_beta_pdf(double x, double a, double b) {
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(x) +
         (b - 1.0) * std::log1p(-x);
}

double safe_log(double x) { return x > 0.0 ? std::log(x) : kLogZero; }

}  // namespace

double edge_probability(double beta, std::span<const double> u_a, std::span<const double> u_b) {
  const double x = beta - distance(u_a, u_b);
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

double dyad_loglik(bool edge, double beta, double dist) {
  const double x = beta - dist;
  return edge ? -softplus(-x) : -softplus(x);
}

double network_loglik(const Dataset& data, const ModelState& state) {
  double total = 0.0;
  for (int j = 0; j < static_cast<int>(data.networks.size()); ++j) {
    const auto& graph = data.networks[j];
    const int offset = data.file_offset(j);
    const double beta = state.globals.beta[j];
    for (int a = 0; a < graph.n_actors(); ++a) {
      const auto ua = state.latent.position(state.linkage.label(offset + a));
      for (int b = a + 1; b < graph.n_actors(); ++b) {
        const auto ub = state.latent.position(state.linkage.label(offset + b));
        total += dyad_loglik(graph.has_edge(a, b), beta, distance(ua, ub));
      }
    }
  }
  return total;
}

// --- Profile model ----------------------------------------------------------

std::vector<double> string_distortion_pmf(const FieldSpec& field, int truth, double lambda, double* h_out) {
  if (truth < 0 || truth >= field.n_levels()) {
    throw Error("field '" + field.name + "': latent truth outside the observed support");
  }
  const auto truth_text = decode_utf8(field.levels[truth]);
  std::vector<double> pmf(field.n_levels());
  double z = 0.0;
  for (int s = 0; s < field.n_levels(); ++s) {
    const int d = edit_distance(decode_utf8(field.levels[s]), truth_text);
    pmf[s] = field.empirical_freq[s] * std::exp(-lambda * d);
    z += pmf[s];
  }
  for (double& v : pmf) v /= z;
  if (h_out) *h_out = 1.0 / z;
  return pmf;
}

double profile_cell_loglik_marginal(int observed, int truth, double psi, double zeta_observed) {
  const double v = (1.0 - psi) * (observed == truth ? 1.0 : 0.0) + psi * zeta_observed;
  return safe_log(v);
}

DistortionTables::DistortionTables(const std::vector<FieldSpec>& fields, double lambda)
    : tables_(fields.size()) {
  for (std::size_t l = 0; l < fields.size(); ++l) {
    const auto& field = fields[l];
    if (field.kind != FieldKind::StringValued) continue;
    const int m = field.n_levels();
    std::vector<std::u32string> decoded;
    decoded.reserve(m);
    for (const auto& level : field.levels) decoded.push_back(decode_utf8(level));
    std::vector<int> dist(static_cast<std::size_t>(m) * m, 0);
    for (int a = 0; a < m; ++a) {
      for (int b = a + 1; b < m; ++b) {
        const int d = edit_distance(decoded[a], decoded[b]);
        dist[static_cast<std::size_t>(a) * m + b] = d;
        dist[static_cast<std::size_t>(b) * m + a] = d;
      }
    }
    Table& t = tables_[l];
    t.m = m;
    t.pmf.resize(static_cast<std::size_t>(m) * m);
    t.log_h.resize(m);
    for (int truth = 0; truth < m; ++truth) {
      double z = 0.0;
      double* row = t.pmf.data() + static_cast<std::size_t>(truth) * m;
      for (int s = 0; s < m; ++s) {
        row[s] = field.empirical_freq[s] * std::exp(-lambda * dist[static_cast<std::size_t>(truth) * m + s]);
        z += row[s];
      }
      for (int s = 0; s < m; ++s) row[s] /= z;
      t.log_h[truth] = -std::log(z);
    }
  }
}

ModelContext::ModelContext(const Dataset& data, const HyperParams& hyper, LikelihoodSwitches switches)
    : data_(&data), hyper_(&hyper), switches_(switches), tables_(data.fields, hyper.lambda) {}

double ModelContext::record_profile_loglik(const GlobalParams& g, int record, std::span<const int> truth) const {
  if (!use_profiles()) return 0.0;
  double total = 0.0;
  for (int l = 0; l < data_->n_fields(); ++l) {
    const int p = data_->cell(record, l);
    if (p == kMissing) continue;
    const double term = profile_cell_loglik_marginal(p, truth[l], g.psi[l], zeta(g, l, truth[l], p));
    if (term <= kLogZero) return kLogZero;
    total += term;
  }
  return total;
}

double ModelContext::record_network_loglik(const ModelState& state, int record,
                                           std::span<const double> position) const {
  if (!use_network()) return 0.0;
  const int file = data_->file_of(record);
  const int offset = data_->file_offset(file);
  const auto& graph = data_->networks[file];
  const int self = record - offset;
  const double beta = state.globals.beta[file];
  double total = 0.0;
  for (int other = 0; other < graph.n_actors(); ++other) {
    if (other == self) continue;
    const auto pos = state.latent.position(state.linkage.label(offset + other));
    total += dyad_loglik(graph.has_edge(self, other), beta, distance(position, pos));
  }
  return total;
}

// --- Joint density ----------------------------------------------------------

double LogJointTerms::total() const {
  const double parts[] = {network,  profile,   w_prior,      pi_prior, theta_prior,
                          psi_prior, beta_prior, sigma2_prior, u_prior};
  double sum = 0.0;
  for (double p : parts) {
    if (p <= kLogZero) return kLogZero;
    sum += p;
  }
  return sum;
}

LogJointTerms log_joint_terms(const ModelContext& ctx, const ModelState& state) {
  const Dataset& data = ctx.data();
  const HyperParams& hyper = ctx.hyper();
  const GlobalParams& g = state.globals;
  LogJointTerms t;

  if (ctx.use_network()) t.network = network_loglik(data, state);

  for (int r = 0; r < data.total_records(); ++r) {
    const int n = state.linkage.label(r);
    for (int l = 0; l < data.n_fields(); ++l) {
      const int p = data.cell(r, l);
      if (p == kMissing) continue;
      const bool w = state.flag(r, l) != 0;
      t.w_prior += w ? std::log(g.psi[l]) : std::log1p(-g.psi[l]);
      if (!ctx.use_profiles() || t.profile <= kLogZero) continue;
      const int truth = state.latent.profile(n, l);
      const double term = w ? safe_log(ctx.zeta(g, l, truth, p)) : (p == truth ? 0.0 : kLogZero);
      t.profile = term <= kLogZero ? kLogZero : t.profile + term;
    }
  }

  for (int l = 0; l < data.n_fields(); ++l) {
    const bool is_string = ctx.is_string(l);
    const auto& pmf = is_string ? data.fields[l].empirical_freq : g.theta[l];
    for (int n = 0; n < state.latent.size(); ++n) {
      const double term = safe_log(pmf[state.latent.profile(n, l)]);
      t.pi_prior = (term <= kLogZero || t.pi_prior <= kLogZero) ? kLogZero : t.pi_prior + term;
    }
    if (!is_string) {
      const auto& alpha = hyper.alpha[l];
      double alpha_sum = 0.0;
      double lp = 0.0;
      for (std::size_t m = 0; m < alpha.size(); ++m) {
        alpha_sum += alpha[m];
        lp += (alpha[m] - 1.0) * std::log(g.theta[l][m]) - std::lgamma(alpha[m]);
      }
      t.theta_prior += lp + std::lgamma(alpha_sum);
    }
    t.psi_prior += log_beta_pdf(g.psi[l], hyper.a_psi[l], hyper.b_psi[l]);
  }

  for (int j = 0; j < data.n_files(); ++j) t.beta_prior += log_normal_pdf(g.beta[j], hyper.omega[j]);

  const double s2 = g.sigma2;
  t.sigma2_prior = hyper.a_sigma * std::log(hyper.b_sigma) - std::lgamma(hyper.a_sigma) -
                   (hyper.a_sigma + 1.0) * std::log(s2) - hyper.b_sigma / s2;

  const double sd = std::sqrt(s2);
  for (int n = 0; n < state.latent.size(); ++n) {
    for (double x : state.latent.position(n)) t.u_prior += log_normal_pdf(x, sd);
  }
  return t;
}

double log_joint(const Dataset& data, const ModelState& state, const HyperParams& hyper) {
  const ModelContext ctx(data, hyper);
  return log_joint_terms(ctx, state).total();
}

// --- Hyperparameters --------------------------------------------------------

double sigma2_prior_mean(int total_records, int K) {
  const double root = std::sqrt(static_cast<double>(total_records));
  if (root <= 2.0) throw Error("sigma^2 elicitation needs more than 4 records");
  if (K < 1) throw Error("latent dimension must be at least 1");
  const double half = 0.5 * K;
  const double ball = std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0);
  return root / (root - 2.0) * ball * std::pow(static_cast<double>(total_records), 2.0 / K);
}

InverseGammaParams elicit_sigma_prior(int total_records, int K, double cv) {
  if (!(cv > 0.0)) throw Error("cv_sigma must be positive");
  const double mean = sigma2_prior_mean(total_records, K);
  const double shape = 2.0 + 1.0 / (cv * cv);
  return {shape, mean * (shape - 1.0)};
}

HyperParams default_hyperparams(const Dataset& data, int K) {
  HyperParams h;
  h.K = K;
  h.omega.assign(data.n_files(), 100.0);
  const auto ig = elicit_sigma_prior(data.total_records(), K, h.cv_sigma);
  h.a_sigma = ig.shape;
  h.b_sigma = ig.scale;
  for (const auto& field : data.fields) {
    const bool is_string = field.kind == FieldKind::StringValued;
    h.alpha_mode.push_back(is_string ? AlphaMode::Empirical : AlphaMode::Ones);
    h.alpha.push_back(is_string ? field.empirical_freq : std::vector<double>(field.n_levels(), 1.0));
    h.a_psi.push_back(1.0);
    h.b_psi.push_back(99.0);
  }
  h.lambda = 1.0;
  return h;
}

void HyperParams::validate(const Dataset& data) const {
  if (static_cast<int>(omega.size()) != data.n_files()) throw Error("omega: one value per file expected");
  for (double o : omega) {
    if (!(o > 0.0)) throw Error("omega must be positive");
  }
  if (!(a_sigma > 0.0 && b_sigma > 0.0)) throw Error("a_sigma and b_sigma must be positive");
  if (!(lambda > 0.0)) throw Error("lambda must be positive");
  if (K < 1) throw Error("K must be at least 1");
  const auto n_fields = static_cast<std::size_t>(data.n_fields());
  if (alpha.size() != n_fields || a_psi.size() != n_fields || b_psi.size() != n_fields) {
    throw Error("per-field hyperparameters do not match the field count");
  }
  for (std::size_t l = 0; l < n_fields; ++l) {
    if (static_cast<int>(alpha[l].size()) != data.fields[l].n_levels()) {
      throw Error("alpha for field '" + data.fields[l].name + "' has the wrong length");
    }
    for (double a : alpha[l]) {
      if (!(a > 0.0)) throw Error("alpha entries must be positive");
    }
    if (!(a_psi[l] > 0.0 && b_psi[l] > 0.0)) throw Error("a_psi and b_psi must be positive");
  }
}

HyperParams parse_hyperparams(const std::string& text, const Dataset& data) {
  const auto entries = csv::parse_key_values(text);
  int K = 2;
  for (const auto& [key, value] : entries) {
    if (key == "K") K = static_cast<int>(csv::parse_integer(value, key));
  }
  HyperParams h = default_hyperparams(data, K);
  bool have_a = false, have_b = false;
  const auto per_field = [&](const std::string& key, const std::string& value, std::vector<double>& out) {
    const auto items = csv::split_list(value);
    if (items.size() == 1) {
      std::fill(out.begin(), out.end(), csv::parse_double(items[0], key));
    } else if (items.size() == out.size()) {
      for (std::size_t i = 0; i < items.size(); ++i) out[i] = csv::parse_double(items[i], key);
    } else {
      throw Error("'" + key + "': expected 1 or " + std::to_string(out.size()) + " values");
    }
  };
  for (const auto& [key, value] : entries) {
    if (key == "K") continue;
    if (key == "omega") {
      per_field(key, value, h.omega);
    } else if (key == "a_sigma") {
      h.a_sigma = csv::parse_double(value, key);
      have_a = true;
    } else if (key == "b_sigma") {
      h.b_sigma = csv::parse_double(value, key);
      have_b = true;
    } else if (key == "cv_sigma") {
      h.cv_sigma = csv::parse_double(value, key);
    } else if (key == "lambda") {
      h.lambda = csv::parse_double(value, key);
    } else if (key == "a_psi") {
      per_field(key, value, h.a_psi);
    } else if (key == "b_psi") {
      per_field(key, value, h.b_psi);
    } else if (key.rfind("alpha_mode.", 0) == 0) {
      const std::string name = key.substr(11);
      int field = -1;
      for (int l = 0; l < data.n_fields(); ++l) {
        if (data.fields[l].name == name) field = l;
      }
      if (field < 0) throw Error("'" + key + "': no field named '" + name + "'");
      if (value == "ones") {
        h.alpha_mode[field] = AlphaMode::Ones;
        h.alpha[field].assign(data.fields[field].n_levels(), 1.0);
      } else if (value == "empirical") {
        h.alpha_mode[field] = AlphaMode::Empirical;
        h.alpha[field] = data.fields[field].empirical_freq;
      } else {
        throw Error("'" + key + "': expected ones or empirical");
      }
    } else {
      throw Error("unknown hyperparameter key '" + key + "'");
    }
  }
  if (have_a != have_b) throw Error("give both a_sigma and b_sigma, or neither");
  if (!have_a) {
    const auto ig = elicit_sigma_prior(data.total_records(), h.K, h.cv_sigma);
    h.a_sigma = ig.shape;
    h.b_sigma = ig.scale;
  }
  h.validate(data);
  return h;
}

std::string format_hyperparams(const HyperParams& h, const Dataset& data) {
  std::ostringstream out;
  out.precision(17);
  const auto list = [&](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::ostringstream item;
      item.precision(17);
      item << v[i];
      s += (i ? ", " : "") + item.str();
    }
    return s;
  };
  out << "K = " << h.K << '\n';
  out << "omega = " << list(h.omega) << '\n';
  out << "a_sigma = " << h.a_sigma << '\n';
  out << "b_sigma = " << h.b_sigma << '\n';
  out << "cv_sigma = " << h.cv_sigma << '\n';
  out << "lambda = " << h.lambda << '\n';
  if (!h.a_psi.empty()) {
    out << "a_psi = " << list(h.a_psi) << '\n';
    out << "b_psi = " << list(h.b_psi) << '\n';
  }
  for (int l = 0; l < data.n_fields(); ++l) {
    out << "alpha_mode." << data.fields[l].name << " = "
        << (h.alpha_mode[l] == AlphaMode::Ones ? "ones" : "empirical") << '\n';
  }
  return out.str();
}

}  // namespace bnrl
