#include "bnrl/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>

#include "bnrl/csv.hpp"
#include "bnrl/model.hpp"
#include "bnrl/random.hpp"

namespace bnrl {
namespace {

double per_index(const std::vector<double>& values, std::size_t i) { return values.size() == 1 ? values[0] : values[i]; }

std::string string_level(Rng& rng) {
  static constexpr char kAlphabet[] = "abcdefghij";
  const int len = 5 + rng.uniform_int(4);
  std::string s;
  for (int c = 0; c < len; ++c) s.push_back(kAlphabet[rng.uniform_int(10)]);
  return s;
}

// Generator-side field: full support and uniform weights.
FieldSpec support_for(const SyntheticField& f, Rng& rng) {
  FieldSpec spec;
  spec.name = f.name;
  spec.kind = f.kind;
  std::set<std::string> seen;
  if (f.kind == FieldKind::Categorical) {
    const int width = static_cast<int>(std::to_string(f.n_levels).size());
    for (int m = 1; m <= f.n_levels; ++m) {
      std::string digits = std::to_string(m);
      seen.insert(f.name + "_" + std::string(width - digits.size(), '0') + digits);
    }
  } else {
    while (static_cast<int>(seen.size()) < f.n_levels) seen.insert(string_level(rng));
  }
  spec.levels.assign(seen.begin(), seen.end());
  spec.empirical_freq.assign(spec.levels.size(), 1.0 / spec.levels.size());
  return spec;
}

// Uniform draw of a singleton/pair partition with exactly `pairs` cross-file
// pairs. Returns partner per global record, -1 for singletons.
std::vector<int> draw_pairs(const std::vector<int>& sizes, int pairs, Rng& rng) {
  const int total = std::accumulate(sizes.begin(), sizes.end(), 0);
  std::vector<int> file_of;
  for (int j = 0; j < static_cast<int>(sizes.size()); ++j) file_of.insert(file_of.end(), sizes[j], j);
  std::vector<int> partner(total, -1);
  if (pairs == 0) return partner;

  std::vector<int> records(total);
  std::iota(records.begin(), records.end(), 0);
  if (sizes.size() == 2) {
    // Choose `pairs` records in each file and a random bijection.
    std::vector<int> a(records.begin(), records.begin() + sizes[0]);
    std::vector<int> b(records.begin() + sizes[0], records.end());
    std::shuffle(a.begin(), a.end(), rng.engine());
    std::shuffle(b.begin(), b.end(), rng.engine());
    for (int p = 0; p < pairs; ++p) {
      partner[a[p]] = b[p];
      partner[b[p]] = a[p];
    }
    return partner;
  }
  // Random subset of 2P records, random perfect matching, reject same-file pairs.
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    std::shuffle(records.begin(), records.end(), rng.engine());
    bool ok = true;
    for (int p = 0; p < pairs && ok; ++p) ok = file_of[records[2 * p]] != file_of[records[2 * p + 1]];
    if (!ok) continue;
    for (int p = 0; p < pairs; ++p) {
      partner[records[2 * p]] = records[2 * p + 1];
      partner[records[2 * p + 1]] = records[2 * p];
    }
    return partner;
  }
  throw Error("could not draw a linkage with the requested number of pairs");
}

}  // namespace

int SyntheticSpec::total_records() const { return std::accumulate(file_sizes.begin(), file_sizes.end(), 0); }

void SyntheticSpec::validate() const {
  if (file_sizes.size() < 2) throw Error("synthetic data needs at least two files");
  for (int s : file_sizes)
    if (s < 1) throw Error("file sizes must be positive");
  const int total = total_records();
  const int largest = *std::max_element(file_sizes.begin(), file_sizes.end());
  if (n_pairs < 0 || n_pairs > total / 2 || n_pairs > total - largest)
    throw Error("infeasible number of true pairs: " + std::to_string(n_pairs));
  if (fields.empty()) throw Error("synthetic data needs at least one field");
  for (const auto& f : fields) {
    if (f.n_levels < 1) throw Error("field '" + f.name + "' needs at least one level");
    if (distinct_truths && f.n_levels < population_size())
      throw Error("field '" + f.name + "' has fewer levels than latent individuals");
  }
  if (K < 1) throw Error("K must be at least 1");
  if (beta.size() != 1 && beta.size() != file_sizes.size()) throw Error("beta needs one value or one per file");
  if (psi.size() != 1 && psi.size() != fields.size()) throw Error("psi needs one value or one per field");
  for (double p : psi)
    if (p < 0.0 || p > 1.0) throw Error("psi must lie in [0, 1]");
  if (!(sigma2 > 0.0)) throw Error("sigma2 must be positive");
  if (lambda < 0.0) throw Error("lambda must be non-negative");
}

int pairs_for_match_fraction(const std::vector<int>& file_sizes, double fraction) {
  if (fraction < 0.0 || fraction > 1.0) throw Error("match fraction must lie in [0, 1]");
  const int total = std::accumulate(file_sizes.begin(), file_sizes.end(), 0);
  return static_cast<int>(std::lround(fraction * total / 2.0));
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const int J = static_cast<int>(spec.file_sizes.size());
  const int L = static_cast<int>(spec.fields.size());
  const int total = spec.total_records();
  const int N = spec.population_size();

  std::vector<FieldSpec> support;
  for (const auto& f : spec.fields) support.push_back(support_for(f, rng));

  // Linkage, then latent ids numbered by first appearance in record order.
  const auto partner = draw_pairs(spec.file_sizes, spec.n_pairs, rng);
  SyntheticData out;
  out.labels.assign(total, -1);
  int next = 0;
  for (int r = 0; r < total; ++r) {
    if (out.labels[r] >= 0) continue;
    out.labels[r] = next;
    if (partner[r] >= 0) out.labels[partner[r]] = next;
    ++next;
  }

  // Truths and positions.
  std::vector<std::vector<int>> truth(N, std::vector<int>(L));
  for (int l = 0; l < L; ++l) {
    const int m = support[l].n_levels();
    if (spec.distinct_truths) {
      std::vector<int> perm(m);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng.engine());
      for (int n = 0; n < N; ++n) truth[n][l] = perm[n];
    } else {
      for (int n = 0; n < N; ++n) truth[n][l] = rng.uniform_int(m);
    }
  }
  const double sd = std::sqrt(spec.sigma2);
  out.positions.assign(N, std::vector<double>(spec.K));
  for (auto& row : out.positions)
    for (double& x : row) x = rng.normal(0.0, sd);

  // Distortions and observed profiles.
  std::vector<RawProfileTable> raw(J);
  int r = 0;
  for (int j = 0; j < J; ++j) {
    for (int i = 0; i < spec.file_sizes[j]; ++i, ++r) {
      raw[j].record_ids.push_back("f" + std::to_string(j + 1) + "_r" + std::to_string(i + 1));
      std::vector<std::string> row(L);
      for (int l = 0; l < L; ++l) {
        const int t = truth[out.labels[r]][l];
        int observed = t;
        if (rng.bernoulli(per_index(spec.psi, l))) {
          if (support[l].kind == FieldKind::StringValued) {
            const auto zeta = string_distortion_pmf(support[l], t, spec.lambda);
            observed = rng.categorical(zeta);
          } else {
            observed = rng.uniform_int(support[l].n_levels());
          }
        }
        row[l] = support[l].levels[observed];
      }
      raw[j].rows.push_back(std::move(row));
    }
  }
  std::vector<std::string> names;
  std::map<std::string, FieldKind> kinds;
  for (const auto& f : spec.fields) {
    names.push_back(f.name);
    kinds[f.name] = f.kind;
  }
  build_profiles(names, kinds, raw, out.data.fields, out.data.profiles);

  out.latent_profiles.assign(N, std::vector<std::string>(L));
  for (int n = 0; n < N; ++n)
    for (int l = 0; l < L; ++l) out.latent_profiles[n][l] = support[l].levels[truth[n][l]];

  // Networks.
  if (spec.networks) {
    int offset = 0;
    for (int j = 0; j < J; ++j) {
      Adjacency graph(j, spec.file_sizes[j]);
      const double beta = per_index(spec.beta, j);
      for (int a = 0; a < spec.file_sizes[j]; ++a) {
        for (int b = a + 1; b < spec.file_sizes[j]; ++b) {
          const double p =
              edge_probability(beta, out.positions[out.labels[offset + a]], out.positions[out.labels[offset + b]]);
          if (rng.bernoulli(p)) graph.add_edge(a, b);
        }
      }
      out.data.networks.push_back(std::move(graph));
      offset += spec.file_sizes[j];
    }
  }
  out.data.finalize();

  for (int x = 0; x < total; ++x) {
    if (partner[x] > x) out.truth.pairs.emplace_back(out.data.ref_of(x), out.data.ref_of(partner[x]));
  }
  return out;
}

SyntheticSpec parse_synthetic_spec(const std::string& text) {
  SyntheticSpec spec;
  std::optional<double> match_fraction;
  bool pairs_given = false;
  const auto doubles = [](const std::string& value, const std::string& key) {
    std::vector<double> out;
    for (const auto& item : csv::split_list(value)) out.push_back(csv::parse_double(item, key));
    if (out.empty()) throw Error("'" + key + "' needs at least one value");
    return out;
  };
  for (const auto& [key, value] : csv::parse_key_values(text)) {
    if (key == "file_sizes") {
      spec.file_sizes.clear();
      for (const auto& item : csv::split_list(value)) spec.file_sizes.push_back(static_cast<int>(csv::parse_integer(item, key)));
    } else if (key == "n_pairs") {
      spec.n_pairs = static_cast<int>(csv::parse_integer(value, key));
      pairs_given = true;
    } else if (key == "match_fraction") {
      match_fraction = csv::parse_double(value, key);
    } else if (key == "fields") {
      // name:kind:levels, ...
      spec.fields.clear();
      for (const auto& item : csv::split_list(value)) {
        std::vector<std::string> parts;
        std::stringstream ss(item);
        for (std::string part; std::getline(ss, part, ':');) parts.push_back(csv::trim(part));
        if (parts.size() != 3) throw Error("field entry '" + item + "' must be name:kind:levels");
        spec.fields.push_back(
            {parts[0], field_kind_from_string(parts[1]), static_cast<int>(csv::parse_integer(parts[2], key))});
      }
    } else if (key == "K") {
      spec.K = static_cast<int>(csv::parse_integer(value, key));
    } else if (key == "beta") {
      spec.beta = doubles(value, key);
    } else if (key == "sigma2") {
      spec.sigma2 = csv::parse_double(value, key);
    } else if (key == "psi") {
      spec.psi = doubles(value, key);
    } else if (key == "lambda") {
      spec.lambda = csv::parse_double(value, key);
    } else if (key == "distinct_truths") {
      spec.distinct_truths = value == "true" || value == "1";
      if (!spec.distinct_truths && value != "false" && value != "0") throw Error("distinct_truths must be true or false");
    } else if (key == "networks") {
      spec.networks = value == "true" || value == "1";
      if (!spec.networks && value != "false" && value != "0") throw Error("networks must be true or false");
    } else if (key == "seed") {
      spec.seed = static_cast<std::uint64_t>(csv::parse_integer(value, key));
    } else {
      throw Error("unknown synthetic key '" + key + "'");
    }
  }
  if (match_fraction) {
    if (pairs_given) throw Error("give either n_pairs or match_fraction, not both");
    spec.n_pairs = pairs_for_match_fraction(spec.file_sizes, *match_fraction);
  }
  spec.validate();
  return spec;
}

void write_synthetic(const std::string& dir, const SyntheticData& synth) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto& data = synth.data;
  std::vector<std::string> profile_names, network_names, string_fields;
  for (int j = 0; j < data.n_files(); ++j) {
    const std::string p = "profiles_" + std::to_string(j + 1) + ".csv";
    write_profiles((fs::path(dir) / p).string(), data.profiles[j], data.fields);
    profile_names.push_back(p);
    if (data.has_networks()) {
      const std::string n = "network_" + std::to_string(j + 1) + ".txt";
      write_network((fs::path(dir) / n).string(), data.networks[j]);
      network_names.push_back(n);
    }
  }
  write_record_pairs((fs::path(dir) / "truth.csv").string(), synth.truth);
  for (const auto& f : data.fields)
    if (f.kind == FieldKind::StringValued) string_fields.push_back(f.name);

  const auto join = [](const std::vector<std::string>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + xs[i];
    return s;
  };
  std::ostringstream conf;
  conf << "# dataset written by bnrl synth\n";
  conf << "profiles = " << join(profile_names) << '\n';
  if (!network_names.empty()) conf << "networks = " << join(network_names) << '\n';
  conf << "truth = truth.csv\n";
  if (!string_fields.empty()) conf << "string_fields = " << join(string_fields) << '\n';
  csv::write_file_atomic((fs::path(dir) / "dataset.conf").string(), conf.str());
}

}  // namespace bnrl
