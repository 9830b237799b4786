#pragma once

// Small builders and statistical helpers shared by the unit tests and the
// acceptance runner.

#include <unistd.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "bnrl/data.hpp"
#include "bnrl/model.hpp"

namespace bnrl::testing {

using Rows = std::vector<std::vector<std::string>>;

/// Dataset from per-file rows of field values. Record ids are r1, r2, ...
inline Dataset make_dataset(const std::vector<std::string>& field_names, const std::vector<Rows>& files,
                            const std::map<std::string, FieldKind>& kinds = {}) {
  std::vector<RawProfileTable> raw;
  for (const auto& rows : files) {
    RawProfileTable t;
    for (std::size_t i = 0; i < rows.size(); ++i) t.record_ids.push_back("r" + std::to_string(i + 1));
    t.rows = rows;
    raw.push_back(std::move(t));
  }
  Dataset data;
  build_profiles(field_names, kinds, raw, data.fields, data.profiles);
  data.finalize();
  return data;
}

/// Adds one network per file; `edges[j]` holds 0-based pairs.
inline void attach_networks(Dataset& data, const std::vector<std::vector<std::pair<int, int>>>& edges) {
  data.networks.clear();
  for (int j = 0; j < data.n_files(); ++j) {
    Adjacency g(j, data.file_size(j));
    for (auto [a, b] : edges[j]) g.add_edge(a, b);
    data.networks.push_back(std::move(g));
  }
}

inline RecordPairs pairs_of(std::initializer_list<std::array<int, 4>> list) {
  RecordPairs out;
  for (const auto& p : list) out.pairs.push_back({{p[0], p[1]}, {p[2], p[3]}});
  return out;
}

/// Every valid singleton / cross-file-pair partition of a two-file dataset,
/// as 0-based labels in global record order.
inline std::vector<std::vector<int>> enumerate_two_file_partitions(int n0, int n1) {
  std::vector<std::vector<int>> out;
  std::vector<int> match(n0, -1);  // partner in file 1 per file-0 record
  std::vector<bool> used(n1, false);
  const auto emit = [&] {
    std::vector<int> labels(n0 + n1, -1);
    int next = 0;
    for (int a = 0; a < n0; ++a) {
      labels[a] = next;
      if (match[a] >= 0) labels[n0 + match[a]] = next;
      ++next;
    }
    for (int b = 0; b < n1; ++b) {
      if (labels[n0 + b] < 0) labels[n0 + b] = next++;
    }
    out.push_back(labels);
  };
  const auto rec = [&](auto&& self, int a) -> void {
    if (a == n0) {
      emit();
      return;
    }
    match[a] = -1;
    self(self, a + 1);
    for (int b = 0; b < n1; ++b) {
      if (used[b]) continue;
      used[b] = true;
      match[a] = b;
      self(self, a + 1);
      used[b] = false;
      match[a] = -1;
    }
  };
  rec(rec, 0);
  return out;
}

/// Exact posterior match probabilities for a network-free dataset with one
/// categorical field and fixed (psi, theta), by direct summation over every
/// valid partition. Latent truths and flags are summed out per cluster.
/// Returns P(record a of file 0 matches record b of file 1), n0 x n1.
inline std::vector<std::vector<double>> exact_match_probabilities(const Dataset& data, double psi,
                                                                  const std::vector<double>& theta) {
  const int n0 = data.file_size(0), n1 = data.file_size(1);
  const auto partitions = enumerate_two_file_partitions(n0, n1);
  std::vector<double> weight;
  for (const auto& labels : partitions) {
    const int n_clusters = *std::max_element(labels.begin(), labels.end()) + 1;
    double w = 1.0;
    for (int c = 0; c < n_clusters; ++c) {
      double cluster = 0.0;
      for (std::size_t truth = 0; truth < theta.size(); ++truth) {
        double term = theta[truth];
        for (int r = 0; r < n0 + n1; ++r) {
          if (labels[r] != c) continue;
          const int p = data.cell(r, 0);
          term *= (1.0 - psi) * (p == static_cast<int>(truth) ? 1.0 : 0.0) + psi * theta[p];
        }
        cluster += term;
      }
      w *= cluster;
    }
    weight.push_back(w);
  }
  const double total = std::accumulate(weight.begin(), weight.end(), 0.0);
  std::vector<std::vector<double>> out(n0, std::vector<double>(n1, 0.0));
  for (std::size_t k = 0; k < partitions.size(); ++k) {
    for (int a = 0; a < n0; ++a) {
      for (int b = 0; b < n1; ++b) {
        if (partitions[k][a] == partitions[k][n0 + b]) out[a][b] += weight[k] / total;
      }
    }
  }
  return out;
}

/// Asymptotic Kolmogorov tail P(K > lambda).
inline double kolmogorov_tail(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

/// One-sample Kolmogorov-Smirnov p-value (Stephens' finite-n correction).
template <typename Cdf>
double ks_p_value(std::vector<double> x, Cdf cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  const double sn = std::sqrt(n);
  return kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d);
}

struct MeanAndError {
  double mean = 0.0;
  double se = 0.0;
};

/// Mean with a batch-means standard error, robust to autocorrelation.
inline MeanAndError batch_means(const std::vector<double>& x, int n_batches = 50) {
  MeanAndError out;
  const std::size_t n = x.size();
  out.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const std::size_t size = n / n_batches;
  std::vector<double> means;
  for (int b = 0; b < n_batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * size; i < (b + 1) * size; ++i) s += x[i];
    means.push_back(s / size);
  }
  double ss = 0.0;
  const double mm = std::accumulate(means.begin(), means.end(), 0.0) / n_batches;
  for (double m : means) ss += (m - mm) * (m - mm);
  out.se = std::sqrt(ss / (n_batches - 1.0) / n_batches);
  return out;
}

/// Scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("bnrl_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string path() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace bnrl::testing
