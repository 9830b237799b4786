#pragma once

#include <span>
#include <vector>

namespace bnrl {

/// Streaming per-unit summaries of pointwise log-likelihoods over posterior
/// draws: mean, sum of squared deviations, and a running log-sum-exp. This is
/// all WAIC and DIC need, without holding the S x units matrix.
///
/// Units are ordered network dyads first, then profile cells.
class PointwiseStats {
 public:
  PointwiseStats() = default;
  PointwiseStats(int network_units, int profile_units);

  void add(std::span<const double> row);

  int samples() const { return samples_; }
  int units() const { return static_cast<int>(mean_.size()); }
  int network_units() const { return network_units_; }
  int profile_units() const { return units() - network_units_; }

  double mean(int unit) const { return mean_[unit]; }
  /// Sample variance (divisor S - 1).
  double variance(int unit) const;
  /// log( (1/S) sum_s exp(ll_s) )
  double log_mean_exp(int unit) const;

  static PointwiseStats from_rows(const std::vector<std::vector<double>>& rows, int network_units);

 private:
  int network_units_ = 0;
  int samples_ = 0;
  std::vector<double> mean_;
  std::vector<double> m2_;
  std::vector<double> lse_max_;
  std::vector<double> lse_sum_;
};

}  // namespace bnrl
