#include "bnrl/pointwise.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace bnrl {

PointwiseStats::PointwiseStats(int network_units, int profile_units)
    : network_units_(network_units),
      mean_(network_units + profile_units, 0.0),
      m2_(network_units + profile_units, 0.0),
      lse_max_(network_units + profile_units, -std::numeric_limits<double>::infinity()),
      lse_sum_(network_units + profile_units, 0.0) {}

void PointwiseStats::add(std::span<const double> row) {
  if (row.size() != mean_.size()) throw std::invalid_argument("pointwise row length changed");
  ++samples_;
  const double n = samples_;
  for (std::size_t u = 0; u < row.size(); ++u) {
    const double x = row[u];
    const double delta = x - mean_[u];
    mean_[u] += delta / n;
    m2_[u] += delta * (x - mean_[u]);
    if (x > lse_max_[u]) {
      lse_sum_[u] = lse_sum_[u] * std::exp(lse_max_[u] - x) + 1.0;
      lse_max_[u] = x;
    } else {
      lse_sum_[u] += std::exp(x - lse_max_[u]);
    }
  }
}

double PointwiseStats::variance(int unit) const {
  return samples_ > 1 ? m2_[unit] / (samples_ - 1.0) : 0.0;
}

double PointwiseStats::log_mean_exp(int unit) const {
  return lse_max_[unit] + std::log(lse_sum_[unit]) - std::log(static_cast<double>(samples_));
}

PointwiseStats PointwiseStats::from_rows(const std::vector<std::vector<double>>& rows, int network_units) {
  if (rows.empty()) return {};
  PointwiseStats out(network_units, static_cast<int>(rows.front().size()) - network_units);
  for (const auto& row : rows) out.add(row);
  return out;
}

}  // namespace bnrl
