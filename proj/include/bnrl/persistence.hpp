#pragma once

#include <string>
#include <vector>

#include "bnrl/sampler.hpp"

namespace bnrl {

/// One line per sample: space-separated 1-based cluster labels in global
/// record order (file 1 records first).
void write_linkage_samples(const std::string& path, const std::vector<std::vector<int>>& samples);
/// Returns 0-based labels.
std::vector<std::vector<int>> read_linkage_samples(const std::string& path);

void write_traces_csv(const std::string& path, const ScalarTraces& traces);

/// One row per sample, one column per pointwise unit; header names the unit
/// kind (`dyad_<n>` / `cell_<n>`).
void write_pointwise_csv(const std::string& path, const std::vector<std::vector<double>>& rows,
                         int network_units);

}  // namespace bnrl
