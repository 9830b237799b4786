#include "bnrl/persistence.hpp"

#include <sstream>

#include "bnrl/csv.hpp"

namespace bnrl {

void write_linkage_samples(const std::string& path, const std::vector<std::vector<int>>& samples) {
  std::ostringstream out;
  for (const auto& labels : samples) {
    for (std::size_t i = 0; i < labels.size(); ++i) out << (i ? " " : "") << labels[i] + 1;
    out << '\n';
  }
  csv::write_file_atomic(path, out.str());
}

std::vector<std::vector<int>> read_linkage_samples(const std::string& path) {
  std::vector<std::vector<int>> out;
  for (const auto& line : csv::lines(csv::read_file(path))) {
    if (csv::trim(line).empty()) continue;
    std::istringstream in(line);
    std::vector<int> labels;
    int label = 0;
    while (in >> label) {
      if (label < 1) throw LoadError("'" + path + "': labels are 1-based");
      labels.push_back(label - 1);
    }
    if (!in.eof()) throw LoadError("'" + path + "': non-integer label");
    if (!out.empty() && labels.size() != out.front().size()) {
      throw LoadError("'" + path + "': samples have different lengths");
    }
    out.push_back(std::move(labels));
  }
  return out;
}

void write_traces_csv(const std::string& path, const ScalarTraces& traces) {
  std::ostringstream out;
  out.precision(17);
  out << "sample";
  for (const auto& name : traces.names) out << ',' << csv::escape(name);
  out << '\n';
  for (std::size_t s = 0; s < traces.rows.size(); ++s) {
    out << s + 1;
    for (double v : traces.rows[s]) out << ',' << v;
    out << '\n';
  }
  csv::write_file_atomic(path, out.str());
}

void write_pointwise_csv(const std::string& path, const std::vector<std::vector<double>>& rows,
                         int network_units) {
  std::ostringstream out;
  out.precision(17);
  if (!rows.empty()) {
    const int units = static_cast<int>(rows.front().size());
    for (int u = 0; u < units; ++u) {
      out << (u ? "," : "") << (u < network_units ? "dyad_" + std::to_string(u + 1)
                                                  : "cell_" + std::to_string(u - network_units + 1));
    }
    out << '\n';
  }
  for (const auto& row : rows) {
    for (std::size_t u = 0; u < row.size(); ++u) out << (u ? "," : "") << row[u];
    out << '\n';
  }
  csv::write_file_atomic(path, out.str());
}

}  // namespace bnrl
