#include "bnrl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "bnrl/csv.hpp"

namespace bnrl {

std::string to_string(FieldKind kind) {
  return kind == FieldKind::Categorical ? "categorical" : "string";
}

FieldKind field_kind_from_string(std::string_view text) {
  if (text == "categorical") return FieldKind::Categorical;
  if (text == "string") return FieldKind::StringValued;
  throw Error("unknown field kind '" + std::string(text) + "' (expected categorical or string)");
}

int FieldSpec::level_of(std::string_view value) const {
  const auto it = std::lower_bound(levels.begin(), levels.end(), value);
  if (it == levels.end() || *it != value) return kMissing;
  return static_cast<int>(it - levels.begin());
}

// --- Adjacency --------------------------------------------------------------

Adjacency::Adjacency(int file_id, int n_actors)
    : file_id_(file_id),
      n_actors_(n_actors),
      dense_(static_cast<std::size_t>(n_actors) * n_actors, 0),
      neighbors_(n_actors) {
  if (n_actors < 0) throw LoadError("negative actor count");
}

void Adjacency::add_edge(int a, int b) {
  if (a < 0 || b < 0 || a >= n_actors_ || b >= n_actors_) {
    throw LoadError("edge (" + std::to_string(a + 1) + ", " + std::to_string(b + 1) +
                    ") out of range for " + std::to_string(n_actors_) + " actors");
  }
  if (a == b) throw LoadError("self-loop on actor " + std::to_string(a + 1));
  if (has_edge(a, b)) return;
  if (a > b) std::swap(a, b);
  dense_[static_cast<std::size_t>(a) * n_actors_ + b] = 1;
  dense_[static_cast<std::size_t>(b) * n_actors_ + a] = 1;
  neighbors_[a].push_back(b);
  neighbors_[b].push_back(a);
  edges_.emplace_back(a, b);
}

bool operator==(const Adjacency& x, const Adjacency& y) {
  return x.file_id_ == y.file_id_ && x.n_actors_ == y.n_actors_ && x.dense_ == y.dense_;
}

// --- Dataset ----------------------------------------------------------------

void Dataset::finalize() {
  const std::size_t n_files = !profiles.empty() ? profiles.size() : networks.size();
  if (!profiles.empty() && !networks.empty() && profiles.size() != networks.size()) {
    throw LoadError("profile and network file counts differ");
  }
  file_sizes_.assign(n_files, 0);
  for (std::size_t j = 0; j < n_files; ++j) {
    const int size = !profiles.empty() ? profiles[j].n_records() : networks[j].n_actors();
    if (!networks.empty() && networks[j].n_actors() != size) {
      throw LoadError("file " + std::to_string(j + 1) + ": network has " +
                      std::to_string(networks[j].n_actors()) + " actors but profile table has " +
                      std::to_string(size) + " records");
    }
    if (!profiles.empty() && profiles[j].n_fields != n_fields()) {
      throw LoadError("file " + std::to_string(j + 1) + ": field count mismatch");
    }
    file_sizes_[j] = size;
  }
  offsets_.assign(n_files + 1, 0);
  for (std::size_t j = 0; j < n_files; ++j) offsets_[j + 1] = offsets_[j] + file_sizes_[j];
  file_of_.assign(total_records(), 0);
  for (std::size_t j = 0; j < n_files; ++j) {
    std::fill(file_of_.begin() + offsets_[j], file_of_.begin() + offsets_[j + 1], static_cast<int>(j));
  }
}

RecordRef Dataset::ref_of(int global) const {
  const int file = file_of_[global];
  return {file, global - offsets_[file]};
}

bool Dataset::contains(RecordRef ref) const {
  return ref.file >= 0 && ref.file < n_files() && ref.index >= 0 && ref.index < file_sizes_[ref.file];
}

int Dataset::cell(int global, int field) const {
  const RecordRef ref = ref_of(global);
  return profiles[ref.file].at(ref.index, field);
}

int Dataset::observed_cells(int field) const {
  int count = 0;
  for (const auto& table : profiles) {
    for (int i = 0; i < table.n_records(); ++i) count += table.at(i, field) != kMissing;
  }
  return count;
}

std::int64_t Dataset::cross_file_pairs() const {
  std::int64_t total = 0;
  for (int a = 0; a < n_files(); ++a) {
    for (int b = a + 1; b < n_files(); ++b) total += std::int64_t{file_sizes_[a]} * file_sizes_[b];
  }
  return total;
}

// --- Profiles ---------------------------------------------------------------

namespace {

bool is_missing_text(const std::string& value) { return value.empty() || value == "NA"; }

int parse_int(std::string_view text, const std::string& context) {
  const std::string trimmed = csv::trim(text);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), value);
  if (ec != std::errc() || ptr != trimmed.data() + trimmed.size()) {
    throw LoadError(context + ": expected an integer, got '" + trimmed + "'");
  }
  return value;
}

}  // namespace

void build_profiles(const std::vector<std::string>& field_names,
                    const std::map<std::string, FieldKind>& field_kinds,
                    const std::vector<RawProfileTable>& files,
                    std::vector<FieldSpec>& fields_out,
                    std::vector<ProfileTable>& tables_out) {
  for (const auto& [name, kind] : field_kinds) {
    if (std::find(field_names.begin(), field_names.end(), name) == field_names.end()) {
      throw LoadError("unknown field name '" + name + "'");
    }
  }
  const int n_fields = static_cast<int>(field_names.size());
  fields_out.assign(n_fields, {});
  for (int l = 0; l < n_fields; ++l) {
    FieldSpec& spec = fields_out[l];
    spec.name = field_names[l];
    const auto it = field_kinds.find(spec.name);
    spec.kind = it == field_kinds.end() ? FieldKind::Categorical : it->second;

    std::map<std::string, std::size_t> counts;
    std::size_t observed = 0;
    for (const auto& file : files) {
      for (const auto& row : file.rows) {
        if (is_missing_text(row[l])) continue;
        ++counts[row[l]];
        ++observed;
      }
    }
    if (observed == 0) throw LoadError("field '" + spec.name + "' has no observed values");
    // std::map iterates in lexicographic order.
    for (const auto& [value, count] : counts) {
      spec.levels.push_back(value);
      spec.empirical_freq.push_back(static_cast<double>(count) / static_cast<double>(observed));
    }
  }

  tables_out.clear();
  for (std::size_t j = 0; j < files.size(); ++j) {
    const auto& file = files[j];
    ProfileTable table;
    table.file_id = static_cast<int>(j);
    table.n_fields = n_fields;
    table.record_ids = file.record_ids;
    table.cells.reserve(file.rows.size() * n_fields);
    for (const auto& row : file.rows) {
      if (static_cast<int>(row.size()) != n_fields) throw LoadError("ragged profile row");
      for (int l = 0; l < n_fields; ++l) {
        table.cells.push_back(is_missing_text(row[l]) ? kMissing : fields_out[l].level_of(row[l]));
      }
    }
    tables_out.push_back(std::move(table));
  }
}

void load_profiles(const std::vector<std::string>& paths,
                   const std::map<std::string, FieldKind>& field_kinds,
                   std::vector<FieldSpec>& fields_out,
                   std::vector<ProfileTable>& tables_out) {
  if (paths.empty()) throw LoadError("no profile files given");
  std::vector<std::string> header;
  std::vector<RawProfileTable> raw(paths.size());
  for (std::size_t j = 0; j < paths.size(); ++j) {
    const auto rows = csv::lines(csv::read_file(paths[j]));
    if (rows.empty()) throw LoadError("'" + paths[j] + "': empty file");
    auto this_header = csv::split_line(rows[0]);
    for (auto& h : this_header) h = csv::trim(h);
    if (this_header.size() < 1) throw LoadError("'" + paths[j] + "': missing header");
    this_header.erase(this_header.begin());
    if (j == 0) {
      header = this_header;
    } else if (this_header != header) {
      throw LoadError("'" + paths[j] + "': header differs from '" + paths[0] + "'");
    }
    if (rows.size() < 2) throw LoadError("'" + paths[j] + "': no records");
    for (std::size_t r = 1; r < rows.size(); ++r) {
      auto cells = csv::split_line(rows[r]);
      if (cells.size() != header.size() + 1) {
        throw LoadError("'" + paths[j] + "' line " + std::to_string(r + 1) + ": expected " +
                        std::to_string(header.size() + 1) + " columns, found " +
                        std::to_string(cells.size()));
      }
      raw[j].record_ids.push_back(cells[0]);
      raw[j].rows.emplace_back(cells.begin() + 1, cells.end());
    }
  }
  build_profiles(header, field_kinds, raw, fields_out, tables_out);
}

void write_profiles(const std::string& path, const ProfileTable& table,
                    const std::vector<FieldSpec>& fields) {
  std::ostringstream out;
  out << "record_id";
  for (const auto& f : fields) out << ',' << csv::escape(f.name);
  out << '\n';
  for (int i = 0; i < table.n_records(); ++i) {
    out << csv::escape(table.record_ids[i]);
    for (int l = 0; l < table.n_fields; ++l) {
      const int level = table.at(i, l);
      out << ',';
      if (level != kMissing) out << csv::escape(fields[l].levels[level]);
    }
    out << '\n';
  }
  csv::write_file_atomic(path, out.str());
}

// --- Networks ---------------------------------------------------------------

Adjacency parse_network(std::string_view text, int n_actors, int file_id) {
  Adjacency graph(file_id, n_actors);
  int line_no = 0;
  for (const auto& raw_line : csv::lines(text)) {
    ++line_no;
    std::string line = csv::trim(raw_line);
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream in(line);
    std::string a, b, extra;
    if (!(in >> a >> b) || (in >> extra)) {
      throw LoadError("edge list line " + std::to_string(line_no) + ": expected two indices");
    }
    const std::string ctx = "edge list line " + std::to_string(line_no);
    graph.add_edge(parse_int(a, ctx) - 1, parse_int(b, ctx) - 1);
  }
  return graph;
}

Adjacency load_network(const std::string& path, int n_actors, int file_id) {
  try {
    return parse_network(csv::read_file(path), n_actors, file_id);
  } catch (const LoadError& e) {
    throw LoadError("'" + path + "': " + e.what());
  }
}

void write_network(const std::string& path, const Adjacency& graph) {
  std::ostringstream out;
  for (const auto& [a, b] : graph.edges()) out << a + 1 << ' ' << b + 1 << '\n';
  csv::write_file_atomic(path, out.str());
}

// --- Record pairs -----------------------------------------------------------

RecordPairs load_record_pairs(const std::string& path) {
  RecordPairs out;
  const auto rows = csv::lines(csv::read_file(path));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string line = csv::trim(rows[r]);
    if (line.empty()) continue;
    const auto cells = csv::split_line(line);
    if (r == 0 && !cells.empty() && csv::trim(cells[0]) == "file_a") continue;
    const std::string ctx = "'" + path + "' line " + std::to_string(r + 1);
    if (cells.size() != 4) throw LoadError(ctx + ": expected 4 columns");
    RecordRef a{parse_int(cells[0], ctx) - 1, parse_int(cells[1], ctx) - 1};
    RecordRef b{parse_int(cells[2], ctx) - 1, parse_int(cells[3], ctx) - 1};
    if (b < a) std::swap(a, b);
    out.pairs.emplace_back(a, b);
  }
  return out;
}

void write_record_pairs(const std::string& path, const RecordPairs& pairs) {
  std::ostringstream out;
  out << "file_a,index_a,file_b,index_b\n";
  for (const auto& [a, b] : pairs.pairs) {
    out << a.file + 1 << ',' << a.index + 1 << ',' << b.file + 1 << ',' << b.index + 1 << '\n';
  }
  csv::write_file_atomic(path, out.str());
}

void validate_record_pairs(const RecordPairs& pairs, const std::vector<int>& file_sizes) {
  std::set<RecordRef> seen;
  const auto check = [&](const RecordRef& ref) {
    if (ref.file < 0 || ref.file >= static_cast<int>(file_sizes.size()) || ref.index < 0 ||
        ref.index >= file_sizes[ref.file]) {
      throw Error("record (" + std::to_string(ref.file + 1) + ", " + std::to_string(ref.index + 1) +
                  ") is outside the dataset");
    }
    if (!seen.insert(ref).second) {
      throw Error("record (" + std::to_string(ref.file + 1) + ", " + std::to_string(ref.index + 1) +
                  ") appears in more than one pair");
    }
  };
  for (const auto& [a, b] : pairs.pairs) {
    check(a);
    check(b);
    if (a.file == b.file) throw Error("pair joins two records of the same file");
  }
}

Dataset load_dataset(const std::vector<std::string>& profile_paths,
                     const std::vector<std::string>& network_paths,
                     const std::map<std::string, FieldKind>& field_kinds) {
  Dataset data;
  load_profiles(profile_paths, field_kinds, data.fields, data.profiles);
  if (!network_paths.empty()) {
    if (network_paths.size() != profile_paths.size()) {
      throw LoadError("expected one network file per profile file");
    }
    for (std::size_t j = 0; j < network_paths.size(); ++j) {
      data.networks.push_back(
          load_network(network_paths[j], data.profiles[j].n_records(), static_cast<int>(j)));
    }
  }
  data.finalize();
  return data;
}

// --- Summary statistics -----------------------------------------------------

NetworkSummary summary_statistics(const Adjacency& graph) {
  const int n = graph.n_actors();
  if (n < 2) throw Error("summary statistics need at least two actors");
  NetworkSummary out;
  const double m = static_cast<double>(graph.n_edges());
  out.density = m / (0.5 * n * (n - 1.0));

  double triplets = 0.0;
  for (int v = 0; v < n; ++v) {
    const double d = graph.degree(v);
    triplets += 0.5 * d * (d - 1.0);
  }
  double triangles = 0.0;
  for (const auto& [a, b] : graph.edges()) {
    for (int c : graph.neighbors(a)) {
      if (c > b && graph.has_edge(b, c)) triangles += 1.0;
    }
  }
  // Each triangle {a<b<c} is counted once, from its lowest edge (a, b).
  if (triplets > 0.0) out.clustering = 3.0 * triangles / triplets;

  if (m > 0.0) {
    double prod = 0.0, sum = 0.0, sq = 0.0;
    for (const auto& [a, b] : graph.edges()) {
      const double da = graph.degree(a), db = graph.degree(b);
      prod += da * db;
      sum += 0.5 * (da + db);
      sq += 0.5 * (da * da + db * db);
    }
    const double mean = sum / m;
    const double num = prod / m - mean * mean;
    const double den = sq / m - mean * mean;
    if (std::abs(den) > 1e-12) out.assortativity = num / den;
  }
  return out;
}

std::string file_digest(const std::string& path) {
  const std::string bytes = csv::read_file(path);
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace bnrl
