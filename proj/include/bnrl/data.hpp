#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bnrl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LoadError : public Error {
 public:
  using Error::Error;
};

/// Marker stored in a profile cell whose value was absent in the input.
inline constexpr int kMissing = -1;

enum class FieldKind { Categorical, StringValued };

std::string to_string(FieldKind kind);
FieldKind field_kind_from_string(std::string_view text);

/// One profile attribute. Levels are sorted lexicographically and
/// empirical_freq is computed over all non-missing cells pooled across files.
struct FieldSpec {
  std::string name;
  FieldKind kind = FieldKind::Categorical;
  std::vector<std::string> levels;
  std::vector<double> empirical_freq;

  int n_levels() const { return static_cast<int>(levels.size()); }
  /// Index of `value` in levels, or kMissing when absent.
  int level_of(std::string_view value) const;
};

struct ProfileTable {
  int file_id = 0;
  int n_fields = 0;
  std::vector<std::string> record_ids;
  std::vector<int> cells;  // row-major, n_records x n_fields

  int n_records() const { return static_cast<int>(record_ids.size()); }
  int at(int record, int field) const { return cells[static_cast<std::size_t>(record) * n_fields + field]; }
  int& at(int record, int field) { return cells[static_cast<std::size_t>(record) * n_fields + field]; }
};

/// Undirected simple graph over 0-based actors. Keeps both an edge list
/// and a dense membership matrix for O(1) dyad lookups.
class Adjacency {
 public:
  Adjacency() = default;
  Adjacency(int file_id, int n_actors);

  /// Adds {a, b}; duplicates are ignored. Throws LoadError on self-loops or
  /// out-of-range indices.
  void add_edge(int a, int b);

  int file_id() const { return file_id_; }
  int n_actors() const { return n_actors_; }
  std::size_t n_edges() const { return edges_.size(); }
  bool has_edge(int a, int b) const { return dense_[static_cast<std::size_t>(a) * n_actors_ + b] != 0; }
  int degree(int a) const { return static_cast<int>(neighbors_[a].size()); }
  const std::vector<int>& neighbors(int a) const { return neighbors_[a]; }

  /// Edges as (i, j) with i < j, in insertion order.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  friend bool operator==(const Adjacency& x, const Adjacency& y);

 private:
  int file_id_ = 0;
  int n_actors_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::uint8_t> dense_;
  std::vector<std::vector<int>> neighbors_;
};

struct RecordRef {
  int file = 0;
  int index = 0;

  friend auto operator<=>(const RecordRef&, const RecordRef&) = default;
};

/// A set of cross-file record pairs, each record used at most once.
/// Used for both ground truth and anchors.
struct RecordPairs {
  std::vector<std::pair<RecordRef, RecordRef>> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
};

/// Multi-file dataset. Files are indexed 0..J-1 and records inside a file
/// 0..I_j-1; external formats use 1-based numbering for both.
class Dataset {
 public:
  std::vector<FieldSpec> fields;
  std::vector<ProfileTable> profiles;   // one per file
  std::vector<Adjacency> networks;      // one per file, or empty

  /// Recomputes the global record numbering. Call after filling the tables.
  void finalize();

  int n_files() const { return static_cast<int>(file_sizes_.size()); }
  int n_fields() const { return static_cast<int>(fields.size()); }
  int file_size(int file) const { return file_sizes_[file]; }
  int total_records() const { return offsets_.empty() ? 0 : offsets_.back(); }
  bool has_networks() const { return !networks.empty(); }

  int global_index(RecordRef ref) const { return offsets_[ref.file] + ref.index; }
  RecordRef ref_of(int global) const;
  int file_of(int global) const { return file_of_[global]; }
  int file_offset(int file) const { return offsets_[file]; }
  bool contains(RecordRef ref) const;

  /// Profile cell of a globally indexed record.
  int cell(int global, int field) const;

  /// Number of non-missing cells of a field, pooled across files.
  int observed_cells(int field) const;

  /// Number of record pairs that lie in different files.
  std::int64_t cross_file_pairs() const;

 private:
  std::vector<int> file_sizes_;
  std::vector<int> offsets_;  // size J + 1
  std::vector<int> file_of_;
};

/// Raw string table for one file, before levels are assigned.
struct RawProfileTable {
  std::vector<std::string> record_ids;
  std::vector<std::vector<std::string>> rows;  // empty string or "NA" = missing
};

/// Builds FieldSpecs (pooled, sorted levels) and per-file ProfileTables.
void build_profiles(const std::vector<std::string>& field_names,
                    const std::map<std::string, FieldKind>& field_kinds,
                    const std::vector<RawProfileTable>& files,
                    std::vector<FieldSpec>& fields_out,
                    std::vector<ProfileTable>& tables_out);

/// Reads one CSV per file: header `record_id,<field>...`. Fields not named in
/// field_kinds are categorical; names in field_kinds must exist in the header.
void load_profiles(const std::vector<std::string>& paths,
                   const std::map<std::string, FieldKind>& field_kinds,
                   std::vector<FieldSpec>& fields_out,
                   std::vector<ProfileTable>& tables_out);

void write_profiles(const std::string& path, const ProfileTable& table,
                    const std::vector<FieldSpec>& fields);

/// Edge list with 1-based `i j` pairs separated by whitespace or a comma.
/// Lines starting with '#' are ignored.
Adjacency load_network(const std::string& path, int n_actors, int file_id = 0);
Adjacency parse_network(std::string_view text, int n_actors, int file_id = 0);
void write_network(const std::string& path, const Adjacency& graph);

/// CSV `file_a,index_a,file_b,index_b`, 1-based. A header row is optional.
RecordPairs load_record_pairs(const std::string& path);
void write_record_pairs(const std::string& path, const RecordPairs& pairs);

/// Throws Error if a pair references a record outside the dataset, joins two
/// records of the same file, or reuses a record.
void validate_record_pairs(const RecordPairs& pairs, const std::vector<int>& file_sizes);

/// Convenience: load profiles, optional networks, and finalize.
Dataset load_dataset(const std::vector<std::string>& profile_paths,
                     const std::vector<std::string>& network_paths,
                     const std::map<std::string, FieldKind>& field_kinds);

struct NetworkSummary {
  double density = 0.0;
  std::optional<double> clustering;     // global transitivity
  std::optional<double> assortativity;  // degree assortativity
};

NetworkSummary summary_statistics(const Adjacency& graph);

/// 64-bit FNV-1a digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::string& path);

}  // namespace bnrl
