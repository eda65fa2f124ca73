#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hfv/csr_model.hpp"

namespace hfv {

/// Half-open range of global indices.
struct IndexRange {
  std::int64_t begin = 0;
  std::int64_t end = 0;

  std::int64_t size() const { return end - begin; }
  bool empty() const { return end == begin; }
  bool contains(std::int64_t i) const { return i >= begin && i < end; }
  bool operator==(const IndexRange&) const = default;
};

struct SubmodelEntry {
  std::string name;
  IndexRange nodes;

  bool operator==(const SubmodelEntry&) const = default;
};

/// Submodels in NODTRE block order; node ranges tile [0, num_nodes).
class SubmodelIndex {
 public:
  SubmodelIndex() = default;
  explicit SubmodelIndex(std::vector<SubmodelEntry> entries);

  const std::vector<SubmodelEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::int64_t num_nodes() const { return entries_.empty() ? 0 : entries_.back().nodes.end; }

  /// Position of `name` in block order; throws a lookup error if absent.
  std::size_t position(const std::string& name) const;
  bool contains(const std::string& name) const;
  /// Block position owning global node `node`, or -1 when outside every range.
  std::int64_t owner_of(std::int64_t node) const;

  bool operator==(const SubmodelIndex& other) const { return entries_ == other.entries_; }

 private:
  std::vector<SubmodelEntry> entries_;
};

/// A NODTRE head as stored on disk, plus where its body starts.
struct NodeTreeHead {
  std::string name;
  std::int64_t node_count = 0;
  std::int64_t reserved_meta = 0;
  std::uint64_t body_offset = 0;
};

Sizes read_sizes(const fs::path& dir);

/// Reads every head and seeks over every body.
std::vector<NodeTreeHead> read_node_tree_heads(const fs::path& dir);

/// Head-only parse: node ranges are inferred from cumulative head counts and
/// bodies are never read. Files whose bodies are not sequential yield
/// whatever the heads imply.
SubmodelIndex parse_node_tree_fast(const fs::path& dir);

/// Reads every body and checks it against the range implied by its head.
SubmodelIndex parse_node_tree_full(const fs::path& dir);

/// Sub-matrix [timesteps) x [nodes). A full-width request issues one
/// contiguous read per row.
TemperatureMatrix load_temperatures(const fs::path& dir, IndexRange timesteps, IndexRange nodes);
TemperatureMatrix load_temperatures(const fs::path& dir);

std::vector<ConductorRecord> load_conductors(const fs::path& dir);

/// One submodel's temperatures: `values` is timestep-major,
/// num_timesteps x nodes.size().
struct SubmodelTemperatures {
  std::string name;
  IndexRange nodes;
  std::vector<double> timestamps;
  std::vector<double> values;

  bool operator==(const SubmodelTemperatures&) const = default;
};

/// Fast path: one head-only NODTRE pass and one sequential TEMPS pass shared
/// by all requested submodels. An empty name list means every submodel.
std::vector<SubmodelTemperatures> load_submodel_temperatures(const fs::path& dir,
                                                             const std::vector<std::string>& names = {});

/// Emulates the per-submodel pipeline of the vendor API: every requested
/// submodel re-reads SIZES, rescans the whole NODTRE (heads and bodies) and
/// re-reads each full temperature row before keeping its own columns.
std::vector<SubmodelTemperatures> baseline_load_like_opentd(const fs::path& dir,
                                                            const std::vector<std::string>& names);

struct BenchRecord {
  std::int64_t n = 0;
  std::int64_t num_submodels = 0;
  double fast_seconds = 0.0;
  double baseline_seconds = 0.0;
  std::uint64_t bytes_read_fast = 0;
  std::uint64_t bytes_read_baseline = 0;
};

struct BenchReport {
  int runs = 5;
  std::vector<BenchRecord> records;
};

std::string to_json_string(const BenchReport& report);

/// Times both loaders over all submodels and averages over `runs`. The OS
/// page cache is not controlled; repeated runs are typically warm.
BenchReport bench_compare(const fs::path& dir, int runs = 5);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace hfv
