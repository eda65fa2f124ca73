#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hfv/csr_model.hpp"
#include "hfv/csr_parser.hpp"

namespace hfv {

// Project directory layout:
//   manifest.json    fingerprint, cached timesteps, timestamps (authoritative)
//   index.bin        u64 count, then per entry u32 name_len, name, i64 begin, i64 end
//   temps_<t>.bin    num_nodes x f64 LE Kelvin for timestep t
//   lock             advisory writer lock

inline constexpr int kCacheSchemaVersion = 1;
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kIndexFile = "index.bin";
inline constexpr const char* kLockFile = "lock";

struct CacheManifest {
  int schema_version = kCacheSchemaVersion;
  std::uint64_t dataset_fingerprint = 0;
  std::int64_t num_nodes = 0;
  std::int64_t num_timesteps = 0;
  std::vector<std::int64_t> cached_timesteps;
  std::string created;
  std::string updated;

  bool operator==(const CacheManifest&) const = default;
};

/// FNV-1a 64 over the SIZES bytes followed by every NODTRE head.
std::uint64_t dataset_fingerprint(const fs::path& dataset_dir);

class ProjectHandle {
 public:
  const fs::path& project_dir() const { return project_dir_; }
  const fs::path& dataset_dir() const { return dataset_dir_; }
  const Sizes& sizes() const { return sizes_; }
  const SubmodelIndex& index() const { return index_; }
  /// Manifest as last read or written through this handle.
  const CacheManifest& manifest() const { return manifest_; }

 private:
  friend ProjectHandle init_project(const fs::path&, const fs::path&);
  friend void cache_timestep(ProjectHandle&, std::int64_t, std::span<const double>);

  fs::path project_dir_;
  fs::path dataset_dir_;
  Sizes sizes_;
  SubmodelIndex index_;
  CacheManifest manifest_;
};

/// Creates the project on first use; afterwards only verifies the
/// fingerprint (stale-cache error on mismatch) and leaves files untouched.
ProjectHandle init_project(const fs::path& project_dir, const fs::path& dataset_dir);

/// No-op when `t` is already cached.
void cache_timestep(ProjectHandle& handle, std::int64_t t, std::span<const double> temps_row);

/// nullopt on a miss; throws a corruption error when a listed file is damaged.
std::optional<std::vector<double>> load_cached(const ProjectHandle& handle, std::int64_t t);

/// Refuses directories without a manifest.
void clear_project(const fs::path& project_dir);

CacheManifest read_manifest(const fs::path& project_dir);
SubmodelIndex read_index_file(const fs::path& project_dir);
fs::path timestep_file(const fs::path& project_dir, std::int64_t t);

}  // namespace hfv
