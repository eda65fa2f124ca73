#pragma once

// On-disk thermal results dataset: four little-endian binaries in one
// directory.
//
//   SIZES       five int64: submodels, nodes, linear, radiative, timesteps
//   NODTRE      per submodel: u32 name_len, name, i64 node_count,
//               i64 reserved_meta, then node_count x i64 node indices
//   TEMPS       timesteps x f64 timestamps, then timestep-major rows of
//               nodes x f64 Kelvin
//   CONDUCTORS  per conductor: u8 kind, 7 zero bytes, i64 node_a,
//               i64 node_b, f64 conductance; linear records first

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace hfv {

namespace fs = std::filesystem;

inline constexpr const char* kSizesFile = "SIZES";
inline constexpr const char* kNodeTreeFile = "NODTRE";
inline constexpr const char* kTempsFile = "TEMPS";
inline constexpr const char* kConductorsFile = "CONDUCTORS";

inline constexpr std::uint64_t kSizesBytes = 5 * 8;
inline constexpr std::uint64_t kConductorRecordBytes = 32;
/// Bytes in a NODTRE head besides the name itself (u32 + i64 + i64).
inline constexpr std::uint64_t kHeadFixedBytes = 4 + 8 + 8;

struct Sizes {
  std::int64_t num_submodels = 0;
  std::int64_t num_nodes = 0;
  std::int64_t num_linear = 0;
  std::int64_t num_radiative = 0;
  std::int64_t num_timesteps = 0;

  bool operator==(const Sizes&) const = default;
};

struct Submodel {
  std::string name;
  std::int64_t node_count = 0;

  bool operator==(const Submodel&) const = default;
};

enum class ConductorKind : std::uint8_t { Linear = 0, Radiative = 1 };

const char* to_string(ConductorKind kind);

/// Linear conductance is W/K; radiative is script-F times area in m^2.
struct ConductorRecord {
  ConductorKind kind = ConductorKind::Linear;
  std::int64_t node_a = 0;
  std::int64_t node_b = 0;
  double conductance = 0.0;

  bool operator==(const ConductorRecord&) const = default;
};

/// Kelvin values, timestep-major. A slice keeps the global offsets of its
/// first timestep and node so callers can map back to dataset indices.
struct TemperatureMatrix {
  std::vector<double> timestamps;
  std::int64_t num_nodes = 0;
  std::vector<double> values;
  std::int64_t first_timestep = 0;
  std::int64_t first_node = 0;

  std::int64_t num_timesteps() const { return static_cast<std::int64_t>(timestamps.size()); }
  std::span<const double> row(std::int64_t t) const {
    return {values.data() + t * num_nodes, static_cast<std::size_t>(num_nodes)};
  }
  double at(std::int64_t t, std::int64_t node) const { return values[t * num_nodes + node]; }

  bool operator==(const TemperatureMatrix&) const = default;
};

struct ThermalDataset {
  std::vector<Submodel> submodels;
  std::vector<ConductorRecord> conductors;
  TemperatureMatrix temperatures;

  Sizes sizes() const;
  bool operator==(const ThermalDataset&) const = default;
};

struct SyntheticSpec {
  std::int64_t num_submodels = 1;
  /// One entry per submodel, or a single entry applied to all.
  std::vector<std::int64_t> nodes_per_submodel{1};
  std::int64_t num_timesteps = 1;
  double linear_density = 1.0;
  double radiative_density = 0.5;
  double temp_min_k = 250.0;
  double temp_max_k = 350.0;
  std::uint64_t seed = 0;
};

struct Violation {
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(const std::string& code) const;
};

/// Throws a validation error listing the first violated invariant.
void check_dataset(const ThermalDataset& dataset);

void write_dataset(const ThermalDataset& dataset, const fs::path& dir);

ThermalDataset generate_synthetic(const SyntheticSpec& spec);

ValidationReport validate_dataset(const fs::path& dir);

}  // namespace hfv
