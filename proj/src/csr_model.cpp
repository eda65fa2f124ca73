#include "hfv/csr_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <unordered_set>

#include "hfv/binary_io.hpp"
#include "hfv/error.hpp"

namespace hfv {

namespace {

[[noreturn]] void invalid(const std::string& message) {
  fail(ErrorKind::Validation, "invalid_dataset", message);
}

// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::int64_t uniform_index(std::mt19937_64& rng, std::int64_t n) {
  return static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(n));
}

}  // namespace

const char* to_string(ConductorKind kind) {
  return kind == ConductorKind::Linear ? "linear" : "radiative";
}

bool ValidationReport::has(const std::string& code) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.code == code; });
}

Sizes ThermalDataset::sizes() const {
  Sizes s;
  s.num_submodels = static_cast<std::int64_t>(submodels.size());
  for (const auto& sm : submodels) s.num_nodes += sm.node_count;
  for (const auto& c : conductors) {
    (c.kind == ConductorKind::Linear ? s.num_linear : s.num_radiative) += 1;
  }
  s.num_timesteps = temperatures.num_timesteps();
  return s;
}

void check_dataset(const ThermalDataset& d) {
  std::int64_t num_nodes = 0;
  std::unordered_set<std::string> names;
  for (const auto& sm : d.submodels) {
    if (sm.name.empty()) invalid("submodel name is empty");
    if (sm.name.size() > UINT32_MAX) invalid("submodel name too long");
    if (!names.insert(sm.name).second) invalid("duplicate submodel name '" + sm.name + "'");
    if (sm.node_count < 0) invalid("negative node count for '" + sm.name + "'");
    num_nodes += sm.node_count;
  }
  if (num_nodes >= 1 && d.submodels.empty()) invalid("nodes present but no submodels");

  bool seen_radiative = false;
  for (std::size_t i = 0; i < d.conductors.size(); ++i) {
    const auto& c = d.conductors[i];
    const std::string where = "conductor " + std::to_string(i);
    if (c.kind != ConductorKind::Linear && c.kind != ConductorKind::Radiative) invalid(where + ": bad kind");
    if (c.kind == ConductorKind::Radiative) seen_radiative = true;
    if (c.kind == ConductorKind::Linear && seen_radiative) invalid(where + ": linear record after radiative");
    if (c.node_a == c.node_b) invalid(where + ": node_a equals node_b");
    if (c.node_a < 0 || c.node_b < 0 || c.node_a >= num_nodes || c.node_b >= num_nodes) {
      invalid(where + ": node index out of range");
    }
    if (!(c.conductance > 0.0) || !std::isfinite(c.conductance)) invalid(where + ": conductance must be > 0");
  }

  const auto& tm = d.temperatures;
  if (tm.num_nodes != num_nodes) invalid("temperature matrix width does not match node count");
  if (tm.first_timestep != 0 || tm.first_node != 0) invalid("temperature matrix must be the full matrix");
  if (static_cast<std::int64_t>(tm.values.size()) != tm.num_timesteps() * num_nodes) {
    invalid("temperature matrix size does not match timesteps x nodes");
  }
  for (std::size_t i = 1; i < tm.timestamps.size(); ++i) {
    if (!(tm.timestamps[i] > tm.timestamps[i - 1])) invalid("timestamps not strictly increasing");
  }
  for (double v : tm.values) {
    if (!(v > 0.0) || !std::isfinite(v)) invalid("temperature values must be finite and > 0 K");
  }
}

void write_dataset(const ThermalDataset& d, const fs::path& dir) {
  check_dataset(d);
  const Sizes s = d.sizes();

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "write_failed", "cannot create " + dir.string() + ": " + ec.message());

  {
    io::BinaryWriter w(dir / kSizesFile);
    w.write_i64(s.num_submodels);
    w.write_i64(s.num_nodes);
    w.write_i64(s.num_linear);
    w.write_i64(s.num_radiative);
    w.write_i64(s.num_timesteps);
    w.commit();
  }
  {
    io::BinaryWriter w(dir / kNodeTreeFile);
    std::int64_t next = 0;
    std::vector<char> body;
    for (const auto& sm : d.submodels) {
      w.write_u32(static_cast<std::uint32_t>(sm.name.size()));
      w.write_bytes(sm.name);
      w.write_i64(sm.node_count);
      w.write_i64(0);  // reserved_meta
      body.clear();
      body.reserve(static_cast<std::size_t>(sm.node_count) * 8);
      for (std::int64_t k = 0; k < sm.node_count; ++k) io::put_i64(body, next++);
      w.write_bytes(body);
    }
    w.commit();
  }
  {
    io::BinaryWriter w(dir / kTempsFile);
    w.write_f64s(d.temperatures.timestamps);
    w.write_f64s(d.temperatures.values);
    w.commit();
  }
  {
    io::BinaryWriter w(dir / kConductorsFile);
    static constexpr char kPad[7] = {};
    for (const auto& c : d.conductors) {
      w.write_u8(static_cast<std::uint8_t>(c.kind));
      w.write_bytes(kPad);
      w.write_i64(c.node_a);
      w.write_i64(c.node_b);
      w.write_f64(c.conductance);
    }
    w.commit();
  }
}

ThermalDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_submodels < 1) invalid("synthetic spec needs at least one submodel");
  if (spec.nodes_per_submodel.size() != 1 &&
      spec.nodes_per_submodel.size() != static_cast<std::size_t>(spec.num_submodels)) {
    invalid("nodes_per_submodel must have one entry or one per submodel");
  }
  if (spec.num_timesteps < 0) invalid("negative timestep count");
  if (!(spec.linear_density >= 0.0) || !(spec.radiative_density >= 0.0)) invalid("densities must be >= 0");
  if (!(spec.temp_min_k > 0.0) || !(spec.temp_max_k >= spec.temp_min_k)) invalid("bad temperature range");

  ThermalDataset d;
  std::mt19937_64 rng(spec.seed);

  std::int64_t num_nodes = 0;
  const int width = spec.num_submodels > 999 ? static_cast<int>(std::to_string(spec.num_submodels).size()) : 3;
  for (std::int64_t s = 0; s < spec.num_submodels; ++s) {
    std::int64_t count = spec.nodes_per_submodel.size() == 1 ? spec.nodes_per_submodel[0]
                                                             : spec.nodes_per_submodel[s];
    if (count < 0) invalid("negative node count in synthetic spec");
    std::string digits = std::to_string(s);
    d.submodels.push_back({"SM" + std::string(width - std::min<int>(width, digits.size()), '0') + digits, count});
    num_nodes += count;
  }

  // Nonempty submodels as [start, count) for the spanning chain.
  std::vector<std::pair<std::int64_t, std::int64_t>> populated;
  std::int64_t start = 0;
  for (const auto& sm : d.submodels) {
    if (sm.node_count > 0) populated.emplace_back(start, sm.node_count);
    start += sm.node_count;
  }

  std::int64_t n_lin = 0;
  std::int64_t n_rad = 0;
  if (num_nodes >= 2) {
    n_lin = std::llround(spec.linear_density * static_cast<double>(num_nodes));
    n_rad = std::llround(spec.radiative_density * static_cast<double>(num_nodes));
    const auto tree_edges = static_cast<std::int64_t>(populated.size()) - 1;
    if (spec.linear_density > 0.0) {
      n_lin = std::max(n_lin, tree_edges);
    } else if (spec.radiative_density > 0.0) {
      n_rad = std::max(n_rad, tree_edges);
    }
  }

  auto emit = [&](ConductorKind kind, std::int64_t count, bool spanning) {
    const double lo = kind == ConductorKind::Linear ? 0.05 : 0.001;
    const double hi = kind == ConductorKind::Linear ? 5.0 : 0.2;
    std::int64_t made = 0;
    if (spanning) {
      for (std::size_t k = 1; k < populated.size() && made < count; ++k, ++made) {
        const auto& here = populated[k];
        const auto& there = populated[uniform_index(rng, static_cast<std::int64_t>(k))];
        std::int64_t a = here.first + uniform_index(rng, here.second);
        std::int64_t b = there.first + uniform_index(rng, there.second);
        if (rng() & 1U) std::swap(a, b);
        d.conductors.push_back({kind, a, b, lo + (hi - lo) * unit_uniform(rng)});
      }
    }
    for (; made < count; ++made) {
      std::int64_t a = uniform_index(rng, num_nodes);
      std::int64_t b = uniform_index(rng, num_nodes - 1);
      if (b >= a) ++b;
      d.conductors.push_back({kind, a, b, lo + (hi - lo) * unit_uniform(rng)});
    }
  };
  const bool linear_spans = spec.linear_density > 0.0;
  emit(ConductorKind::Linear, n_lin, linear_spans);
  emit(ConductorKind::Radiative, n_rad, !linear_spans);

  auto& tm = d.temperatures;
  tm.num_nodes = num_nodes;
  tm.timestamps.resize(static_cast<std::size_t>(spec.num_timesteps));
  for (std::int64_t t = 0; t < spec.num_timesteps; ++t) tm.timestamps[t] = 60.0 * static_cast<double>(t);
  tm.values.resize(static_cast<std::size_t>(spec.num_timesteps * num_nodes));
  const double span = spec.temp_max_k - spec.temp_min_k;
  for (double& v : tm.values) v = spec.temp_min_k + span * unit_uniform(rng);
  return d;
}

ValidationReport validate_dataset(const fs::path& dir) {
  ValidationReport report;
  auto add = [&](std::string code, std::string message) {
    report.violations.push_back({std::move(code), std::move(message)});
  };
  auto guarded = [&](const char* file, auto&& body) {
    try {
      body();
    } catch (const Error& e) {
      add(e.kind() == ErrorKind::Io ? "missing_file" : "structural", std::string(file) + ": " + e.what());
    }
  };

  Sizes s;
  bool have_sizes = false;
  guarded(kSizesFile, [&] {
    io::BinaryReader r(dir / kSizesFile);
    s.num_submodels = r.read_i64("num_submodels");
    s.num_nodes = r.read_i64("num_nodes");
    s.num_linear = r.read_i64("num_linear");
    s.num_radiative = r.read_i64("num_radiative");
    s.num_timesteps = r.read_i64("num_timesteps");
    if (r.remaining() != 0) add("trailing_bytes", "SIZES has " + std::to_string(r.remaining()) + " extra bytes");
    have_sizes = true;
  });
  if (have_sizes) {
    if (s.num_submodels < 0 || s.num_nodes < 0 || s.num_linear < 0 || s.num_radiative < 0 || s.num_timesteps < 0) {
      add("negative_count", "SIZES holds a negative count");
      have_sizes = false;
    } else if (s.num_nodes >= 1 && s.num_submodels < 1) {
      add("no_submodels", "SIZES has nodes but zero submodels");
    }
  }

  guarded(kNodeTreeFile, [&] {
    io::BinaryReader r(dir / kNodeTreeFile);
    std::set<std::string> names;
    std::int64_t expected = 0;
    std::int64_t blocks = 0;
    std::vector<std::int64_t> body;
    while (r.remaining() > 0) {
      const std::string block = "block " + std::to_string(blocks);
      std::uint32_t len = r.read_u32(block + " name length");
      std::string name(len, '\0');
      r.read_bytes(name, block + " name");
      std::int64_t count = r.read_i64(block + " node count");
      r.read_i64(block + " reserved metadata");
      if (name.empty()) add("empty_name", block + " has an empty name");
      if (!names.insert(name).second) add("duplicate_name", block + " repeats name '" + name + "'");
      if (count < 0) {
        add("negative_count", block + " ('" + name + "') has negative node count");
        return;
      }
      if (static_cast<std::uint64_t>(count) > r.remaining() / 8) {
        add("structural", block + " ('" + name + "') body runs past end of file");
        return;
      }
      body.resize(static_cast<std::size_t>(count));
      r.read_i64s(body, block + " body");
      for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] != expected + static_cast<std::int64_t>(i)) {
          add("non_sequential_body", block + " ('" + name + "') non-sequential body at position " +
                                         std::to_string(i) + ": expected " +
                                         std::to_string(expected + static_cast<std::int64_t>(i)) + ", found " +
                                         std::to_string(body[i]));
          break;
        }
      }
      expected += count;
      ++blocks;
    }
    if (have_sizes) {
      if (blocks != s.num_submodels) {
        add("block_count_mismatch", "NODTRE has " + std::to_string(blocks) + " blocks, SIZES says " +
                                        std::to_string(s.num_submodels));
      }
      if (expected != s.num_nodes) {
        add("count_mismatch", "NODTRE block counts sum to " + std::to_string(expected) + ", SIZES says " +
                                  std::to_string(s.num_nodes));
      }
    }
  });

  if (!have_sizes) return report;

  guarded(kTempsFile, [&] {
    io::BinaryReader r(dir / kTempsFile);
    const auto want = static_cast<std::uint64_t>(s.num_timesteps) * 8 *
                      (1 + static_cast<std::uint64_t>(s.num_nodes));
    if (r.size() != want) {
      add("size_mismatch", "TEMPS is " + std::to_string(r.size()) + " bytes, expected " + std::to_string(want));
      return;
    }
    std::vector<double> buf(static_cast<std::size_t>(s.num_timesteps));
    r.read_f64s(buf, "timestamps");
    for (std::size_t i = 1; i < buf.size(); ++i) {
      if (!(buf[i] > buf[i - 1])) {
        add("timestamps_not_increasing", "TEMPS timestamp " + std::to_string(i) + " does not increase");
        break;
      }
    }
    buf.resize(static_cast<std::size_t>(s.num_nodes));
    for (std::int64_t t = 0; t < s.num_timesteps; ++t) {
      r.read_f64s(buf, "row " + std::to_string(t));
      auto bad = std::find_if(buf.begin(), buf.end(), [](double v) { return !(v > 0.0) || !std::isfinite(v); });
      if (bad != buf.end()) {
        add("nonpositive_temperature", "TEMPS row " + std::to_string(t) + " node " +
                                           std::to_string(bad - buf.begin()) + " is not a positive Kelvin value");
        break;
      }
    }
  });

  guarded(kConductorsFile, [&] {
    io::BinaryReader r(dir / kConductorsFile);
    const auto count = static_cast<std::uint64_t>(s.num_linear + s.num_radiative);
    if (r.size() != count * kConductorRecordBytes) {
      add("size_mismatch", "CONDUCTORS is " + std::to_string(r.size()) + " bytes, expected " +
                               std::to_string(count * kConductorRecordBytes));
      return;
    }
    for (std::uint64_t i = 0; i < count; ++i) {
      const std::string rec = "record " + std::to_string(i);
      std::uint8_t kind = r.read_u8(rec);
      r.skip(7, rec + " padding");
      std::int64_t a = r.read_i64(rec);
      std::int64_t b = r.read_i64(rec);
      double g = r.read_f64(rec);
      const bool expect_linear = i < static_cast<std::uint64_t>(s.num_linear);
      if (kind > 1) {
        add("bad_kind", "CONDUCTORS " + rec + " has kind " + std::to_string(kind));
      } else if ((kind == 0) != expect_linear) {
        add("kind_order", "CONDUCTORS " + rec + " breaks linear-then-radiative order");
      }
      if (a == b) add("self_conductor", "CONDUCTORS " + rec + " connects node " + std::to_string(a) + " to itself");
      if (a < 0 || b < 0 || a >= s.num_nodes || b >= s.num_nodes) {
        add("node_out_of_range", "CONDUCTORS " + rec + " references a node outside [0, num_nodes)");
      }
      if (!(g > 0.0) || !std::isfinite(g)) add("nonpositive_conductance", "CONDUCTORS " + rec + " conductance <= 0");
    }
  });

  return report;
}

}  // namespace hfv
