#include "hfv/csr_parser.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <unordered_map>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <nlohmann/json.hpp>

#include "hfv/binary_io.hpp"
#include "hfv/error.hpp"

namespace hfv {

namespace {

std::string block_label(std::int64_t ordinal) { return "NODTRE block " + std::to_string(ordinal); }

NodeTreeHead read_head(io::BinaryReader& r, std::int64_t ordinal) {
  const std::string block = block_label(ordinal);
  NodeTreeHead head;
  std::uint32_t len = r.read_u32(block + " head (name length)");
  head.name.resize(len);
  r.read_bytes(head.name, block + " head (name)");
  head.node_count = r.read_i64(block + " head (node count)");
  head.reserved_meta = r.read_i64(block + " head (reserved metadata)");
  head.body_offset = r.offset();
  if (head.node_count < 0) {
    fail(ErrorKind::Structural, "negative_count", block + " ('" + head.name + "') has a negative node count");
  }
  return head;
}

SubmodelIndex index_from_heads(const std::vector<NodeTreeHead>& heads) {
  std::vector<SubmodelEntry> entries;
  entries.reserve(heads.size());
  std::int64_t next = 0;
  for (const auto& h : heads) {
    entries.push_back({h.name, {next, next + h.node_count}});
    next += h.node_count;
  }
  return SubmodelIndex(std::move(entries));
}

void check_temps_size(const io::BinaryReader& r, const Sizes& s) {
  const auto want = static_cast<std::uint64_t>(s.num_timesteps) * 8 * (1 + static_cast<std::uint64_t>(s.num_nodes));
  if (r.size() < want) {
    fail(ErrorKind::Truncation, "truncated",
         "TEMPS is " + std::to_string(r.size()) + " bytes, expected " + std::to_string(want));
  }
}

// Baseline helper: finds `name` by scanning every head and body of NODTRE.
std::vector<std::int64_t> scan_node_tree_for(io::BinaryReader& r, const std::string& name, IndexRange& range) {
  r.seek(0, "NODTRE start");
  std::vector<std::int64_t> found;
  std::vector<std::int64_t> body;
  bool hit = false;
  std::int64_t next = 0;
  for (std::int64_t ordinal = 0; r.remaining() > 0; ++ordinal) {
    NodeTreeHead head = read_head(r, ordinal);
    if (static_cast<std::uint64_t>(head.node_count) > r.remaining() / 8) {
      fail(ErrorKind::Structural, "seek_past_eof", block_label(ordinal) + " body runs past end of file");
    }
    body.resize(static_cast<std::size_t>(head.node_count));
    r.read_i64s(body, block_label(ordinal) + " body");
    if (!hit && head.name == name) {
      found = body;
      range = {next, next + head.node_count};
      hit = true;
    }
    next += head.node_count;
  }
  if (!hit) fail(ErrorKind::Lookup, "unknown_submodel", "unknown submodel '" + name + "'");
  return found;
}

}  // namespace

SubmodelIndex::SubmodelIndex(std::vector<SubmodelEntry> entries) : entries_(std::move(entries)) {}

std::size_t SubmodelIndex::position(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  fail(ErrorKind::Lookup, "unknown_submodel", "unknown submodel '" + name + "'");
}

bool SubmodelIndex::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const SubmodelEntry& e) { return e.name == name; });
}

std::int64_t SubmodelIndex::owner_of(std::int64_t node) const {
  // First entry whose end is past `node`; empty ranges are skipped naturally.
  auto it = std::upper_bound(entries_.begin(), entries_.end(), node,
                             [](std::int64_t n, const SubmodelEntry& e) { return n < e.nodes.end; });
  if (it == entries_.end() || !it->nodes.contains(node)) return -1;
  return it - entries_.begin();
}

namespace {

Sizes read_sizes_from(io::BinaryReader& r) {
  Sizes s;
  s.num_submodels = r.read_i64("SIZES num_submodels");
  s.num_nodes = r.read_i64("SIZES num_nodes");
  s.num_linear = r.read_i64("SIZES num_linear");
  s.num_radiative = r.read_i64("SIZES num_radiative");
  s.num_timesteps = r.read_i64("SIZES num_timesteps");
  if (s.num_submodels < 0 || s.num_nodes < 0 || s.num_linear < 0 || s.num_radiative < 0 || s.num_timesteps < 0) {
    fail(ErrorKind::Structural, "negative_count", "SIZES holds a negative count");
  }
  return s;
}

}  // namespace

Sizes read_sizes(const fs::path& dir) {
  io::BinaryReader r(dir / kSizesFile);
  return read_sizes_from(r);
}

std::vector<NodeTreeHead> read_node_tree_heads(const fs::path& dir) {
  io::BinaryReader r(dir / kNodeTreeFile);
  std::vector<NodeTreeHead> heads;
  for (std::int64_t ordinal = 0; r.remaining() > 0; ++ordinal) {
    NodeTreeHead head = read_head(r, ordinal);
    if (static_cast<std::uint64_t>(head.node_count) > r.remaining() / 8) {
      fail(ErrorKind::Structural, "seek_past_eof",
           block_label(ordinal) + " ('" + head.name + "') body runs past end of file");
    }
    r.skip(static_cast<std::uint64_t>(head.node_count) * 8, block_label(ordinal) + " body");
    heads.push_back(std::move(head));
  }
  return heads;
}

SubmodelIndex parse_node_tree_fast(const fs::path& dir) { return index_from_heads(read_node_tree_heads(dir)); }

SubmodelIndex parse_node_tree_full(const fs::path& dir) {
  io::BinaryReader r(dir / kNodeTreeFile);
  std::vector<NodeTreeHead> heads;
  std::vector<std::int64_t> body;
  std::int64_t next = 0;
  for (std::int64_t ordinal = 0; r.remaining() > 0; ++ordinal) {
    NodeTreeHead head = read_head(r, ordinal);
    if (static_cast<std::uint64_t>(head.node_count) > r.remaining() / 8) {
      fail(ErrorKind::Truncation, "truncated", block_label(ordinal) + " body is truncated");
    }
    body.resize(static_cast<std::size_t>(head.node_count));
    r.read_i64s(body, block_label(ordinal) + " body");
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (body[i] != next + static_cast<std::int64_t>(i)) {
        fail(ErrorKind::Structural, "non_sequential_body",
             block_label(ordinal) + " ('" + head.name + "') is non-sequential at index position " +
                 std::to_string(i) + ": expected " + std::to_string(next + static_cast<std::int64_t>(i)) +
                 ", found " + std::to_string(body[i]));
      }
    }
    next += head.node_count;
    heads.push_back(std::move(head));
  }
  return index_from_heads(heads);
}

TemperatureMatrix load_temperatures(const fs::path& dir, IndexRange timesteps, IndexRange nodes) {
  const Sizes s = read_sizes(dir);
  if (timesteps.begin < 0 || timesteps.end < timesteps.begin || timesteps.end > s.num_timesteps) {
    fail(ErrorKind::Bounds, "bad_timestep",
         "timestep range [" + std::to_string(timesteps.begin) + ", " + std::to_string(timesteps.end) +
             ") outside [0, " + std::to_string(s.num_timesteps) + ")");
  }
  if (nodes.begin < 0 || nodes.end < nodes.begin || nodes.end > s.num_nodes) {
    fail(ErrorKind::Bounds, "bad_node_range",
         "node range [" + std::to_string(nodes.begin) + ", " + std::to_string(nodes.end) + ") outside [0, " +
             std::to_string(s.num_nodes) + ")");
  }

  TemperatureMatrix m;
  m.first_timestep = timesteps.begin;
  m.first_node = nodes.begin;
  m.num_nodes = nodes.size();
  if (timesteps.empty()) return m;

  io::BinaryReader r(dir / kTempsFile);
  check_temps_size(r, s);
  m.timestamps.resize(static_cast<std::size_t>(timesteps.size()));
  r.seek(static_cast<std::uint64_t>(timesteps.begin) * 8, "timestamps");
  r.read_f64s(m.timestamps, "timestamps");

  m.values.resize(static_cast<std::size_t>(timesteps.size() * nodes.size()));
  if (nodes.empty()) return m;
  const std::uint64_t rows_start = static_cast<std::uint64_t>(s.num_timesteps) * 8;
  const std::uint64_t row_bytes = static_cast<std::uint64_t>(s.num_nodes) * 8;
  for (std::int64_t t = timesteps.begin; t < timesteps.end; ++t) {
    const std::uint64_t at = rows_start + static_cast<std::uint64_t>(t) * row_bytes +
                             static_cast<std::uint64_t>(nodes.begin) * 8;
    if (r.offset() != at) r.seek(at, "row " + std::to_string(t));
    std::span<double> dst(m.values.data() + (t - timesteps.begin) * nodes.size(),
                          static_cast<std::size_t>(nodes.size()));
    r.read_f64s(dst, "row " + std::to_string(t));
  }
  return m;
}

TemperatureMatrix load_temperatures(const fs::path& dir) {
  const Sizes s = read_sizes(dir);
  return load_temperatures(dir, {0, s.num_timesteps}, {0, s.num_nodes});
}

std::vector<ConductorRecord> load_conductors(const fs::path& dir) {
  const Sizes s = read_sizes(dir);
  io::BinaryReader r(dir / kConductorsFile);
  const auto count = static_cast<std::uint64_t>(s.num_linear + s.num_radiative);
  if (r.size() != count * kConductorRecordBytes) {
    fail(ErrorKind::Structural, "count_mismatch",
         "CONDUCTORS holds " + std::to_string(r.size()) + " bytes but SIZES declares " + std::to_string(count) +
             " records (" + std::to_string(count * kConductorRecordBytes) + " bytes)");
  }
  std::vector<ConductorRecord> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string rec = "CONDUCTORS record " + std::to_string(i);
    char fixed[8];
    r.read_bytes(fixed, rec + " kind");
    auto kind_byte = static_cast<std::uint8_t>(fixed[0]);
    ConductorRecord c;
    c.node_a = r.read_i64(rec + " node_a");
    c.node_b = r.read_i64(rec + " node_b");
    c.conductance = r.read_f64(rec + " conductance");
    if (kind_byte > 1) fail(ErrorKind::Structural, "bad_kind", rec + " has unknown kind " + std::to_string(kind_byte));
    c.kind = static_cast<ConductorKind>(kind_byte);
    const bool expect_linear = i < static_cast<std::uint64_t>(s.num_linear);
    if ((c.kind == ConductorKind::Linear) != expect_linear) {
      fail(ErrorKind::Structural, "kind_order", rec + " breaks the linear-then-radiative partition");
    }
    if (c.node_a == c.node_b) {
      fail(ErrorKind::Structural, "self_conductor", rec + " connects node " + std::to_string(c.node_a) + " to itself");
    }
    if (c.node_a < 0 || c.node_b < 0 || c.node_a >= s.num_nodes || c.node_b >= s.num_nodes) {
      fail(ErrorKind::Structural, "node_out_of_range", rec + " references a node outside [0, num_nodes)");
    }
    if (!(c.conductance > 0.0)) fail(ErrorKind::Structural, "nonpositive_conductance", rec + " has conductance <= 0");
    out.push_back(c);
  }
  return out;
}

std::vector<SubmodelTemperatures> load_submodel_temperatures(const fs::path& dir,
                                                             const std::vector<std::string>& names) {
  const Sizes s = read_sizes(dir);
  const SubmodelIndex index = parse_node_tree_fast(dir);

  std::vector<SubmodelTemperatures> out;
  if (names.empty()) {
    for (const auto& e : index.entries()) out.push_back({e.name, e.nodes, {}, {}});
  } else {
    for (const auto& name : names) out.push_back({name, index.entries()[index.position(name)].nodes, {}, {}});
  }
  if (index.num_nodes() != s.num_nodes) {
    fail(ErrorKind::Structural, "count_mismatch", "NODTRE head counts do not sum to SIZES num_nodes");
  }

  io::BinaryReader r(dir / kTempsFile);
  check_temps_size(r, s);
  std::vector<double> timestamps(static_cast<std::size_t>(s.num_timesteps));
  r.read_f64s(timestamps, "timestamps");
  for (auto& sm : out) {
    sm.timestamps = timestamps;
    sm.values.reserve(static_cast<std::size_t>(sm.nodes.size() * s.num_timesteps));
  }
  std::vector<double> row(static_cast<std::size_t>(s.num_nodes));
  for (std::int64_t t = 0; t < s.num_timesteps; ++t) {
    r.read_f64s(row, "row " + std::to_string(t));
    for (auto& sm : out) {
      sm.values.insert(sm.values.end(), row.begin() + sm.nodes.begin, row.begin() + sm.nodes.end);
    }
  }
  return out;
}

std::vector<SubmodelTemperatures> baseline_load_like_opentd(const fs::path& dir,
                                                            const std::vector<std::string>& names) {
  std::vector<SubmodelTemperatures> out;
  out.reserve(names.size());
  // Handles are opened once; only the reads are redundant. Every submodel
  // rewinds and pays for SIZES, all of NODTRE and all of TEMPS again.
  io::BinaryReader sizes_reader(dir / kSizesFile);
  io::BinaryReader tree_reader(dir / kNodeTreeFile);
  io::BinaryReader r(dir / kTempsFile);
  for (const auto& name : names) {
    sizes_reader.seek(0, "SIZES start");
    const Sizes s = read_sizes_from(sizes_reader);
    SubmodelTemperatures sm;
    sm.name = name;
    const std::vector<std::int64_t> columns = scan_node_tree_for(tree_reader, name, sm.nodes);

    r.seek(0, "TEMPS start");
    check_temps_size(r, s);
    sm.timestamps.resize(static_cast<std::size_t>(s.num_timesteps));
    r.read_f64s(sm.timestamps, "timestamps");
    sm.values.reserve(columns.size() * static_cast<std::size_t>(s.num_timesteps));
    std::vector<double> row(static_cast<std::size_t>(s.num_nodes));
    for (std::int64_t t = 0; t < s.num_timesteps; ++t) {
      r.read_f64s(row, "row " + std::to_string(t));
      for (std::int64_t c : columns) {
        if (c < 0 || c >= s.num_nodes) {
          fail(ErrorKind::Structural, "node_out_of_range", "NODTRE body index " + std::to_string(c) + " out of range");
        }
        sm.values.push_back(row[static_cast<std::size_t>(c)]);
      }
    }
    out.push_back(std::move(sm));
  }
  return out;
}

std::string to_json_string(const BenchReport& report) {
  nlohmann::json j;
  j["runs"] = report.runs;
  j["records"] = nlohmann::json::array();
  for (const auto& r : report.records) {
    j["records"].push_back({{"n", r.n},
                            {"num_submodels", r.num_submodels},
                            {"fast_seconds", r.fast_seconds},
                            {"baseline_seconds", r.baseline_seconds},
                            {"bytes_read_fast", r.bytes_read_fast},
                            {"bytes_read_baseline", r.bytes_read_baseline}});
  }
  return j.dump(2);
}

BenchReport bench_compare(const fs::path& dir, int runs) {
  if (runs < 1) fail(ErrorKind::Validation, "bad_runs", "runs must be >= 1");
#if defined(__GLIBC__)
  // glibc hands large freed blocks back to the kernel once they cross its
  // trim threshold, so past ~10 MB of output every run would pay first-touch
  // page faults that smaller runs never see. Keep the heap steady instead.
  mallopt(M_TRIM_THRESHOLD, std::numeric_limits<int>::max());
  mallopt(M_MMAP_THRESHOLD, 32 * 1024 * 1024);
#endif
  using clock = std::chrono::steady_clock;

  const Sizes s = read_sizes(dir);
  std::vector<std::string> names;
  for (const auto& h : read_node_tree_heads(dir)) names.push_back(h.name);

  BenchRecord rec;
  rec.n = s.num_nodes * s.num_timesteps;
  rec.num_submodels = s.num_submodels;
  // One untimed pass gathers the byte counters and warms the page cache; the
  // timed runs carry no instrumentation.
  {
    io::ReadTally tally;
    load_submodel_temperatures(dir);
    rec.bytes_read_fast = tally.total();
  }
  {
    io::ReadTally tally;
    baseline_load_like_opentd(dir, names);
    rec.bytes_read_baseline = tally.total();
  }
  double fast_total = 0.0;
  double baseline_total = 0.0;
  for (int run = 0; run < runs; ++run) {
    {
      auto t0 = clock::now();
      auto loaded = load_submodel_temperatures(dir);
      auto t1 = clock::now();
      fast_total += std::chrono::duration<double>(t1 - t0).count();
    }
    {
      auto t0 = clock::now();
      auto loaded = baseline_load_like_opentd(dir, names);
      auto t1 = clock::now();
      baseline_total += std::chrono::duration<double>(t1 - t0).count();
    }
  }
  rec.fast_seconds = fast_total / runs;
  rec.baseline_seconds = baseline_total / runs;

  BenchReport report;
  report.runs = runs;
  report.records.push_back(rec);
  return report;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    fail(ErrorKind::Validation, "bad_fit", "slope fit needs at least two paired samples");
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace hfv
