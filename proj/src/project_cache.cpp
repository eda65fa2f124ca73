#include "hfv/project_cache.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <ctime>

#include <nlohmann/json.hpp>

#include "hfv/binary_io.hpp"
#include "hfv/error.hpp"

namespace hfv {

namespace {

using nlohmann::json;

std::string utc_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%016" PRIx64, v);
  return buf;
}

// Advisory exclusive lock on <project>/lock, released on destruction.
class WriterLock {
 public:
  explicit WriterLock(const fs::path& project_dir) {
    const fs::path path = project_dir / kLockFile;
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0) fail(ErrorKind::Io, "lock_failed", "cannot open lock file " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      fail(ErrorKind::Io, "lock_failed", "cannot lock " + path.string());
    }
  }
  ~WriterLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  WriterLock(const WriterLock&) = delete;
  WriterLock& operator=(const WriterLock&) = delete;

 private:
  int fd_ = -1;
};

void write_manifest(const fs::path& project_dir, const CacheManifest& m) {
  json j = {{"schema_version", m.schema_version},
            {"dataset_fingerprint", hex64(m.dataset_fingerprint)},
            {"num_nodes", m.num_nodes},
            {"num_timesteps", m.num_timesteps},
            {"cached_timesteps", m.cached_timesteps},
            {"created", m.created},
            {"updated", m.updated}};
  const std::string text = j.dump(2) + "\n";
  io::write_file_atomic(project_dir / kManifestFile, text);
}

void write_index_file(const fs::path& project_dir, const SubmodelIndex& index) {
  std::vector<char> buf;
  io::put_i64(buf, static_cast<std::int64_t>(index.size()));
  for (const auto& e : index.entries()) {
    io::put_u32(buf, static_cast<std::uint32_t>(e.name.size()));
    buf.insert(buf.end(), e.name.begin(), e.name.end());
    io::put_i64(buf, e.nodes.begin);
    io::put_i64(buf, e.nodes.end);
  }
  io::write_file_atomic(project_dir / kIndexFile, buf);
}

}  // namespace

std::uint64_t dataset_fingerprint(const fs::path& dataset_dir) {
  std::vector<char> bytes = io::read_whole_file(dataset_dir / kSizesFile);
  if (bytes.size() != kSizesBytes) {
    fail(ErrorKind::Truncation, "truncated", "SIZES must be exactly " + std::to_string(kSizesBytes) + " bytes");
  }
  for (const auto& h : read_node_tree_heads(dataset_dir)) {
    io::put_u32(bytes, static_cast<std::uint32_t>(h.name.size()));
    bytes.insert(bytes.end(), h.name.begin(), h.name.end());
    io::put_i64(bytes, h.node_count);
    io::put_i64(bytes, h.reserved_meta);
  }
  return io::fnv1a64(bytes);
}

fs::path timestep_file(const fs::path& project_dir, std::int64_t t) {
  return project_dir / ("temps_" + std::to_string(t) + ".bin");
}

CacheManifest read_manifest(const fs::path& project_dir) {
  const auto raw = io::read_whole_file(project_dir / kManifestFile);
  try {
    const json j = json::parse(raw.begin(), raw.end());
    CacheManifest m;
    m.schema_version = j.at("schema_version").get<int>();
    m.dataset_fingerprint = std::stoull(j.at("dataset_fingerprint").get<std::string>(), nullptr, 16);
    m.num_nodes = j.at("num_nodes").get<std::int64_t>();
    m.num_timesteps = j.at("num_timesteps").get<std::int64_t>();
    m.cached_timesteps = j.at("cached_timesteps").get<std::vector<std::int64_t>>();
    m.created = j.at("created").get<std::string>();
    m.updated = j.at("updated").get<std::string>();
    if (!std::is_sorted(m.cached_timesteps.begin(), m.cached_timesteps.end()) ||
        std::adjacent_find(m.cached_timesteps.begin(), m.cached_timesteps.end()) != m.cached_timesteps.end()) {
      fail(ErrorKind::CorruptCache, "corrupt_cache", "manifest timesteps are not sorted and unique");
    }
    return m;
  } catch (const json::exception& e) {
    fail(ErrorKind::CorruptCache, "corrupt_cache", std::string("unreadable manifest: ") + e.what());
  } catch (const std::logic_error& e) {
    fail(ErrorKind::CorruptCache, "corrupt_cache", std::string("unreadable manifest fingerprint: ") + e.what());
  }
}

SubmodelIndex read_index_file(const fs::path& project_dir) {
  io::BinaryReader r(project_dir / kIndexFile);
  const std::int64_t count = r.read_i64("index entry count");
  if (count < 0) fail(ErrorKind::CorruptCache, "corrupt_cache", "index.bin has a negative entry count");
  std::vector<SubmodelEntry> entries;
  for (std::int64_t i = 0; i < count; ++i) {
    SubmodelEntry e;
    e.name.resize(r.read_u32("index name length"));
    r.read_bytes(e.name, "index name");
    e.nodes.begin = r.read_i64("index range begin");
    e.nodes.end = r.read_i64("index range end");
    entries.push_back(std::move(e));
  }
  return SubmodelIndex(std::move(entries));
}

ProjectHandle init_project(const fs::path& project_dir, const fs::path& dataset_dir) {
  ProjectHandle h;
  h.project_dir_ = project_dir;
  h.dataset_dir_ = dataset_dir;
  h.sizes_ = read_sizes(dataset_dir);
  h.index_ = parse_node_tree_fast(dataset_dir);
  const std::uint64_t fingerprint = dataset_fingerprint(dataset_dir);

  std::error_code ec;
  fs::create_directories(project_dir, ec);
  if (ec) fail(ErrorKind::Io, "write_failed", "cannot create project " + project_dir.string() + ": " + ec.message());

  if (fs::exists(project_dir / kManifestFile)) {
    h.manifest_ = read_manifest(project_dir);
    if (h.manifest_.dataset_fingerprint != fingerprint) {
      fail(ErrorKind::StaleCache, "stale_cache",
           "project " + project_dir.string() + " was built from a different dataset (fingerprint " +
               hex64(h.manifest_.dataset_fingerprint) + ", dataset now " + hex64(fingerprint) + ")");
    }
    if (!fs::exists(project_dir / kIndexFile)) {
      WriterLock lock(project_dir);
      write_index_file(project_dir, h.index_);
    }
    return h;
  }

  WriterLock lock(project_dir);
  write_index_file(project_dir, h.index_);
  CacheManifest m;
  m.dataset_fingerprint = fingerprint;
  m.num_nodes = h.sizes_.num_nodes;
  m.num_timesteps = h.sizes_.num_timesteps;
  m.created = utc_now();
  m.updated = m.created;
  write_manifest(project_dir, m);
  h.manifest_ = std::move(m);
  return h;
}

void cache_timestep(ProjectHandle& handle, std::int64_t t, std::span<const double> temps_row) {
  if (t < 0 || t >= handle.sizes_.num_timesteps) {
    fail(ErrorKind::Bounds, "bad_timestep",
         "timestep " + std::to_string(t) + " outside [0, " + std::to_string(handle.sizes_.num_timesteps) + ")");
  }
  if (static_cast<std::int64_t>(temps_row.size()) != handle.sizes_.num_nodes) {
    fail(ErrorKind::Validation, "bad_row", "temperature row has " + std::to_string(temps_row.size()) +
                                               " values, dataset has " + std::to_string(handle.sizes_.num_nodes));
  }
  const fs::path& dir = handle.project_dir_;
  if (!fs::exists(dir / kManifestFile)) {
    fail(ErrorKind::Refusal, "not_a_project", dir.string() + " has no manifest; reopen the project first");
  }
  WriterLock lock(dir);
  CacheManifest m = read_manifest(dir);
  auto pos = std::lower_bound(m.cached_timesteps.begin(), m.cached_timesteps.end(), t);
  if (pos != m.cached_timesteps.end() && *pos == t) {
    handle.manifest_ = std::move(m);
    return;
  }
  // Data file first, manifest second: a failure in between leaves an orphan
  // file that the (unchanged) manifest does not list.
  io::write_file_atomic(timestep_file(dir, t),
                        {reinterpret_cast<const char*>(temps_row.data()), temps_row.size_bytes()});
  m.cached_timesteps.insert(pos, t);
  m.updated = utc_now();
  write_manifest(dir, m);
  handle.manifest_ = std::move(m);
}

std::optional<std::vector<double>> load_cached(const ProjectHandle& handle, std::int64_t t) {
  const fs::path& dir = handle.project_dir();
  if (!fs::exists(dir / kManifestFile)) return std::nullopt;
  const CacheManifest m = read_manifest(dir);
  if (!std::binary_search(m.cached_timesteps.begin(), m.cached_timesteps.end(), t)) return std::nullopt;

  const fs::path file = timestep_file(dir, t);
  std::error_code ec;
  const auto size = fs::file_size(file, ec);
  if (ec) fail(ErrorKind::CorruptCache, "corrupt_cache", "manifest lists " + file.filename().string() + " but it is missing");
  const auto want = static_cast<std::uintmax_t>(m.num_nodes) * 8;
  if (size != want) {
    fail(ErrorKind::CorruptCache, "corrupt_cache",
         file.filename().string() + " is " + std::to_string(size) + " bytes, expected " + std::to_string(want));
  }
  std::vector<double> row(static_cast<std::size_t>(m.num_nodes));
  io::BinaryReader r(file);
  r.read_f64s(row, file.filename().string());
  return row;
}

void clear_project(const fs::path& project_dir) {
  if (!fs::is_regular_file(project_dir / kManifestFile)) {
    fail(ErrorKind::Refusal, "not_a_project",
         "refusing to clear " + project_dir.string() + ": no " + kManifestFile + " found");
  }
  // Manifest goes first so an interrupted clear only leaves orphans.
  fs::remove(project_dir / kManifestFile);
  std::vector<fs::path> doomed;
  for (const auto& entry : fs::directory_iterator(project_dir)) {
    const std::string name = entry.path().filename().string();
    const bool temps = name.rfind("temps_", 0) == 0 &&
                       (name.ends_with(".bin") || name.ends_with(".bin.tmp"));
    if (temps || name == kIndexFile || name == std::string(kIndexFile) + ".tmp" ||
        name == std::string(kManifestFile) + ".tmp" || name == kLockFile) {
      doomed.push_back(entry.path());
    }
  }
  for (const auto& p : doomed) fs::remove(p);
}

}  // namespace hfv
