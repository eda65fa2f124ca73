#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace hfv::io {

namespace fs = std::filesystem;

/// Counts bytes read per file by every BinaryReader on the current thread
/// while the tally is alive. Tallies nest; the innermost one receives counts
/// and forwards them to its parent on destruction.
class ReadTally {
 public:
  ReadTally();
  ~ReadTally();
  ReadTally(const ReadTally&) = delete;
  ReadTally& operator=(const ReadTally&) = delete;

  std::uint64_t total() const;
  std::uint64_t bytes_for(const fs::path& file) const;
  /// Sum over all files located under `dir` (lexically).
  std::uint64_t bytes_under(const fs::path& dir) const;
  void reset() { per_file_.clear(); }

  static void record(const fs::path& file, std::uint64_t bytes);

 private:
  std::map<std::string, std::uint64_t> per_file_;
  ReadTally* parent_;
};

/// Sequential little-endian reader with explicit seek and a byte budget
/// reported to the active ReadTally.
class BinaryReader {
 public:
  explicit BinaryReader(const fs::path& file);

  const fs::path& path() const { return path_; }
  std::uint64_t size() const { return size_; }
  std::uint64_t offset() const { return offset_; }
  std::uint64_t remaining() const { return size_ - offset_; }

  /// Reads exactly `out.size()` bytes or throws a truncation error.
  void read_bytes(std::span<char> out, const std::string& what);
  std::uint8_t read_u8(const std::string& what);
  std::uint32_t read_u32(const std::string& what);
  std::int64_t read_i64(const std::string& what);
  double read_f64(const std::string& what);
  void read_f64s(std::span<double> out, const std::string& what);
  void read_i64s(std::span<std::int64_t> out, const std::string& what);

  /// Moves forward without reading; seeking past EOF is a structural error.
  void skip(std::uint64_t bytes, const std::string& what);
  void seek(std::uint64_t absolute, const std::string& what);

 private:
  fs::path path_;
  std::ifstream in_;
  std::uint64_t size_ = 0;
  std::uint64_t offset_ = 0;
};

/// Buffered little-endian writer; `commit()` flushes and checks the stream.
class BinaryWriter {
 public:
  explicit BinaryWriter(const fs::path& file);

  void write_bytes(std::span<const char> bytes);
  void write_u8(std::uint8_t v);
  void write_u32(std::uint32_t v);
  void write_i64(std::int64_t v);
  void write_f64(double v);
  void write_f64s(std::span<const double> values);
  void commit();

 private:
  fs::path path_;
  std::ofstream out_;
};

/// Appends little-endian encodings to an in-memory buffer.
void put_u32(std::vector<char>& buf, std::uint32_t v);
void put_i64(std::vector<char>& buf, std::int64_t v);

std::vector<char> read_whole_file(const fs::path& file);

/// Writes to `<file>.tmp` then renames over `file`.
void write_file_atomic(const fs::path& file, std::span<const char> bytes);

std::uint64_t fnv1a64(std::span<const char> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace hfv::io
