#include "hfv/binary_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>

#include "hfv/error.hpp"

namespace hfv::io {

namespace {

thread_local ReadTally* active_tally = nullptr;

template <typename T>
T byteswap_if_big(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

template <typename T>
T decode(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return byteswap_if_big(v);
}

bool is_under(const std::string& file, const std::string& dir) {
  if (file.size() <= dir.size() || file.compare(0, dir.size(), dir) != 0) return false;
  return dir.back() == '/' || file[dir.size()] == '/';
}

std::string key_for(const fs::path& p) { return p.lexically_normal().generic_string(); }

}  // namespace

ReadTally::ReadTally() : parent_(active_tally) { active_tally = this; }

ReadTally::~ReadTally() {
  active_tally = parent_;
  if (parent_ != nullptr) {
    for (const auto& [file, bytes] : per_file_) parent_->per_file_[file] += bytes;
  }
}

std::uint64_t ReadTally::total() const {
  std::uint64_t sum = 0;
  for (const auto& [file, bytes] : per_file_) sum += bytes;
  return sum;
}

std::uint64_t ReadTally::bytes_for(const fs::path& file) const {
  auto it = per_file_.find(key_for(file));
  return it == per_file_.end() ? 0 : it->second;
}

std::uint64_t ReadTally::bytes_under(const fs::path& dir) const {
  std::string prefix = key_for(dir);
  while (prefix.size() > 1 && prefix.back() == '/') prefix.pop_back();
  std::uint64_t sum = 0;
  for (const auto& [file, bytes] : per_file_) {
    if (is_under(file, prefix)) sum += bytes;
  }
  return sum;
}

void ReadTally::record(const fs::path& file, std::uint64_t bytes) {
  if (active_tally != nullptr && bytes > 0) active_tally->per_file_[key_for(file)] += bytes;
}

BinaryReader::BinaryReader(const fs::path& file) : path_(file) {
  std::error_code ec;
  size_ = fs::file_size(file, ec);
  if (ec) fail(ErrorKind::Io, "missing_file", "cannot stat " + file.string() + ": " + ec.message());
  in_.open(file, std::ios::in | std::ios::binary);
  if (!in_) fail(ErrorKind::Io, "missing_file", "cannot open " + file.string());
}

void BinaryReader::read_bytes(std::span<char> out, const std::string& what) {
  if (out.empty()) return;
  if (out.size() > remaining()) {
    fail(ErrorKind::Truncation, "truncated",
         path_.filename().string() + ": truncated while reading " + what + " at offset " +
             std::to_string(offset_) + " (need " + std::to_string(out.size()) + " bytes, " +
             std::to_string(remaining()) + " left)");
  }
  in_.read(out.data(), static_cast<std::streamsize>(out.size()));
  auto got = static_cast<std::uint64_t>(in_.gcount());
  ReadTally::record(path_, got);
  if (got != out.size()) {
    fail(ErrorKind::Io, "read_failed", path_.filename().string() + ": read failed on " + what);
  }
  offset_ += got;
}

std::uint8_t BinaryReader::read_u8(const std::string& what) {
  char b = 0;
  read_bytes({&b, 1}, what);
  return static_cast<std::uint8_t>(b);
}

std::uint32_t BinaryReader::read_u32(const std::string& what) {
  char b[4];
  read_bytes(b, what);
  return decode<std::uint32_t>(b);
}

std::int64_t BinaryReader::read_i64(const std::string& what) {
  char b[8];
  read_bytes(b, what);
  return decode<std::int64_t>(b);
}

double BinaryReader::read_f64(const std::string& what) {
  char b[8];
  read_bytes(b, what);
  return decode<double>(b);
}

void BinaryReader::read_f64s(std::span<double> out, const std::string& what) {
  read_bytes({reinterpret_cast<char*>(out.data()), out.size_bytes()}, what);
  if constexpr (std::endian::native != std::endian::little) {
    for (double& v : out) v = byteswap_if_big(v);
  }
}

void BinaryReader::read_i64s(std::span<std::int64_t> out, const std::string& what) {
  read_bytes({reinterpret_cast<char*>(out.data()), out.size_bytes()}, what);
  if constexpr (std::endian::native != std::endian::little) {
    for (auto& v : out) v = byteswap_if_big(v);
  }
}

void BinaryReader::skip(std::uint64_t bytes, const std::string& what) {
  if (bytes > remaining()) {
    fail(ErrorKind::Structural, "seek_past_eof",
         path_.filename().string() + ": seeking over " + what + " runs past end of file (offset " +
             std::to_string(offset_) + " + " + std::to_string(bytes) + " > " +
             std::to_string(size_) + ")");
  }
  seek(offset_ + bytes, what);
}

void BinaryReader::seek(std::uint64_t absolute, const std::string& what) {
  if (absolute > size_) {
    fail(ErrorKind::Structural, "seek_past_eof",
         path_.filename().string() + ": seek to " + std::to_string(absolute) + " for " + what +
             " is past end of file");
  }
  in_.seekg(static_cast<std::streamoff>(absolute));
  if (!in_) fail(ErrorKind::Io, "seek_failed", path_.filename().string() + ": seek failed");
  offset_ = absolute;
}

BinaryWriter::BinaryWriter(const fs::path& file) : path_(file) {
  out_.open(file, std::ios::out | std::ios::binary | std::ios::trunc);
  if (!out_) fail(ErrorKind::Io, "write_failed", "cannot create " + file.string());
}

void BinaryWriter::write_bytes(std::span<const char> bytes) {
  out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out_) fail(ErrorKind::Io, "write_failed", "write failed on " + path_.string());
}

void BinaryWriter::write_u8(std::uint8_t v) {
  char b = static_cast<char>(v);
  write_bytes({&b, 1});
}

void BinaryWriter::write_u32(std::uint32_t v) {
  v = byteswap_if_big(v);
  write_bytes({reinterpret_cast<const char*>(&v), sizeof v});
}

void BinaryWriter::write_i64(std::int64_t v) {
  v = byteswap_if_big(v);
  write_bytes({reinterpret_cast<const char*>(&v), sizeof v});
}

void BinaryWriter::write_f64(double v) {
  v = byteswap_if_big(v);
  write_bytes({reinterpret_cast<const char*>(&v), sizeof v});
}

void BinaryWriter::write_f64s(std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    write_bytes({reinterpret_cast<const char*>(values.data()), values.size_bytes()});
  } else {
    for (double v : values) write_f64(v);
  }
}

void BinaryWriter::commit() {
  out_.flush();
  if (!out_) fail(ErrorKind::Io, "write_failed", "flush failed on " + path_.string());
  out_.close();
}

void put_u32(std::vector<char>& buf, std::uint32_t v) {
  v = byteswap_if_big(v);
  const char* p = reinterpret_cast<const char*>(&v);
  buf.insert(buf.end(), p, p + sizeof v);
}

void put_i64(std::vector<char>& buf, std::int64_t v) {
  v = byteswap_if_big(v);
  const char* p = reinterpret_cast<const char*>(&v);
  buf.insert(buf.end(), p, p + sizeof v);
}

std::vector<char> read_whole_file(const fs::path& file) {
  BinaryReader reader(file);
  std::vector<char> bytes(reader.size());
  reader.read_bytes(bytes, "file contents");
  return bytes;
}

void write_file_atomic(const fs::path& file, std::span<const char> bytes) {
  fs::path tmp = file;
  tmp += ".tmp";
  {
    BinaryWriter w(tmp);
    w.write_bytes(bytes);
    w.commit();
  }
  std::error_code ec;
  fs::rename(tmp, file, ec);
  if (ec) fail(ErrorKind::Io, "write_failed", "rename onto " + file.string() + " failed: " + ec.message());
}

std::uint64_t fnv1a64(std::span<const char> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace hfv::io
