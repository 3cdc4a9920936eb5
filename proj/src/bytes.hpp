#pragma once

// Little-endian byte buffers shared by the COLMAP binary parser and the
// checkpoint format.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "thermalsplat/error.hpp"

namespace thermalsplat::detail {

static_assert(std::endian::native == std::endian::little, "byte codecs assume a little-endian host");

class ByteWriter {
 public:
  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void put_bytes(std::span<const std::uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }
  void put_string(const std::string& s) {
    put<std::uint64_t>(s.size());
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void put_cstring(const std::string& s) {
    buf_.insert(buf_.end(), s.begin(), s.end());
    buf_.push_back(0);
  }
  void put_doubles(std::span<const double> v) {
    put<std::uint64_t>(v.size());
    for (double x : v) put(x);
  }
  std::vector<std::uint8_t>& bytes() { return buf_; }
  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

/// Bounds-checked reader. Errors name the source and the byte offset at
/// which the failing read started.
class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, std::string source, std::size_t base_offset = 0)
      : data_(data), source_(std::move(source)), base_(base_offset) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw DataError(source_ + ": " + what + " at byte " + std::to_string(base_ + at));
  }
  [[noreturn]] void fail(const std::string& what) const { fail(what, pos_); }

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::span<const std::uint8_t> get_bytes(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::string get_string() {
    const std::size_t at = pos_;
    const auto n = get<std::uint64_t>();
    if (n > remaining()) fail("string length exceeds data", at);
    auto b = get_bytes(static_cast<std::size_t>(n));
    return {b.begin(), b.end()};
  }
  std::string get_cstring() {
    const std::size_t start = pos_;
    while (pos_ < data_.size() && data_[pos_] != 0) ++pos_;
    if (pos_ == data_.size()) fail("unterminated string", start);
    std::string s(data_.begin() + start, data_.begin() + pos_);
    ++pos_;
    return s;
  }
  std::vector<double> get_doubles() {
    const std::size_t at = pos_;
    const auto n = get<std::uint64_t>();
    if (n > remaining() / sizeof(double)) fail("array length exceeds data", at);
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = get<double>();
    return v;
  }

 private:
  void need(std::size_t n) const {
    if (n > remaining()) fail("unexpected end of data");
  }

  std::span<const std::uint8_t> data_;
  std::string source_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace thermalsplat::detail
