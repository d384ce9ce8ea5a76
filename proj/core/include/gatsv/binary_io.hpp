// SPDX-License-Identifier: Apache-2.0
//
// Little-endian primitives shared by the GATV1, BVEC1 and SSEF1 formats:
//   u32/u64  little-endian unsigned
//   f64      IEEE-754 binary64, little-endian
//   string   u32 byte length, then the UTF-8 bytes
//   matrix   u32 rows, u32 cols, rows*cols f64 row-major

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "gatsv/numeric.hpp"

namespace gatsv {

class ByteWriter {
 public:
  void magic(std::string_view tag) { buffer_.append(tag); }
  void u8(std::uint8_t v) { buffer_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void string(std::string_view s);
  void matrix(const Mat& m);

  const std::string& bytes() const noexcept { return buffer_; }
  std::string take() { return std::move(buffer_); }

 private:
  std::string buffer_;
};

// Bounds-checked reader; every failure is a FormatError carrying the byte
// offset at which the read was attempted.
class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  void expect_magic(std::string_view tag);
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string string();
  Mat matrix();

  std::uint64_t offset() const noexcept { return pos_; }
  bool at_end() const noexcept { return pos_ == bytes_.size(); }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  void expect_end() const;
  [[noreturn]] void fail(const std::string& what) const;

 private:
  std::string_view take(std::size_t n, const char* what);

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace gatsv
