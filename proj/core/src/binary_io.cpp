// SPDX-License-Identifier: Apache-2.0
#include "gatsv/binary_io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

#include "gatsv/errors.hpp"

namespace gatsv {

static_assert(sizeof(double) == 8);

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buffer_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buffer_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::string(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  buffer_.append(s);
}

void ByteWriter::matrix(const Mat& m) {
  u32(static_cast<std::uint32_t>(m.rows()));
  u32(static_cast<std::uint32_t>(m.cols()));
  for (double v : m.data()) f64(v);
}

void ByteReader::fail(const std::string& what) const { throw FormatError(what, pos_); }

std::string_view ByteReader::take(std::size_t n, const char* what) {
  if (remaining() < n) {
    fail(std::string("truncated input reading ") + what + " (need " + std::to_string(n) +
         " bytes, have " + std::to_string(remaining()) + ")");
  }
  std::string_view out = bytes_.substr(pos_, n);
  pos_ += n;
  return out;
}

void ByteReader::expect_magic(std::string_view tag) {
  if (remaining() < tag.size() || bytes_.substr(pos_, tag.size()) != tag) {
    fail("bad magic, expected \"" + std::string(tag) + "\"");
  }
  pos_ += tag.size();
}

std::uint8_t ByteReader::u8() { return static_cast<std::uint8_t>(take(1, "u8")[0]); }

std::uint32_t ByteReader::u32() {
  auto b = take(4, "u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

std::uint64_t ByteReader::u64() {
  auto b = take(8, "u64");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

double ByteReader::f64() {
  const std::uint64_t start = pos_;
  const double v = std::bit_cast<double>(u64());
  if (!std::isfinite(v)) throw FormatError("non-finite value", start);
  return v;
}

std::string ByteReader::string() {
  const std::uint32_t n = u32();
  return std::string(take(n, "string"));
}

Mat ByteReader::matrix() {
  const std::uint64_t start = pos_;
  const std::uint32_t rows = u32();
  const std::uint32_t cols = u32();
  const std::uint64_t count = static_cast<std::uint64_t>(rows) * cols;
  if (count * 8 > remaining()) {
    throw FormatError("truncated input: matrix " + std::to_string(rows) + "x" +
                          std::to_string(cols) + " needs " + std::to_string(count * 8) + " bytes",
                      start);
  }
  std::vector<double> data(count);
  for (double& v : data) v = f64();
  return Mat(rows, cols, std::move(data));
}

void ByteReader::expect_end() const {
  if (!at_end()) fail(std::to_string(remaining()) + " unexpected trailing bytes");
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write to '" + path.string() + "' failed");
}

}  // namespace gatsv
