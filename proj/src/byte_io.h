// SPDX-License-Identifier: Apache-2.0
// Little-endian byte buffer encoding shared by the binary file formats.
#ifndef XLING_SRC_BYTE_IO_H_
#define XLING_SRC_BYTE_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "xling/error.h"

namespace xling::detail {

class ByteWriter {
 public:
  void Bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void U16(std::uint16_t v) { Le(v, 2); }
  void U32(std::uint32_t v) { Le(v, 4); }
  void U64(std::uint64_t v) { Le(v, 8); }
  void F32(float v) { Le(std::bit_cast<std::uint32_t>(v), 4); }
  void F64(double v) { Le(std::bit_cast<std::uint64_t>(v), 8); }
  void Str16(std::string_view s) {
    if (s.size() > 0xFFFF) Fail(ErrorKind::kInvalidArgument, "string too long");
    U16(static_cast<std::uint16_t>(s.size()));
    Bytes(s);
  }

  const std::string &buffer() const { return buf_; }

 private:
  void Le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::string_view Bytes(std::size_t n) {
    Need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint16_t U16() { return static_cast<std::uint16_t>(Le(2)); }
  std::uint32_t U32() { return static_cast<std::uint32_t>(Le(4)); }
  std::uint64_t U64() { return Le(8); }
  float F32() { return std::bit_cast<float>(static_cast<std::uint32_t>(Le(4))); }
  double F64() { return std::bit_cast<double>(Le(8)); }
  std::string Str16() { return std::string(Bytes(U16())); }

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  void Need(std::size_t n) const {
    if (data_.size() - pos_ < n) Fail(ErrorKind::kTruncated, "truncated");
  }
  std::uint64_t Le(int n) {
    Need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::uint32_t Crc32(std::string_view bytes);

std::string ReadFileBytes(const std::filesystem::path &path);
// Writes via a temporary sibling and rename so readers never see partial files.
void WriteFileBytes(const std::filesystem::path &path, std::string_view bytes);

}  // namespace xling::detail

#endif  // XLING_SRC_BYTE_IO_H_
