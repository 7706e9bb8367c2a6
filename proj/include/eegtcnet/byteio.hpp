#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eegtcnet {

enum class FormatErrc {
  bad_magic,
  version_mismatch,
  truncated,
  trailing_bytes,
  bad_metadata,
  bad_dtype,
  unknown_tensor,
  duplicate_tensor,
  missing_parameter,
  dims_mismatch,
  manifest_mismatch,
  invalid_value,
};

inline std::string_view to_string(FormatErrc e) {
  switch (e) {
    case FormatErrc::bad_magic: return "bad magic";
    case FormatErrc::version_mismatch: return "version mismatch";
    case FormatErrc::truncated: return "truncated payload";
    case FormatErrc::trailing_bytes: return "trailing bytes";
    case FormatErrc::bad_metadata: return "bad metadata";
    case FormatErrc::bad_dtype: return "bad dtype";
    case FormatErrc::unknown_tensor: return "unknown tensor name";
    case FormatErrc::duplicate_tensor: return "duplicate tensor";
    case FormatErrc::missing_parameter: return "missing parameter";
    case FormatErrc::dims_mismatch: return "dims mismatch";
    case FormatErrc::manifest_mismatch: return "manifest mismatch";
    case FormatErrc::invalid_value: return "invalid value";
  }
  return "format error";
}

class FormatError : public std::runtime_error {
 public:
  FormatError(FormatErrc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}
  FormatErrc code() const noexcept { return code_; }

 private:
  FormatErrc code_;
};

using Bytes = std::vector<std::uint8_t>;

// Little-endian writer, independent of host byte order.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { put_le(v, 2); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void i32(std::int32_t v) { put_le(static_cast<std::uint32_t>(v), 4); }
  void f32(float v) { put_le(std::bit_cast<std::uint32_t>(v), 4); }
  void raw(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void i8s(std::span<const std::int8_t> v) {
    for (auto c : v) buf_.push_back(static_cast<std::uint8_t>(c));
  }

  Bytes take() && { return std::move(buf_); }
  std::size_t size() const noexcept { return buf_.size(); }

 private:
  void put_le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  Bytes buf_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> data, std::string_view what) : data_(data), what_(what) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1, "u8")); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get_le(2, "u16")); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4, "u32")); }
  std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(get_le(4, "i32"))); }
  float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(get_le(4, "f32"))); }

  std::string str(std::size_t n, const char* field) {
    need(n, field);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  void f32s(std::span<float> out, const char* field) {
    need(out.size() * 4, field);
    for (auto& v : out) v = f32();
  }
  void i8s(std::span<std::int8_t> out, const char* field) {
    need(out.size(), field);
    for (auto& v : out) v = static_cast<std::int8_t>(data_[pos_++]);
  }

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  std::size_t position() const noexcept { return pos_; }

  void expect_end() const {
    if (remaining() != 0) {
      throw FormatError(FormatErrc::trailing_bytes,
                        std::string(what_) + ": " + std::to_string(remaining()) + " unexpected trailing bytes");
    }
  }

  void need(std::size_t n, const char* field) const {
    if (remaining() < n) {
      throw FormatError(FormatErrc::truncated, std::string(what_) + ": need " + std::to_string(n) +
                                                   " bytes for " + field + " at offset " + std::to_string(pos_) +
                                                   ", " + std::to_string(remaining()) + " left");
    }
  }

 private:
  std::uint64_t get_le(int n, const char* field) {
    need(static_cast<std::size_t>(n), field);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> data_;
  std::string_view what_;
  std::size_t pos_ = 0;
};

}  // namespace eegtcnet
