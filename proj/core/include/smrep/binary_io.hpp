#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "smrep/error.hpp"

namespace smrep::io {

/// Little-endian writer over a std::ostream.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void magic(std::string_view tag) { out_.write(tag.data(), static_cast<std::streamsize>(tag.size())); }
  void u8(std::uint8_t v) { put<1>(v); }
  void u32(std::uint32_t v) { put<4>(v); }
  void u64(std::uint64_t v) { put<8>(v); }
  void f32(float v) { put<4>(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { put<8>(std::bit_cast<std::uint64_t>(v)); }

  /// Bulk float32 write; the values are emitted in little-endian order.
  void f32_array(const float* data, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      out_.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
    } else {
      for (std::size_t i = 0; i < n; ++i) f32(data[i]);
    }
  }

 private:
  template <std::size_t N, typename U>
  void put(U v) {
    std::array<char, N> bytes{};
    for (std::size_t i = 0; i < N; ++i) bytes[i] = static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF);
    out_.write(bytes.data(), N);
  }

  std::ostream& out_;
};

/// Little-endian reader that tracks its byte offset so format errors can name it.
class BinaryReader {
 public:
  BinaryReader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

  std::uint64_t offset() const { return offset_; }

  void expect_magic(std::string_view tag) {
    std::string got(tag.size(), '\0');
    const auto at = offset_;
    read_raw(got.data(), got.size());
    if (got != tag) fail(at, "bad magic, expected \"" + std::string(tag) + "\"");
  }
  void expect_u32(std::uint32_t expected, std::string_view field) {
    const auto at = offset_;
    const auto v = u32();
    if (v != expected)
      fail(at, std::string(field) + " is " + std::to_string(v) + ", expected " + std::to_string(expected));
  }

  std::uint8_t u8() { return static_cast<std::uint8_t>(get<1>()); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get<4>()); }
  std::uint64_t u64() { return get<8>(); }
  float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(get<4>())); }
  double f64() { return std::bit_cast<double>(get<8>()); }

  void f32_array(float* data, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      read_raw(reinterpret_cast<char*>(data), n * sizeof(float));
    } else {
      for (std::size_t i = 0; i < n; ++i) data[i] = f32();
    }
  }

  [[noreturn]] void fail(std::uint64_t at, const std::string& why) const {
    throw FormatError(what_ + ": " + why + " at byte offset " + std::to_string(at));
  }

  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) fail(offset_, "trailing bytes");
  }

 private:
  template <std::size_t N>
  std::uint64_t get() {
    std::array<unsigned char, N> bytes{};
    read_raw(reinterpret_cast<char*>(bytes.data()), N);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < N; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return v;
  }

  void read_raw(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) fail(offset_ + static_cast<std::uint64_t>(in_.gcount()), "unexpected end of file");
    offset_ += n;
  }

  std::istream& in_;
  std::string what_;
  std::uint64_t offset_ = 0;
};

}  // namespace smrep::io
