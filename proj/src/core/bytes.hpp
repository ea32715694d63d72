#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "core/errors.hpp"

namespace amc {

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

// Append-only little-endian byte buffer.
class ByteWriter {
 public:
  void magic(const char tag[4]) { buf_.insert(buf_.end(), tag, tag + 4); }
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void i8(std::int8_t v) { buf_.push_back(static_cast<std::uint8_t>(v)); }
  void u16(std::uint16_t v) { raw(&v, 2); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f32(float v) { raw(&v, 4); }
  void f64(double v) { raw(&v, 8); }
  void str8(const std::string& s) {
    if (s.size() > 255) throw ParameterError("string too long for u8 length prefix");
    u8(static_cast<std::uint8_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }

  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 private:
  std::vector<std::uint8_t> buf_;
};

// Bounds-checked reader over an in-memory buffer; throws FormatError on
// truncation so a bad file can never yield a partial object.
class ByteReader {
 public:
  ByteReader(const std::uint8_t* p, std::size_t n) : p_(p), n_(n) {}
  explicit ByteReader(const std::vector<std::uint8_t>& v) : p_(v.data()), n_(v.size()) {}

  void expect_magic(const char tag[4], const std::string& what) {
    char got[4];
    raw(got, 4);
    if (std::memcmp(got, tag, 4) != 0) {
      throw FormatError(what + ": bad magic");
    }
  }
  std::uint8_t u8() { return take<std::uint8_t>(); }
  std::int8_t i8() { return static_cast<std::int8_t>(take<std::uint8_t>()); }
  std::uint16_t u16() { return take<std::uint16_t>(); }
  std::uint32_t u32() { return take<std::uint32_t>(); }
  std::uint64_t u64() { return take<std::uint64_t>(); }
  float f32() { return take<float>(); }
  double f64() { return take<double>(); }
  std::string str8() {
    std::size_t len = u8();
    std::string s(len, '\0');
    raw(s.data(), len);
    return s;
  }
  void raw(void* out, std::size_t n) {
    if (off_ + n > n_) throw FormatError("unexpected end of data");
    std::memcpy(out, p_ + off_, n);
    off_ += n;
  }
  std::size_t remaining() const { return n_ - off_; }
  void expect_end(const std::string& what) {
    if (off_ != n_) throw FormatError(what + ": trailing bytes");
  }

 private:
  template <typename T>
  T take() {
    T v;
    raw(&v, sizeof(T));
    return v;
  }

  const std::uint8_t* p_;
  std::size_t n_;
  std::size_t off_ = 0;
};

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return buf;
}

inline void write_file(const std::filesystem::path& path,
                       const void* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw IoError("write failed: " + path.string());
}

inline void write_file(const std::filesystem::path& path,
                       const std::vector<std::uint8_t>& bytes) {
  write_file(path, bytes.data(), bytes.size());
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_file(path, text.data(), text.size());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

}  // namespace amc
