#pragma once

// Little-endian binary readers/writers for the project's file formats.
// Internal header, not installed.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "triavatar/errors.hpp"

namespace triavatar::detail {

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

class ByteReader {
 public:
  explicit ByteReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw InputError("cannot open '" + path + "'");
  }

  std::uint64_t offset() const { return offset_; }
  const std::string& path() const { return path_; }

  void expect_magic(const char magic[4], const std::string& what = "file") {
    char buf[4];
    read_raw(buf, 4, "magic");
    if (std::memcmp(buf, magic, 4) != 0)
      throw FormatError(path_ + ": bad magic for " + what, 0);
  }

  std::uint32_t read_u32(const std::string& what = "u32 field") {
    std::uint32_t v;
    read_raw(&v, sizeof v, what);
    return v;
  }

  float read_f32(const std::string& what = "f32 field") {
    float v;
    read_raw(&v, sizeof v, what);
    return v;
  }

  std::uint8_t read_u8(const std::string& what = "u8 field") {
    std::uint8_t v;
    read_raw(&v, sizeof v, what);
    return v;
  }

  void read_f32_block(float* dst, std::size_t count, const std::string& what = "f32 block") {
    read_raw(dst, count * sizeof(float), what);
  }

  void read_u32_block(std::uint32_t* dst, std::size_t count,
                      const std::string& what = "u32 block") {
    read_raw(dst, count * sizeof(std::uint32_t), what);
  }

  void read_u8_block(std::uint8_t* dst, std::size_t count, const std::string& what = "u8 block") {
    read_raw(dst, count, what);
  }

  // Fails if any payload bytes remain unread.
  void expect_eof() {
    char c;
    in_.read(&c, 1);
    if (!in_.eof())
      throw FormatError(path_ + ": trailing bytes after payload", offset_);
  }

 private:
  void read_raw(void* dst, std::size_t n, const std::string& what) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw FormatError(path_ + ": truncated while reading " + what, offset_);
    offset_ += n;
  }

  std::string path_;
  std::ifstream in_;
  std::uint64_t offset_ = 0;
};

class ByteWriter {
 public:
  explicit ByteWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw InputError("cannot open '" + path + "' for writing");
  }

  void write_magic(const char magic[4]) { write_raw(magic, 4); }
  void write_u32(std::uint32_t v) { write_raw(&v, sizeof v); }
  void write_f32(float v) { write_raw(&v, sizeof v); }
  void write_u8(std::uint8_t v) { write_raw(&v, sizeof v); }
  void write_f32_block(const float* src, std::size_t count) {
    write_raw(src, count * sizeof(float));
  }
  void write_u32_block(const std::uint32_t* src, std::size_t count) {
    write_raw(src, count * sizeof(std::uint32_t));
  }
  void write_u8_block(const std::uint8_t* src, std::size_t count) { write_raw(src, count); }

  void close() {
    out_.close();
    if (!out_) throw FormatError("write failed for '" + path_ + "'");
  }

 private:
  void write_raw(const void* src, std::size_t n) {
    out_.write(static_cast<const char*>(src), static_cast<std::streamsize>(n));
  }

  std::string path_;
  std::ofstream out_;
};

}  // namespace triavatar::detail
