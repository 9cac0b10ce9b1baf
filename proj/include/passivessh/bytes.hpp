#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pssh {

using Bytes = std::vector<std::uint8_t>;

Bytes to_bytes(std::string_view s);
std::string to_text(std::span<const std::uint8_t> b);

std::string to_hex(std::span<const std::uint8_t> b);

std::string base64_encode(std::span<const std::uint8_t> b);
Bytes base64_decode(std::string_view text);

Bytes random_bytes(std::size_t n);

bool is_valid_utf8(std::string_view s);

// Big-endian cursor over an in-memory buffer. Out-of-bounds reads and
// ill-formed length prefixes throw Error{malformed}.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return remaining() == 0; }

  std::uint8_t u8();
  std::uint32_t u32();
  std::span<const std::uint8_t> raw(std::size_t n);
  Bytes string_bytes();   // uint32 length-prefixed
  std::string string_text();
  std::vector<std::string> name_list();

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

class ByteWriter {
 public:
  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void raw(std::span<const std::uint8_t> b);
  void string(std::span<const std::uint8_t> b);
  void string(std::string_view s);
  void name_list(const std::vector<std::string>& names);

  const Bytes& data() const { return out_; }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::vector<std::string> split(std::string_view s, char sep);

}  // namespace pssh
