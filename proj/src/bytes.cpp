#include "passivessh/bytes.hpp"

#include <openssl/rand.h>

#include "passivessh/errors.hpp"

namespace pssh {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";
constexpr char kB64Digits[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

}  // namespace

Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

std::string to_text(std::span<const std::uint8_t> b) {
  return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

std::string to_hex(std::span<const std::uint8_t> b) {
  std::string out;
  out.reserve(b.size() * 2);
  for (std::uint8_t v : b) {
    out.push_back(kHexDigits[v >> 4]);
    out.push_back(kHexDigits[v & 0x0f]);
  }
  return out;
}

std::string base64_encode(std::span<const std::uint8_t> b) {
  std::string out;
  out.reserve((b.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= b.size(); i += 3) {
    std::uint32_t v = (b[i] << 16) | (b[i + 1] << 8) | b[i + 2];
    out.push_back(kB64Digits[(v >> 18) & 63]);
    out.push_back(kB64Digits[(v >> 12) & 63]);
    out.push_back(kB64Digits[(v >> 6) & 63]);
    out.push_back(kB64Digits[v & 63]);
  }
  std::size_t rest = b.size() - i;
  if (rest == 1) {
    std::uint32_t v = b[i] << 16;
    out.push_back(kB64Digits[(v >> 18) & 63]);
    out.push_back(kB64Digits[(v >> 12) & 63]);
    out.append("==");
  } else if (rest == 2) {
    std::uint32_t v = (b[i] << 16) | (b[i + 1] << 8);
    out.push_back(kB64Digits[(v >> 18) & 63]);
    out.push_back(kB64Digits[(v >> 12) & 63]);
    out.push_back(kB64Digits[(v >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

Bytes base64_decode(std::string_view text) {
  // Padding is optional so fingerprint-style unpadded digests decode too.
  while (!text.empty() && text.back() == '=') text.remove_suffix(1);
  Bytes out;
  out.reserve(text.size() / 4 * 3 + 3);
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    int v = b64_value(c);
    if (v < 0) throw Error(ErrorKind::malformed, "invalid base64 character");
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xff));
    }
  }
  if (bits >= 6) throw Error(ErrorKind::malformed, "truncated base64 input");
  return out;
}

Bytes random_bytes(std::size_t n) {
  Bytes out(n);
  if (n > 0 && RAND_bytes(out.data(), static_cast<int>(n)) != 1)
    throw Error(ErrorKind::io_error, "random generator failure");
  return out;
}

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<std::uint8_t>(s[i]);
    std::size_t len;
    if (c < 0x80) len = 1;
    else if ((c & 0xe0) == 0xc0) len = 2;
    else if ((c & 0xf0) == 0xe0) len = 3;
    else if ((c & 0xf8) == 0xf0) len = 4;
    else return false;
    if (i + len > s.size()) return false;
    for (std::size_t j = 1; j < len; ++j)
      if ((static_cast<std::uint8_t>(s[i + j]) & 0xc0) != 0x80) return false;
    i += len;
  }
  return true;
}

std::uint8_t ByteReader::u8() {
  if (remaining() < 1) throw Error(ErrorKind::malformed, "truncated buffer");
  return data_[pos_++];
}

std::uint32_t ByteReader::u32() {
  if (remaining() < 4) throw Error(ErrorKind::malformed, "truncated buffer");
  std::uint32_t v = (static_cast<std::uint32_t>(data_[pos_]) << 24) |
                    (static_cast<std::uint32_t>(data_[pos_ + 1]) << 16) |
                    (static_cast<std::uint32_t>(data_[pos_ + 2]) << 8) |
                    static_cast<std::uint32_t>(data_[pos_ + 3]);
  pos_ += 4;
  return v;
}

std::span<const std::uint8_t> ByteReader::raw(std::size_t n) {
  if (remaining() < n) throw Error(ErrorKind::malformed, "truncated buffer");
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

Bytes ByteReader::string_bytes() {
  std::uint32_t len = u32();
  if (remaining() < len) throw Error(ErrorKind::malformed, "truncated string field");
  auto b = raw(len);
  return Bytes(b.begin(), b.end());
}

std::string ByteReader::string_text() {
  std::uint32_t len = u32();
  if (remaining() < len) throw Error(ErrorKind::malformed, "truncated string field");
  auto b = raw(len);
  return std::string(reinterpret_cast<const char*>(b.data()), b.size());
}

std::vector<std::string> ByteReader::name_list() {
  std::string text = string_text();
  if (!is_valid_utf8(text)) throw Error(ErrorKind::malformed, "non-UTF8 name in name-list");
  if (text.empty()) return {};
  auto names = split(text, ',');
  for (const auto& n : names)
    if (n.empty()) throw Error(ErrorKind::malformed, "empty name in name-list");
  return names;
}

void ByteWriter::u8(std::uint8_t v) { out_.push_back(v); }

void ByteWriter::u32(std::uint32_t v) {
  out_.push_back(static_cast<std::uint8_t>(v >> 24));
  out_.push_back(static_cast<std::uint8_t>(v >> 16));
  out_.push_back(static_cast<std::uint8_t>(v >> 8));
  out_.push_back(static_cast<std::uint8_t>(v));
}

void ByteWriter::raw(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

void ByteWriter::string(std::span<const std::uint8_t> b) {
  u32(static_cast<std::uint32_t>(b.size()));
  raw(b);
}

void ByteWriter::string(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  out_.insert(out_.end(), s.begin(), s.end());
}

void ByteWriter::name_list(const std::vector<std::string>& names) {
  for (const auto& n : names)
    if (n.empty() || n.find(',') != std::string::npos)
      throw Error(ErrorKind::malformed, "invalid name in name-list");
  string(join(names, ","));
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace pssh
