#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "passivessh/bytes.hpp"

namespace pssh {

// Transport-layer message numbers used before encryption starts.
enum class MsgId : std::uint8_t {
  disconnect = 1,
  ignore = 2,
  unimplemented = 3,
  debug = 4,
  kexinit = 20,
  newkeys = 21,
  kexdh_init = 30,
  kexdh_reply = 31,
};

inline constexpr std::size_t kMaxIdentificationLine = 255;  // bytes, CRLF included
inline constexpr std::uint32_t kMaxPacketLength = 35000;
inline constexpr std::size_t kDefaultPreBannerLimit = 20;
inline constexpr std::size_t kMaxLineLength = 4096;

struct IdentificationString {
  std::string raw;  // full line without CR/LF
  std::string protoversion;
  std::string softwareversion;
  std::optional<std::string> comments;

  bool operator==(const IdentificationString&) const = default;
};

struct KexInitSummary {
  std::array<std::uint8_t, 16> cookie{};
  std::vector<std::string> kex_algorithms;
  std::vector<std::string> server_host_key_algorithms;
  std::vector<std::string> encryption_c2s;
  std::vector<std::string> encryption_s2c;
  std::vector<std::string> mac_c2s;
  std::vector<std::string> mac_s2c;
  std::vector<std::string> compression_c2s;
  std::vector<std::string> compression_s2c;
  std::vector<std::string> languages_c2s;
  std::vector<std::string> languages_s2c;
  bool first_kex_packet_follows = false;

  bool operator==(const KexInitSummary&) const = default;
};

struct HostKeyBlob {
  std::string algorithm;  // e.g. "ssh-ed25519"
  Bytes blob;             // full wire-format public key

  bool operator==(const HostKeyBlob&) const = default;
};

class ByteSource {
 public:
  virtual ~ByteSource() = default;
  // Reads up to buf.size() bytes; returns 0 at end of stream.
  virtual std::size_t read_some(std::span<std::uint8_t> buf) = 0;
};

class ByteSink {
 public:
  virtual ~ByteSink() = default;
  virtual void write_all(std::span<const std::uint8_t> data) = 0;
};

class Stream : public ByteSource, public ByteSink {};

void read_exact(ByteSource& in, std::span<std::uint8_t> buf);

// Consumes through LF, strips the terminator (CRLF or bare LF). Returns
// nullopt on a clean end of stream before any byte of a new line.
std::optional<std::string> read_line(ByteSource& in, std::size_t max_len = kMaxLineLength);

IdentificationString parse_identification_line(std::string_view line);

struct PreBanner {
  std::vector<std::string> skipped_lines;
  IdentificationString id;
};

// Reads lines until the SSH identification line, tolerating at most `limit`
// other lines before it.
PreBanner read_pre_banner_stream(ByteSource& in, std::size_t limit = kDefaultPreBannerLimit);

// Unencrypted binary packet framing. Returns exactly the payload and
// consumes packet_length + 4 bytes from the stream.
Bytes read_binary_packet(ByteSource& in);

// Emits a frame with minimal random padding: the smallest padding_length >= 4
// making (4 + packet_length) a multiple of 8.
void write_binary_packet(std::span<const std::uint8_t> payload, ByteSink& out);

KexInitSummary parse_kexinit(std::span<const std::uint8_t> payload);
Bytes serialize_kexinit(const KexInitSummary& k);

// First client algorithm also present in the server list.
std::string negotiate(const std::vector<std::string>& client_list,
                      const std::vector<std::string>& server_list);

HostKeyBlob parse_hostkey_blob(std::span<const std::uint8_t> blob);

}  // namespace pssh
