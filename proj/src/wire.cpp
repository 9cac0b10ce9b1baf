#include "passivessh/wire.hpp"

#include <algorithm>

#include "passivessh/errors.hpp"

namespace pssh {

void read_exact(ByteSource& in, std::span<std::uint8_t> buf) {
  std::size_t got = 0;
  while (got < buf.size()) {
    std::size_t n = in.read_some(buf.subspan(got));
    if (n == 0) throw Error(ErrorKind::truncated, "stream ended mid-read");
    got += n;
  }
}

std::optional<std::string> read_line(ByteSource& in, std::size_t max_len) {
  std::string line;
  std::uint8_t c = 0;
  for (;;) {
    std::size_t n = in.read_some(std::span(&c, 1));
    if (n == 0) {
      if (line.empty()) return std::nullopt;
      throw Error(ErrorKind::truncated, "stream ended mid-line");
    }
    if (c == '\n') {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    if (line.size() >= max_len) throw Error(ErrorKind::malformed, "line too long");
    line.push_back(static_cast<char>(c));
  }
}

IdentificationString parse_identification_line(std::string_view line) {
  if (!line.starts_with("SSH-")) throw Error(ErrorKind::not_ssh, "no SSH- prefix");
  if (line.size() > kMaxIdentificationLine - 2)
    throw Error(ErrorKind::malformed, "identification line exceeds 255 bytes");
  if (line.find_first_of(std::string_view("\r\n\0", 3)) != std::string_view::npos)
    throw Error(ErrorKind::malformed, "terminator inside identification line");

  std::size_t dash = line.find('-', 4);
  if (dash == std::string_view::npos)
    throw Error(ErrorKind::malformed, "missing dash after protocol version");

  IdentificationString id;
  id.raw = std::string(line);
  id.protoversion = std::string(line.substr(4, dash - 4));
  std::string_view rest = line.substr(dash + 1);
  std::size_t space = rest.find(' ');
  if (space == std::string_view::npos) {
    id.softwareversion = std::string(rest);
  } else {
    id.softwareversion = std::string(rest.substr(0, space));
    id.comments = std::string(rest.substr(space + 1));
  }
  return id;
}

PreBanner read_pre_banner_stream(ByteSource& in, std::size_t limit) {
  PreBanner out;
  for (;;) {
    auto line = read_line(in);
    if (!line) throw Error(ErrorKind::not_ssh, "stream ended before identification line");
    if (line->starts_with("SSH-")) {
      out.id = parse_identification_line(*line);
      return out;
    }
    if (out.skipped_lines.size() >= limit)
      throw Error(ErrorKind::not_ssh, "too many lines before identification");
    out.skipped_lines.push_back(std::move(*line));
  }
}

Bytes read_binary_packet(ByteSource& in) {
  std::array<std::uint8_t, 5> header{};
  read_exact(in, header);
  std::uint32_t packet_length = (static_cast<std::uint32_t>(header[0]) << 24) |
                                (static_cast<std::uint32_t>(header[1]) << 16) |
                                (static_cast<std::uint32_t>(header[2]) << 8) |
                                static_cast<std::uint32_t>(header[3]);
  std::uint8_t padding_length = header[4];
  if (packet_length > kMaxPacketLength) throw Error(ErrorKind::oversize, "packet_length above protocol maximum");
  if (padding_length < 4) throw Error(ErrorKind::malformed, "padding_length below minimum");
  if (packet_length < 1u + padding_length)
    throw Error(ErrorKind::malformed, "payload length computes negative");

  Bytes payload(packet_length - 1 - padding_length);
  read_exact(in, payload);
  Bytes padding(padding_length);
  read_exact(in, padding);
  return payload;
}

void write_binary_packet(std::span<const std::uint8_t> payload, ByteSink& out) {
  if (payload.empty()) throw Error(ErrorKind::malformed, "empty payload");
  std::uint8_t padding_length = 4;
  while ((4 + 1 + payload.size() + padding_length) % 8 != 0) ++padding_length;
  std::uint32_t packet_length = static_cast<std::uint32_t>(1 + payload.size() + padding_length);
  if (packet_length > kMaxPacketLength) throw Error(ErrorKind::oversize, "payload too large for one packet");

  ByteWriter w;
  w.u32(packet_length);
  w.u8(padding_length);
  w.raw(payload);
  Bytes padding = random_bytes(padding_length);
  w.raw(padding);
  out.write_all(w.data());
}

KexInitSummary parse_kexinit(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  if (r.u8() != static_cast<std::uint8_t>(MsgId::kexinit))
    throw Error(ErrorKind::malformed, "not a KEXINIT payload");

  KexInitSummary k;
  auto cookie = r.raw(16);
  std::copy(cookie.begin(), cookie.end(), k.cookie.begin());
  k.kex_algorithms = r.name_list();
  k.server_host_key_algorithms = r.name_list();
  k.encryption_c2s = r.name_list();
  k.encryption_s2c = r.name_list();
  k.mac_c2s = r.name_list();
  k.mac_s2c = r.name_list();
  k.compression_c2s = r.name_list();
  k.compression_s2c = r.name_list();
  k.languages_c2s = r.name_list();
  k.languages_s2c = r.name_list();
  k.first_kex_packet_follows = r.u8() != 0;
  r.u32();  // reserved, any value accepted
  if (!r.done()) throw Error(ErrorKind::malformed, "trailing bytes after KEXINIT");
  return k;
}

Bytes serialize_kexinit(const KexInitSummary& k) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(MsgId::kexinit));
  w.raw(k.cookie);
  w.name_list(k.kex_algorithms);
  w.name_list(k.server_host_key_algorithms);
  w.name_list(k.encryption_c2s);
  w.name_list(k.encryption_s2c);
  w.name_list(k.mac_c2s);
  w.name_list(k.mac_s2c);
  w.name_list(k.compression_c2s);
  w.name_list(k.compression_s2c);
  w.name_list(k.languages_c2s);
  w.name_list(k.languages_s2c);
  w.u8(k.first_kex_packet_follows ? 1 : 0);
  w.u32(0);  // reserved, written as zero
  return w.take();
}

std::string negotiate(const std::vector<std::string>& client_list,
                      const std::vector<std::string>& server_list) {
  for (const auto& name : client_list)
    if (std::find(server_list.begin(), server_list.end(), name) != server_list.end()) return name;
  throw Error(ErrorKind::no_common_algorithm, "no common algorithm");
}

HostKeyBlob parse_hostkey_blob(std::span<const std::uint8_t> blob) {
  ByteReader r(blob);
  std::string algorithm = r.string_text();
  if (algorithm.empty() || !is_valid_utf8(algorithm))
    throw Error(ErrorKind::malformed, "invalid algorithm name in key blob");
  return HostKeyBlob{std::move(algorithm), Bytes(blob.begin(), blob.end())};
}

}  // namespace pssh
