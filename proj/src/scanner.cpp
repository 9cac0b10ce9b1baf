#include "passivessh/scanner.hpp"

#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <memory>
#include <set>
#include <thread>

#include "passivessh/digest.hpp"
#include "passivessh/fingerprint.hpp"

namespace pssh {

namespace {

// RFC 3526 group 14 modulus.
constexpr const char* kGroup14PrimeHex =
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05"
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB"
    "9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
    "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF695581718"
    "3995497CEA956AE515D2261898FA051015728E5A8AACAA68FFFFFFFFFFFFFFFF";

void write_mpint(ByteWriter& w, std::span<const std::uint8_t> value) {
  std::size_t i = 0;
  while (i < value.size() && value[i] == 0) ++i;
  Bytes v(value.begin() + static_cast<std::ptrdiff_t>(i), value.end());
  if (!v.empty() && (v[0] & 0x80) != 0) v.insert(v.begin(), 0);
  w.u32(static_cast<std::uint32_t>(v.size()));
  w.raw(v);
}

struct EvpPkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct EvpCtxDeleter {
  void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, EvpPkeyDeleter>;
using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, EvpCtxDeleter>;

Bytes x25519_ephemeral_public() {
  PkeyCtxPtr ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_X25519, nullptr));
  EVP_PKEY* raw = nullptr;
  if (!ctx || EVP_PKEY_keygen_init(ctx.get()) <= 0 || EVP_PKEY_keygen(ctx.get(), &raw) <= 0)
    throw Error(ErrorKind::protocol_error, "x25519 keygen failed");
  PkeyPtr key(raw);
  Bytes pub(32);
  std::size_t len = pub.size();
  if (EVP_PKEY_get_raw_public_key(key.get(), pub.data(), &len) <= 0 || len != 32)
    throw Error(ErrorKind::protocol_error, "x25519 public key extraction failed");
  return pub;
}

Bytes p256_ephemeral_public() {
  PkeyCtxPtr ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_EC, nullptr));
  EVP_PKEY* raw = nullptr;
  if (!ctx || EVP_PKEY_keygen_init(ctx.get()) <= 0 ||
      EVP_PKEY_CTX_set_ec_paramgen_curve_nid(ctx.get(), NID_X9_62_prime256v1) <= 0 ||
      EVP_PKEY_keygen(ctx.get(), &raw) <= 0)
    throw Error(ErrorKind::protocol_error, "p-256 keygen failed");
  PkeyPtr key(raw);
  unsigned char* point = nullptr;
#if OPENSSL_VERSION_NUMBER >= 0x30000000L
  std::size_t len = EVP_PKEY_get1_encoded_public_key(key.get(), &point);
#else
  std::size_t len = EVP_PKEY_get1_tls_encodedpoint(key.get(), &point);
#endif
  if (len == 0 || point == nullptr)
    throw Error(ErrorKind::protocol_error, "p-256 public point extraction failed");
  Bytes pub(point, point + len);
  OPENSSL_free(point);
  return pub;
}

Bytes group14_ephemeral_public() {
  struct BnDeleter {
    void operator()(BIGNUM* b) const { BN_free(b); }
  };
  struct BnCtxDeleter {
    void operator()(BN_CTX* c) const { BN_CTX_free(c); }
  };
  std::unique_ptr<BIGNUM, BnDeleter> p(nullptr), g(BN_new()), x(BN_new()), e(BN_new());
  std::unique_ptr<BN_CTX, BnCtxDeleter> ctx(BN_CTX_new());
  BIGNUM* p_raw = nullptr;
  if (BN_hex2bn(&p_raw, kGroup14PrimeHex) == 0)
    throw Error(ErrorKind::protocol_error, "group14 prime setup failed");
  p.reset(p_raw);
  if (!g || !x || !e || !ctx || BN_set_word(g.get(), 2) == 0 ||
      BN_rand(x.get(), 512, BN_RAND_TOP_ONE, BN_RAND_BOTTOM_ANY) == 0 ||
      BN_mod_exp(e.get(), g.get(), x.get(), p.get(), ctx.get()) == 0)
    throw Error(ErrorKind::protocol_error, "group14 keygen failed");
  Bytes out(static_cast<std::size_t>(BN_num_bytes(e.get())));
  BN_bn2bin(e.get(), out.data());
  return out;
}

// Reads frames until a substantive message, dropping IGNORE/DEBUG/
// UNIMPLEMENTED. DISCONNECT is surfaced as a protocol error.
Bytes next_meaningful_packet(ByteSource& in) {
  for (int i = 0; i < 32; ++i) {
    Bytes payload = read_binary_packet(in);
    if (payload.empty()) throw Error(ErrorKind::malformed, "empty packet payload");
    switch (static_cast<MsgId>(payload[0])) {
      case MsgId::ignore:
      case MsgId::debug:
      case MsgId::unimplemented:
        continue;
      case MsgId::disconnect: {
        std::string detail;
        try {
          ByteReader r(std::span<const std::uint8_t>(payload).subspan(1));
          r.u32();  // reason code
          detail = r.string_text();
        } catch (const Error&) {
        }
        throw Error(ErrorKind::protocol_error,
                    detail.empty() ? "server sent disconnect" : "server sent disconnect: " + detail);
      }
      default:
        return payload;
    }
  }
  throw Error(ErrorKind::protocol_error, "too many transport noise packets");
}

TcpStream open_with_retry(const Endpoint& e, const ScanPolicy& p) {
  int attempts = 1 + std::max(0, p.retries);
  for (int i = 0;; ++i) {
    try {
      return open_connection(e, p.socks_proxy, p.connect_timeout, p.read_timeout);
    } catch (const Error& err) {
      bool transient = err.kind() == ErrorKind::connect_failed || err.kind() == ErrorKind::timeout;
      if (!transient || i + 1 >= attempts) throw;
    }
  }
}

template <typename Fn>
auto with_stage(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const ScanError&) {
    throw;
  } catch (const Error& e) {
    throw ScanError(stage, e);
  } catch (const std::exception& e) {
    throw ScanError(stage, Error(ErrorKind::io_error, e.what()));
  }
}

struct Handshake {
  TcpStream stream;
  PreBanner pre;
  KexInitSummary server_kexinit;
  KexInitSummary client_kexinit;
};

// Connects, swaps identification lines and KEXINITs. The stream is left
// right before the key-exchange messages.
Handshake open_handshake(const Endpoint& e, const ScanPolicy& p,
                         const std::vector<std::string>& host_key_algorithms) {
  TcpStream stream = with_stage("connect", [&] { return open_with_retry(e, p); });
  PreBanner pre = with_stage("identification", [&] {
    PreBanner b = read_pre_banner_stream(stream);
    std::string hello = std::string(kClientIdentification) + "\r\n";
    stream.write_all(to_bytes(hello));
    return b;
  });
  auto kex_pref = p.kex_preference.empty() ? default_kex_algorithms() : p.kex_preference;
  KexInitSummary client = build_client_kexinit(kex_pref, host_key_algorithms);
  KexInitSummary server = with_stage("kexinit", [&] {
    write_binary_packet(serialize_kexinit(client), stream);
    Bytes payload = next_meaningful_packet(stream);
    if (static_cast<MsgId>(payload[0]) != MsgId::kexinit)
      throw Error(ErrorKind::protocol_error, "expected KEXINIT, got message " + std::to_string(payload[0]));
    return parse_kexinit(payload);
  });
  return {std::move(stream), std::move(pre), std::move(server), std::move(client)};
}

// Runs negotiation and the minimal key exchange on an established handshake.
HostKeyBlob extract_key(Handshake& h, const std::vector<std::string>& kex_pref) {
  return with_stage("kex", [&]() -> HostKeyBlob {
    std::string kex = negotiate(kex_pref, h.server_kexinit.kex_algorithms);
    std::string host_key_alg =
        negotiate(h.client_kexinit.server_host_key_algorithms, h.server_kexinit.server_host_key_algorithms);
    if (h.server_kexinit.first_kex_packet_follows) {
      bool guessed_right = !h.server_kexinit.kex_algorithms.empty() &&
                           !h.server_kexinit.server_host_key_algorithms.empty() &&
                           h.server_kexinit.kex_algorithms.front() == kex &&
                           h.server_kexinit.server_host_key_algorithms.front() == host_key_alg;
      if (!guessed_right) read_binary_packet(h.stream);  // discard the wrong guess
    }
    HostKeyBlob blob = minimal_kex(h.stream, kex);
    (void)host_key_alg;
    return blob;
  });
}

bool is_supported_host_key(const std::string& name) {
  const auto& s = supported_host_key_algorithms();
  return std::find(s.begin(), s.end(), name) != s.end();
}

// Shared tail of scan_endpoint and the standalone collect_host_keys: one
// connection per uncovered alias class, merged by md5.
std::vector<KeyFingerprints> collect_remaining_keys(const Endpoint& e, const KexInitSummary& server_kexinit,
                                                    const ScanPolicy& p, std::vector<std::string>& errors,
                                                    std::vector<KeyFingerprints> keys) {
  std::set<std::string> covered;
  std::set<std::string> seen_md5;
  for (const auto& k : keys) {
    covered.insert(host_key_alias_class(k.algorithm));
    seen_md5.insert(k.md5_hex());
  }
  auto kex_pref = p.kex_preference.empty() ? default_kex_algorithms() : p.kex_preference;
  std::size_t advertised_supported = 0;
  std::size_t failures = 0;
  for (const auto& alg : server_kexinit.server_host_key_algorithms) {
    if (!is_supported_host_key(alg)) continue;
    ++advertised_supported;
    if (covered.contains(host_key_alias_class(alg))) continue;
    try {
      Handshake h = open_handshake(e, p, {alg});
      HostKeyBlob blob = extract_key(h, kex_pref);
      covered.insert(host_key_alias_class(alg));
      covered.insert(host_key_alias_class(blob.algorithm));
      KeyFingerprints fp = fingerprint_key(blob);
      if (seen_md5.insert(fp.md5_hex()).second) keys.push_back(std::move(fp));
    } catch (const ScanError& err) {
      ++failures;
      errors.push_back(alg + ": " + err.what());
    }
  }
  if (advertised_supported == 0)
    throw ScanError("key-collection",
                    Error(ErrorKind::no_common_algorithm, "no supported host-key algorithm advertised"));
  if (keys.empty() && failures > 0)
    throw ScanError("key-collection",
                    Error(ErrorKind::protocol_error, "every host-key algorithm attempt failed"));
  return keys;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::uint16_t parse_port(const std::string& text) {
  if (text.empty() || text.size() > 5 ||
      !std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isdigit(c); }))
    throw Error(ErrorKind::malformed, "invalid port: " + text);
  unsigned long v = std::stoul(text);
  if (v < 1 || v > 65535) throw Error(ErrorKind::malformed, "port out of range: " + text);
  return static_cast<std::uint16_t>(v);
}

}  // namespace

void validate(const ScanPolicy& p) {
  if (p.connect_timeout.count() <= 0 || p.read_timeout.count() <= 0)
    throw Error(ErrorKind::malformed, "timeouts must be positive");
  if (p.max_parallel < 1) throw Error(ErrorKind::malformed, "max_parallel must be at least 1");
  if (p.retries < 0) throw Error(ErrorKind::malformed, "retries must not be negative");
  for (auto port : p.ports)
    if (port == 0) throw Error(ErrorKind::malformed, "port 0 is not scannable");
}

const std::vector<std::string>& default_kex_algorithms() {
  static const std::vector<std::string> v = {
      "curve25519-sha256",
      "curve25519-sha256@libssh.org",
      "ecdh-sha2-nistp256",
      "diffie-hellman-group14-sha256",
  };
  return v;
}

const std::vector<std::string>& supported_host_key_algorithms() {
  static const std::vector<std::string> v = {
      "ssh-ed25519",   "ecdsa-sha2-nistp256", "ecdsa-sha2-nistp384", "ecdsa-sha2-nistp521",
      "rsa-sha2-512",  "rsa-sha2-256",        "ssh-rsa",             "ssh-dss",
  };
  return v;
}

std::string host_key_alias_class(const std::string& algorithm) {
  if (algorithm == "rsa-sha2-256" || algorithm == "rsa-sha2-512") return "ssh-rsa";
  return algorithm;
}

KexInitSummary build_client_kexinit(const std::vector<std::string>& kex_algorithms,
                                    const std::vector<std::string>& host_key_algorithms) {
  KexInitSummary k;
  Bytes cookie = random_bytes(k.cookie.size());
  std::copy(cookie.begin(), cookie.end(), k.cookie.begin());
  k.kex_algorithms = kex_algorithms;
  k.server_host_key_algorithms = host_key_algorithms;
  k.encryption_c2s = {"chacha20-poly1305@openssh.com",
                      "aes128-ctr",
                      "aes192-ctr",
                      "aes256-ctr",
                      "aes128-gcm@openssh.com",
                      "aes256-gcm@openssh.com",
                      "aes128-cbc",
                      "3des-cbc"};
  k.encryption_s2c = k.encryption_c2s;
  k.mac_c2s = {"hmac-sha2-256", "hmac-sha2-512", "hmac-sha1", "hmac-sha1-96", "hmac-md5"};
  k.mac_s2c = k.mac_c2s;
  k.compression_c2s = {"none", "zlib@openssh.com", "zlib"};
  k.compression_s2c = k.compression_c2s;
  return k;
}

HostKeyBlob minimal_kex(Stream& connection, const std::string& negotiated_kex) {
  Bytes ephemeral;
  bool mpint_form = false;
  if (negotiated_kex == "curve25519-sha256" || negotiated_kex == "curve25519-sha256@libssh.org") {
    ephemeral = x25519_ephemeral_public();
  } else if (negotiated_kex == "ecdh-sha2-nistp256") {
    ephemeral = p256_ephemeral_public();
  } else if (negotiated_kex == "diffie-hellman-group14-sha256") {
    ephemeral = group14_ephemeral_public();
    mpint_form = true;
  } else {
    throw Error(ErrorKind::no_common_algorithm, "unsupported key exchange: " + negotiated_kex);
  }

  ByteWriter init;
  init.u8(static_cast<std::uint8_t>(MsgId::kexdh_init));
  if (mpint_form)
    write_mpint(init, ephemeral);
  else
    init.string(ephemeral);
  write_binary_packet(init.data(), connection);

  Bytes payload = next_meaningful_packet(connection);
  if (static_cast<MsgId>(payload[0]) != MsgId::kexdh_reply)
    throw Error(ErrorKind::protocol_error,
                "expected key-exchange reply, got message " + std::to_string(payload[0]));
  ByteReader r(std::span<const std::uint8_t>(payload).subspan(1));
  Bytes host_key_blob = r.string_bytes();
  r.string_bytes();  // server ephemeral / f
  r.string_bytes();  // signature over the exchange hash
  return parse_hostkey_blob(host_key_blob);
}

std::vector<KeyFingerprints> collect_host_keys(const Endpoint& e, const KexInitSummary& server_kexinit,
                                               const ScanPolicy& p, std::vector<std::string>& errors) {
  return collect_remaining_keys(e, server_kexinit, p, errors, {});
}

ScanRecord scan_endpoint(const Endpoint& e, const ScanPolicy& p) {
  validate(p);
  ScanRecord rec;
  rec.endpoint = e;
  rec.observed_at = std::chrono::duration_cast<std::chrono::seconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count();

  auto kex_pref = p.kex_preference.empty() ? default_kex_algorithms() : p.kex_preference;
  Handshake h = open_handshake(e, p, supported_host_key_algorithms());
  rec.skipped_lines = h.pre.skipped_lines;
  rec.banner = h.pre.id;
  rec.kexinit = h.server_kexinit;
  rec.hassh_server = hassh_server(h.server_kexinit);

  std::vector<KeyFingerprints> first;
  try {
    first.push_back(fingerprint_key(extract_key(h, kex_pref)));
  } catch (const ScanError& err) {
    if (err.kind() == ErrorKind::no_common_algorithm)
      throw;  // same lists on every connection, retrying cannot help
    rec.errors.push_back(std::string("first key exchange: ") + err.what());
  }
  rec.host_keys = collect_remaining_keys(e, rec.kexinit, p, rec.errors, std::move(first));
  return rec;
}

ScanSummary scan_many(const std::vector<Endpoint>& targets, const ScanPolicy& p, const RecordSink& sink) {
  validate(p);
  ScanSummary summary;
  summary.attempted = targets.size();
  if (targets.empty()) return summary;

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> succeeded{0};
  std::atomic<std::size_t> failed{0};

  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= targets.size()) return;
      ScanOutcome out;
      out.endpoint = targets[i];
      try {
        out.record = scan_endpoint(targets[i], p);
        succeeded.fetch_add(1);
      } catch (const ScanError& err) {
        out.failure = ScanFailure{err.stage(), err.kind(), err.what()};
        failed.fetch_add(1);
      } catch (const Error& err) {
        out.failure = ScanFailure{"scan", err.kind(), err.what()};
        failed.fetch_add(1);
      }
      if (sink) sink(out);
    }
  };

  std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(p.max_parallel), targets.size());
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  summary.succeeded = succeeded.load();
  summary.failed = failed.load();
  return summary;
}

std::vector<Endpoint> parse_target_line(std::string_view line,
                                        const std::vector<std::uint16_t>& default_ports) {
  std::string t = trim(line);
  if (auto hash = t.find('#'); hash != std::string::npos) t = trim(std::string_view(t).substr(0, hash));
  if (t.empty()) return {};

  std::string host;
  std::optional<std::uint16_t> port;
  if (t.front() == '[') {
    auto close = t.find(']');
    if (close == std::string::npos) throw Error(ErrorKind::malformed, "unterminated '[' in target: " + t);
    host = t.substr(1, close - 1);
    std::string rest = trim(std::string_view(t).substr(close + 1));
    if (!rest.empty()) {
      if (rest.front() == ':') rest = trim(std::string_view(rest).substr(1));
      port = parse_port(rest);
    }
  } else if (auto space = t.find_first_of(" \t"); space != std::string::npos) {
    host = t.substr(0, space);
    port = parse_port(trim(std::string_view(t).substr(space + 1)));
  } else if (std::count(t.begin(), t.end(), ':') == 1) {
    auto colon = t.find(':');
    host = t.substr(0, colon);
    port = parse_port(t.substr(colon + 1));
  } else {
    host = t;  // bare host, possibly an IPv6 literal with many colons
  }

  std::vector<Endpoint> out;
  if (port) {
    out.push_back(make_endpoint(host, *port));
  } else {
    if (default_ports.empty()) throw Error(ErrorKind::malformed, "no port for target and no default ports");
    for (auto dp : default_ports) out.push_back(make_endpoint(host, dp));
  }
  return out;
}

std::vector<Endpoint> load_targets(std::istream& in, const std::vector<std::uint16_t>& default_ports) {
  std::vector<Endpoint> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    try {
      auto parsed = parse_target_line(line, default_ports);
      out.insert(out.end(), parsed.begin(), parsed.end());
    } catch (const Error& e) {
      throw Error(ErrorKind::malformed, "target line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace pssh
