#pragma once

#include <chrono>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "passivessh/errors.hpp"
#include "passivessh/net.hpp"
#include "passivessh/record.hpp"

namespace pssh {

inline constexpr std::string_view kClientIdentification = "SSH-2.0-PassiveSSH_1.0";

struct ScanPolicy {
  std::chrono::milliseconds connect_timeout{10'000};
  std::chrono::milliseconds read_timeout{10'000};
  int max_parallel = 128;
  std::vector<std::uint16_t> ports = {22, 2222};
  std::vector<std::string> kex_preference;  // empty means default_kex_algorithms()
  int retries = 1;                          // extra connect attempts per connection
  std::optional<SocksProxy> socks_proxy;
};

void validate(const ScanPolicy& p);

// Key-exchange methods the scanner can drive far enough to extract K_S.
const std::vector<std::string>& default_kex_algorithms();

// The six key types of the fingerprint schema plus the rsa-sha2 aliases of
// the ssh-rsa key.
const std::vector<std::string>& supported_host_key_algorithms();

// Algorithms backed by the same key map to one class (rsa-sha2-256/512 alias
// ssh-rsa); everything else is its own class.
std::string host_key_alias_class(const std::string& algorithm);

KexInitSummary build_client_kexinit(const std::vector<std::string>& kex_algorithms,
                                    const std::vector<std::string>& host_key_algorithms);

struct ScanFailure {
  std::string stage;  // connect | identification | kexinit | kex | key-collection
  ErrorKind kind;
  std::string message;
};

// Error annotated with the handshake stage reached.
class ScanError : public Error {
 public:
  ScanError(std::string stage, const Error& cause)
      : Error(cause.kind(), std::string(cause.what())), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct ScanOutcome {
  Endpoint endpoint;
  std::optional<ScanRecord> record;
  std::optional<ScanFailure> failure;
};

struct ScanSummary {
  std::size_t attempted = 0;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
};

// Full fingerprint pass over one endpoint: banner, KEXINIT, hassh, then one
// key exchange per advertised host-key algorithm class. Throws ScanError.
ScanRecord scan_endpoint(const Endpoint& e, const ScanPolicy& p);

// One fresh connection per advertised supported algorithm; duplicate keys
// (same md5) merged; per-algorithm failures appended to `errors`. Throws only
// when every algorithm fails.
std::vector<KeyFingerprints> collect_host_keys(const Endpoint& e, const KexInitSummary& server_kexinit,
                                               const ScanPolicy& p, std::vector<std::string>& errors);

// Sends the client key-exchange initiation for `negotiated_kex` over an
// already KEXINIT-synchronized connection and returns K_S from the reply.
// No NEWKEYS is ever sent; the caller discards the connection.
HostKeyBlob minimal_kex(Stream& connection, const std::string& negotiated_kex);

// Safe for concurrent invocation from scan workers.
using RecordSink = std::function<void(const ScanOutcome&)>;

ScanSummary scan_many(const std::vector<Endpoint>& targets, const ScanPolicy& p, const RecordSink& sink);

// Target list grammar: "host", "host:port", "host port"; "#" starts a
// comment. Hosts without an explicit port expand over default_ports.
std::vector<Endpoint> parse_target_line(std::string_view line,
                                        const std::vector<std::uint16_t>& default_ports);
std::vector<Endpoint> load_targets(std::istream& in, const std::vector<std::uint16_t>& default_ports);

}  // namespace pssh
