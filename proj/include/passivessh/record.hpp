#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "passivessh/endpoint.hpp"
#include "passivessh/fingerprint.hpp"
#include "passivessh/wire.hpp"

namespace pssh {

// One observation of an SSH endpoint.
struct ScanRecord {
  Endpoint endpoint;
  std::int64_t observed_at = 0;  // UTC epoch seconds
  std::vector<std::string> skipped_lines;
  IdentificationString banner;
  KexInitSummary kexinit;
  HasshServerDigest hassh_server;
  std::vector<KeyFingerprints> host_keys;
  std::vector<std::string> errors;  // per-key-algorithm failures
};

// JSON Lines schema. Field names: endpoint{host,port}, observed_at, banner,
// kexinit{ten name-lists}, hassh_server, host_keys[{algorithm,md5,sha256,base64}],
// errors. The banner is the raw identification line.
std::string record_to_json(const ScanRecord& r);

// Throws Error{malformed} on schema violations (bad endpoint, non-SSH banner,
// digest mismatch between hassh_server and the kexinit lists).
ScanRecord record_from_json(const std::string& line);

}  // namespace pssh
