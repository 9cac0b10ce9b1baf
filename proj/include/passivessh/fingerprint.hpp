#pragma once

#include <string>

#include "passivessh/wire.hpp"

namespace pssh {

// 32-char lowercase hex MD5 digest.
using HasshServerDigest = std::string;

struct KeyFingerprints {
  std::string algorithm;
  std::string md5_colon;   // 16 lowercase hex pairs joined by ":"
  std::string sha256_b64;  // base64 without trailing "=" padding
  std::string base64_blob;

  // Colon-free digest; the datastore index key.
  std::string md5_hex() const;

  bool operator==(const KeyFingerprints&) const = default;
};

// hasshServer: MD5 over the kex list and the server-to-client encryption,
// MAC and compression lists, each comma-joined, the four joined by ";".
HasshServerDigest hassh_server(const KexInitSummary& k);

KeyFingerprints fingerprint_key(const HostKeyBlob& h);

}  // namespace pssh
