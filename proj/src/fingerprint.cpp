#include "passivessh/fingerprint.hpp"

#include "passivessh/digest.hpp"

namespace pssh {

std::string KeyFingerprints::md5_hex() const {
  std::string out;
  out.reserve(32);
  for (char c : md5_colon)
    if (c != ':') out.push_back(c);
  return out;
}

HasshServerDigest hassh_server(const KexInitSummary& k) {
  std::string input = join(k.kex_algorithms, ",") + ";" + join(k.encryption_s2c, ",") + ";" +
                      join(k.mac_s2c, ",") + ";" + join(k.compression_s2c, ",");
  return md5_hex(to_bytes(input));
}

KeyFingerprints fingerprint_key(const HostKeyBlob& h) {
  KeyFingerprints fp;
  fp.algorithm = h.algorithm;
  fp.md5_colon = md5_colons(h.blob);
  std::string sha = base64_encode(sha256(h.blob));
  while (!sha.empty() && sha.back() == '=') sha.pop_back();
  fp.sha256_b64 = std::move(sha);
  fp.base64_blob = base64_encode(h.blob);
  return fp;
}

}  // namespace pssh
