#include "passivessh/record.hpp"

#include <json.hpp>

#include "passivessh/errors.hpp"

namespace pssh {

namespace {

using nlohmann::json;

json lists_to_json(const KexInitSummary& k) {
  return json{
      {"kex_algorithms", k.kex_algorithms},
      {"server_host_key_algorithms", k.server_host_key_algorithms},
      {"encryption_c2s", k.encryption_c2s},
      {"encryption_s2c", k.encryption_s2c},
      {"mac_c2s", k.mac_c2s},
      {"mac_s2c", k.mac_s2c},
      {"compression_c2s", k.compression_c2s},
      {"compression_s2c", k.compression_s2c},
      {"languages_c2s", k.languages_c2s},
      {"languages_s2c", k.languages_s2c},
  };
}

std::vector<std::string> name_list_field(const json& j, const char* field) {
  std::vector<std::string> out = j.at(field).get<std::vector<std::string>>();
  for (const auto& n : out)
    if (n.empty() || n.find(',') != std::string::npos)
      throw Error(ErrorKind::malformed, std::string("invalid name in ") + field);
  return out;
}

}  // namespace

std::string record_to_json(const ScanRecord& r) {
  json keys = json::array();
  for (const auto& k : r.host_keys) {
    keys.push_back(json{
        {"algorithm", k.algorithm},
        {"md5", k.md5_hex()},
        {"sha256", k.sha256_b64},
        {"base64", k.base64_blob},
    });
  }
  json j{
      {"endpoint", {{"host", r.endpoint.host}, {"port", r.endpoint.port}}},
      {"observed_at", r.observed_at},
      {"banner", r.banner.raw},
      {"kexinit", lists_to_json(r.kexinit)},
      {"hassh_server", r.hassh_server},
      {"host_keys", keys},
      {"errors", r.errors},
  };
  return j.dump();
}

ScanRecord record_from_json(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::malformed, std::string("invalid JSON: ") + e.what());
  }

  try {
    ScanRecord r;
    const json& ep = j.at("endpoint");
    r.endpoint = make_endpoint(ep.at("host").get<std::string>(), ep.at("port").get<int>());
    r.observed_at = j.at("observed_at").get<std::int64_t>();
    r.banner = parse_identification_line(j.at("banner").get<std::string>());

    const json& kx = j.at("kexinit");
    r.kexinit.kex_algorithms = name_list_field(kx, "kex_algorithms");
    r.kexinit.server_host_key_algorithms = name_list_field(kx, "server_host_key_algorithms");
    r.kexinit.encryption_c2s = name_list_field(kx, "encryption_c2s");
    r.kexinit.encryption_s2c = name_list_field(kx, "encryption_s2c");
    r.kexinit.mac_c2s = name_list_field(kx, "mac_c2s");
    r.kexinit.mac_s2c = name_list_field(kx, "mac_s2c");
    r.kexinit.compression_c2s = name_list_field(kx, "compression_c2s");
    r.kexinit.compression_s2c = name_list_field(kx, "compression_s2c");
    r.kexinit.languages_c2s = name_list_field(kx, "languages_c2s");
    r.kexinit.languages_s2c = name_list_field(kx, "languages_s2c");

    if (j.contains("hassh_server") && !j.at("hassh_server").is_null() &&
        !j.at("hassh_server").get<std::string>().empty()) {
      r.hassh_server = j.at("hassh_server").get<std::string>();
      if (r.hassh_server != hassh_server(r.kexinit))
        throw Error(ErrorKind::malformed, "hassh_server does not match the kexinit lists");
    } else {
      r.hassh_server = hassh_server(r.kexinit);
    }

    for (const json& k : j.at("host_keys")) {
      KeyFingerprints fp;
      fp.algorithm = k.at("algorithm").get<std::string>();
      fp.base64_blob = k.at("base64").get<std::string>();
      // Digests are recomputed from the blob so pushed records cannot
      // poison the key indexes with mismatched digests.
      Bytes blob = base64_decode(fp.base64_blob);
      KeyFingerprints computed = fingerprint_key(HostKeyBlob{fp.algorithm, std::move(blob)});
      if (k.contains("md5") && k.at("md5").get<std::string>() != computed.md5_hex())
        throw Error(ErrorKind::malformed, "host key md5 does not match base64 blob");
      if (k.contains("sha256") && k.at("sha256").get<std::string>() != computed.sha256_b64)
        throw Error(ErrorKind::malformed, "host key sha256 does not match base64 blob");
      r.host_keys.push_back(std::move(computed));
    }

    if (j.contains("errors")) r.errors = j.at("errors").get<std::vector<std::string>>();

    for (std::size_t i = 0; i < r.host_keys.size(); ++i)
      for (std::size_t q = i + 1; q < r.host_keys.size(); ++q)
        if (r.host_keys[i].md5_colon == r.host_keys[q].md5_colon)
          throw Error(ErrorKind::malformed, "duplicate host key digest in record");
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::malformed, std::string("invalid record: ") + e.what());
  }
}

}  // namespace pssh
