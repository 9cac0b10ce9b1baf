#include "support/helpers.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "passivessh/bytes.hpp"
#include "passivessh/errors.hpp"
#include "passivessh/fingerprint.hpp"

#ifndef PSSH_FIXTURES_DIR
#error "PSSH_FIXTURES_DIR must be defined by the build"
#endif

namespace pssh_test {

FixtureKey load_fixture_key(const std::string& filename) {
  std::ifstream in(std::string(PSSH_FIXTURES_DIR) + "/" + filename);
  if (!in) throw pssh::Error(pssh::ErrorKind::io_error, "missing fixture " + filename);
  FixtureKey key;
  in >> key.advertised >> key.base64;
  key.blob = pssh::base64_decode(key.base64);
  return key;
}

namespace {

std::string random_name(std::mt19937& rng) {
  static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789-@.";
  std::uniform_int_distribution<std::size_t> len(1, 24);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string out;
  std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) out.push_back(alphabet[pick(rng)]);
  return out;
}

std::vector<std::string> random_names(std::mt19937& rng, std::size_t max_count) {
  std::uniform_int_distribution<std::size_t> count(0, max_count);
  std::vector<std::string> out(count(rng));
  for (auto& name : out) name = random_name(rng);
  return out;
}

}  // namespace

pssh::KexInitSummary random_kexinit(std::mt19937& rng) {
  pssh::KexInitSummary k;
  std::uniform_int_distribution<int> byte(0, 255);
  for (auto& b : k.cookie) b = static_cast<std::uint8_t>(byte(rng));
  k.kex_algorithms = random_names(rng, 8);
  k.server_host_key_algorithms = random_names(rng, 8);
  k.encryption_c2s = random_names(rng, 8);
  k.encryption_s2c = random_names(rng, 8);
  k.mac_c2s = random_names(rng, 6);
  k.mac_s2c = random_names(rng, 6);
  k.compression_c2s = random_names(rng, 3);
  k.compression_s2c = random_names(rng, 3);
  k.languages_c2s = random_names(rng, 2);
  k.languages_s2c = random_names(rng, 2);
  k.first_kex_packet_follows = byte(rng) % 2 == 0;
  return k;
}

pssh::ScanRecord make_record(const std::string& host, std::uint16_t port, std::int64_t t,
                             const std::string& software, const std::vector<FixtureKey>& keys) {
  pssh::ScanRecord r;
  r.endpoint = pssh::make_endpoint(host, port);
  r.observed_at = t;
  r.banner = pssh::parse_identification_line("SSH-2.0-" + software);
  r.kexinit.kex_algorithms = {"curve25519-sha256"};
  r.kexinit.server_host_key_algorithms = {"ssh-ed25519"};
  r.kexinit.encryption_c2s = {"aes128-ctr"};
  r.kexinit.encryption_s2c = {"aes128-ctr"};
  r.kexinit.mac_c2s = {"hmac-sha2-256"};
  r.kexinit.mac_s2c = {"hmac-sha2-256"};
  r.kexinit.compression_c2s = {"none"};
  r.kexinit.compression_s2c = {"none"};
  r.hassh_server = pssh::hassh_server(r.kexinit);
  for (const auto& key : keys)
    r.host_keys.push_back(pssh::fingerprint_key(pssh::HostKeyBlob{key.advertised, key.blob}));
  return r;
}

TempDir::TempDir() {
  std::string tmpl = (std::filesystem::temp_directory_path() / "pssh-test-XXXXXX").string();
  if (mkdtemp(tmpl.data()) == nullptr)
    throw pssh::Error(pssh::ErrorKind::io_error, "cannot create scratch directory");
  path = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path, ec);
}

}  // namespace pssh_test
