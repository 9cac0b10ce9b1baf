#include <doctest.h>

#include <json.hpp>

#include "passivessh/errors.hpp"
#include "passivessh/record.hpp"
#include "support/helpers.hpp"

using namespace pssh;
using nlohmann::json;

namespace {

ScanRecord sample_record() {
  auto ed = pssh_test::load_fixture_key("mock_ed25519.pub");
  auto rsa = pssh_test::load_fixture_key("mock_rsa.pub");
  auto r = pssh_test::make_record("192.0.2.10", 22, 1700000000, "OpenSSH_9.6", {ed, rsa});
  r.errors.push_back("ssh-dss: no-common-algorithm: no common algorithm");
  return r;
}

}  // namespace

TEST_CASE("record JSON uses the documented field names") {
  json j = json::parse(record_to_json(sample_record()));
  CHECK(j.at("endpoint").at("host") == "192.0.2.10");
  CHECK(j.at("endpoint").at("port") == 22);
  CHECK(j.at("observed_at") == 1700000000);
  CHECK(j.at("banner") == "SSH-2.0-OpenSSH_9.6");
  CHECK(j.at("kexinit").at("kex_algorithms") == json::array({"curve25519-sha256"}));
  CHECK(j.at("kexinit").contains("languages_s2c"));
  CHECK(j.at("hassh_server").get<std::string>().size() == 32);
  REQUIRE(j.at("host_keys").size() == 2);
  const json& key = j.at("host_keys")[0];
  CHECK(key.at("algorithm") == "ssh-ed25519");
  // Datastore index form: bare hex, no colons.
  CHECK(key.at("md5") == "f6158e16b693ecbff8956ff708a70f37");
  CHECK(key.at("sha256") == "v08KILg7uzHDMeXwKozH0W/I7n3sKHgZZ0fuFcnOziw");
  CHECK(key.at("base64").get<std::string>().starts_with("AAAAC3NzaC1lZDI1NTE5"));
  CHECK(j.at("errors").size() == 1);
}

TEST_CASE("record round trips through JSON") {
  ScanRecord original = sample_record();
  ScanRecord back = record_from_json(record_to_json(original));
  CHECK(back.endpoint == original.endpoint);
  CHECK(back.observed_at == original.observed_at);
  CHECK(back.banner == original.banner);
  CHECK(back.kexinit == original.kexinit);
  CHECK(back.hassh_server == original.hassh_server);
  CHECK(back.host_keys == original.host_keys);
  CHECK(back.errors == original.errors);
}

TEST_CASE("hassh_server is recomputed when absent and verified when present") {
  json j = json::parse(record_to_json(sample_record()));
  std::string expected = j.at("hassh_server");

  json without = j;
  without.erase("hassh_server");
  CHECK(record_from_json(without.dump()).hassh_server == expected);

  json null_digest = j;
  null_digest["hassh_server"] = nullptr;
  CHECK(record_from_json(null_digest.dump()).hassh_server == expected);

  json empty_digest = j;
  empty_digest["hassh_server"] = "";
  CHECK(record_from_json(empty_digest.dump()).hassh_server == expected);

  json wrong = j;
  wrong["hassh_server"] = "00000000000000000000000000000000";
  CHECK_THROWS_AS(record_from_json(wrong.dump()), Error);
}

TEST_CASE("declared key digests must match the blob") {
  json j = json::parse(record_to_json(sample_record()));

  json bad_md5 = j;
  bad_md5["host_keys"][0]["md5"] = "00000000000000000000000000000000";
  CHECK_THROWS_AS(record_from_json(bad_md5.dump()), Error);

  json bad_sha = j;
  bad_sha["host_keys"][0]["sha256"] = "AAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAAA";
  CHECK_THROWS_AS(record_from_json(bad_sha.dump()), Error);

  // Digests are optional; the blob alone is authoritative.
  json minimal = j;
  minimal["host_keys"][0].erase("md5");
  minimal["host_keys"][0].erase("sha256");
  ScanRecord r = record_from_json(minimal.dump());
  CHECK(r.host_keys[0].md5_hex() == "f6158e16b693ecbff8956ff708a70f37");
}

TEST_CASE("duplicate host keys in one record are rejected") {
  json j = json::parse(record_to_json(sample_record()));
  j["host_keys"][1] = j["host_keys"][0];
  CHECK_THROWS_AS(record_from_json(j.dump()), Error);
}

TEST_CASE("schema violations are rejected as malformed") {
  auto expect_malformed = [](const std::string& line) {
    try {
      record_from_json(line);
      FAIL_CHECK("expected malformed, line accepted: ", line);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::malformed);
    }
  };

  expect_malformed("not json at all");
  expect_malformed("{}");
  expect_malformed(R"({"endpoint":{"host":"192.0.2.1","port":22}})");

  json j = json::parse(record_to_json(sample_record()));

  json bad_host = j;
  bad_host["endpoint"]["host"] = "not-a-host";
  expect_malformed(bad_host.dump());

  json bad_port = j;
  bad_port["endpoint"]["port"] = 0;
  expect_malformed(bad_port.dump());

  json bad_banner = j;
  bad_banner["banner"] = "HTTP/1.1 200 OK";
  try {
    record_from_json(bad_banner.dump());
    FAIL_CHECK("non-SSH banner accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::not_ssh);
  }

  json bad_names = j;
  bad_names["kexinit"]["kex_algorithms"] = json::array({"has,comma"});
  expect_malformed(bad_names.dump());

  json bad_blob = j;
  bad_blob["host_keys"][0]["base64"] = "!!!";
  expect_malformed(bad_blob.dump());
}

TEST_CASE("errors field is optional") {
  json j = json::parse(record_to_json(sample_record()));
  j.erase("errors");
  CHECK(record_from_json(j.dump()).errors.empty());
}
