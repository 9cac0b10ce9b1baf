#include <doctest.h>

#include <httplib.h>

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "passivessh/datastore.hpp"
#include "support/helpers.hpp"
#include "support/mock_server.hpp"
#include "support/subprocess.hpp"

#ifndef PSSH_CLI_PATH
#error "PSSH_CLI_PATH must point at the passive-ssh binary"
#endif

using namespace pssh;
using nlohmann::json;
using pssh_test::load_fixture_key;
using pssh_test::make_record;
using pssh_test::MockConfig;
using pssh_test::MockSshServer;
using pssh_test::run_process;
using pssh_test::RunResult;
using pssh_test::SpawnedProcess;
using pssh_test::TempDir;

namespace {

const std::string kCli = PSSH_CLI_PATH;

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

MockSshServer& started(MockSshServer& mock) {
  mock.start();
  return mock;
}

MockConfig one_key_config() {
  auto ed = load_fixture_key("mock_ed25519.pub");
  MockConfig c;
  c.keys = {{ed.advertised, ed.blob, {"ssh-ed25519"}}};
  return c;
}

std::uint16_t closed_port() {
  MockSshServer probe({});
  probe.start();
  std::uint16_t port = probe.port();
  probe.stop();
  return port;
}

}  // namespace

TEST_CASE("scan emits records on stdout and a summary on stderr") {
  MockSshServer mock(one_key_config());
  started(mock);
  std::string target = "127.0.0.1:" + std::to_string(mock.port());

  RunResult r = run_process({kCli, "scan", target, "--timeout", "2", "--retries", "0"});
  mock.stop();

  CHECK(r.exit_code == 0);
  auto records = lines_of(r.out);
  REQUIRE(records.size() == 1);
  json rec = json::parse(records[0]);
  CHECK(rec.at("endpoint").at("host") == "127.0.0.1");
  CHECK(rec.at("endpoint").at("port") == mock.port());
  CHECK(rec.at("banner") == "SSH-2.0-MockSSH_0.9");
  CHECK(rec.at("host_keys")[0].at("md5") == "f6158e16b693ecbff8956ff708a70f37");
  CHECK(r.err.find("\"attempted\":1") != std::string::npos);
  CHECK(r.err.find("\"succeeded\":1") != std::string::npos);
}

TEST_CASE("scan reads a target file and appends JSON Lines") {
  MockSshServer mock(one_key_config());
  started(mock);
  TempDir dir;
  std::string list_path = dir.file("targets.txt");
  {
    std::ofstream list(list_path);
    list << "# lab hosts\n";
    list << "127.0.0.1:" << mock.port() << "\n\n";
    list << "127.0.0.1 " << mock.port() << "\n";
  }
  std::string out_path = dir.file("records.jsonl");

  RunResult r = run_process({kCli, "scan", "--targets", list_path, "--jsonl-out", out_path,
                             "--timeout", "2", "--retries", "0"});
  mock.stop();

  CHECK(r.exit_code == 0);
  CHECK(r.out.empty());  // records went to the file
  std::ifstream in(out_path);
  std::stringstream content;
  content << in.rdbuf();
  CHECK(lines_of(content.str()).size() == 2);
}

TEST_CASE("scan accepts targets on stdin") {
  MockSshServer mock(one_key_config());
  started(mock);
  std::string stdin_data = "127.0.0.1:" + std::to_string(mock.port()) + "\n";

  RunResult r = run_process({kCli, "scan", "--targets", "-", "--timeout", "2", "--retries", "0"},
                            stdin_data);
  mock.stop();

  CHECK(r.exit_code == 0);
  CHECK(lines_of(r.out).size() == 1);
}

TEST_CASE("scan exits 2 when no target yields a record") {
  std::string target = "127.0.0.1:" + std::to_string(closed_port());
  RunResult r = run_process({kCli, "scan", target, "--timeout", "1", "--retries", "0"});
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("failed at connect") != std::string::npos);
  CHECK(r.err.find("\"succeeded\":0") != std::string::npos);
}

TEST_CASE("usage errors exit 1") {
  CHECK(run_process({kCli, "scan", "--no-such-flag"}).exit_code == 1);
  CHECK(run_process({kCli, "query", "sideways"}).exit_code == 1);
  CHECK(run_process({kCli, "query", "host"}).exit_code == 1);  // missing value
  CHECK(run_process({kCli}).exit_code == 1);                   // subcommand required
  CHECK(run_process({kCli, "--help"}).exit_code == 0);
}

TEST_CASE("scan results land in a store and answer queries") {
  MockSshServer mock(one_key_config());
  started(mock);
  TempDir dir;
  std::string db = dir.file("scan.db");
  std::string target = "127.0.0.1:" + std::to_string(mock.port());

  RunResult scan = run_process({kCli, "scan", target, "--store", db, "--timeout", "2", "--retries", "0"});
  mock.stop();
  REQUIRE(scan.exit_code == 0);
  CHECK(scan.out.empty());  // store configured, stdout stays quiet

  RunResult host = run_process({kCli, "query", "host", "127.0.0.1", "--store", db});
  CHECK(host.exit_code == 0);
  json histories = json::parse(host.out);
  REQUIRE(histories.size() == 1);
  CHECK(histories[0].at("port") == mock.port());
  CHECK(histories[0].at("keys")[0].at("md5") == "f6158e16b693ecbff8956ff708a70f37");

  RunResult key = run_process({kCli, "query", "key", "f6158e16b693ecbff8956ff708a70f37", "--store", db});
  CHECK(key.exit_code == 0);
  CHECK(json::parse(key.out).at("hosts").size() == 1);

  RunResult stats = run_process({kCli, "query", "stats", "--store", db});
  CHECK(stats.exit_code == 0);
  CHECK(json::parse(stats.out).at("host_count") == 1);

  RunResult missing = run_process({kCli, "query", "key", "ffffffffffffffffffffffffffffffff", "--store", db});
  CHECK(missing.exit_code == 3);

  RunResult no_store = run_process({kCli, "query", "stats"});
  CHECK(no_store.exit_code == 1);
}

TEST_CASE("import skips bad lines and export replays the good ones") {
  auto ed = load_fixture_key("mock_ed25519.pub");
  auto rsa = load_fixture_key("mock_rsa.pub");
  std::string good1 = record_to_json(make_record("192.0.2.1", 22, 100, "OpenSSH_9.6", {ed}));
  std::string good2 = record_to_json(make_record("198.51.100.2", 2222, 200, "dropbear_2022.83", {rsa}));

  TempDir dir;
  std::string jsonl = dir.file("feed.jsonl");
  {
    std::ofstream out(jsonl);
    out << good1 << "\n" << good2 << "\n" << "{\"broken\": true}\n";
  }
  std::string db = dir.file("imported.db");

  RunResult imp = run_process({kCli, "import", "--store", db, jsonl});
  CHECK(imp.exit_code == 0);
  CHECK(imp.out.find("{\"imported\":2,\"skipped\":1}") != std::string::npos);
  CHECK(imp.err.find("warning: line 3") != std::string::npos);

  RunResult exp = run_process({kCli, "export", "--store", db});
  CHECK(exp.exit_code == 0);
  auto exported = lines_of(exp.out);
  REQUIRE(exported.size() == 2);
  CHECK(exported[0] == good1);
  CHECK(exported[1] == good2);
  CHECK(exp.err.find("{\"exported\":2}") != std::string::npos);

  // Round trip: importing the export reproduces the same store content.
  std::string db2 = dir.file("roundtrip.db");
  RunResult imp2 = run_process({kCli, "import", "--store", db2, "-"}, exp.out);
  CHECK(imp2.exit_code == 0);
  RunResult exp2 = run_process({kCli, "export", "--store", db2});
  CHECK(exp2.out == exp.out);
}

TEST_CASE("serve hosts the API over a store") {
  auto ed = load_fixture_key("mock_ed25519.pub");
  TempDir dir;
  std::string db = dir.file("serve.db");
  {
    Datastore store(open_sqlite_backend(db));
    store.ingest(make_record("192.0.2.1", 22, 100, "OpenSSH_9.6", {ed}));
  }

  SpawnedProcess server({kCli, "serve", "--store", db, "--bind", "127.0.0.1:0"});
  std::string ready = server.wait_for_stderr_line("listening on");
  REQUIRE(!ready.empty());
  auto open_paren = ready.find("(port ");
  REQUIRE(open_paren != std::string::npos);
  int port = std::stoi(ready.substr(open_paren + 6));
  REQUIRE(port > 0);

  httplib::Client client("127.0.0.1", port);
  client.set_connection_timeout(5);
  auto res = client.Get("/stats");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body).at("host_count") == 1);

  res = client.Get("/host/ssh/192.0.2.1");
  REQUIRE(res);
  CHECK(res->status == 200);

  server.terminate();
}
