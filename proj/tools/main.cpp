#include <CLI11.hpp>
#include <fstream>
#include <httplib.h>
#include <iostream>
#include <mutex>
#include <sstream>

#include "passivessh/api.hpp"
#include "passivessh/datastore.hpp"
#include "passivessh/scanner.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitScanFailed = 2;
constexpr int kExitNotFound = 3;

std::pair<std::string, std::uint16_t> parse_host_port(const std::string& text, std::uint16_t default_port) {
  std::string host = text;
  std::uint16_t port = default_port;
  if (!text.empty() && text.front() == '[') {
    auto close = text.find(']');
    if (close == std::string::npos) throw CLI::ValidationError("address", "unterminated '[' in " + text);
    host = text.substr(1, close - 1);
    if (close + 1 < text.size()) {
      if (text[close + 1] != ':') throw CLI::ValidationError("address", "expected ':' after ']'");
      port = static_cast<std::uint16_t>(std::stoi(text.substr(close + 2)));
    }
  } else if (auto colon = text.rfind(':'); colon != std::string::npos && text.find(':') == colon) {
    host = text.substr(0, colon);
    port = static_cast<std::uint16_t>(std::stoi(text.substr(colon + 1)));
  }
  return {host, port};
}

std::vector<std::uint16_t> parse_ports(const std::string& text) {
  std::vector<std::uint16_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    int v = std::stoi(item);
    if (v < 1 || v > 65535) throw CLI::ValidationError("--ports", "port out of range: " + item);
    out.push_back(static_cast<std::uint16_t>(v));
  }
  if (out.empty()) throw CLI::ValidationError("--ports", "no ports given");
  return out;
}

std::string url_encode(const std::string& s) {
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 15]);
    }
  }
  return out;
}

struct ScanArgs {
  std::vector<std::string> inline_targets;
  std::string targets_file;
  std::string ports_text = "22,2222";
  double timeout_s = 10.0;
  int parallel = 128;
  int retries = 1;
  std::string socks_text;
  std::string store_path;
  std::string jsonl_path;
};

int run_scan(const ScanArgs& args) {
  pssh::ScanPolicy policy;
  policy.ports = parse_ports(args.ports_text);
  auto timeout = std::chrono::milliseconds(static_cast<std::int64_t>(args.timeout_s * 1000));
  policy.connect_timeout = timeout;
  policy.read_timeout = timeout;
  policy.max_parallel = args.parallel;
  policy.retries = args.retries;
  if (!args.socks_text.empty()) {
    auto [host, port] = parse_host_port(args.socks_text, 9050);
    policy.socks_proxy = pssh::SocksProxy{host, port};
  }

  std::vector<pssh::Endpoint> targets;
  for (const auto& t : args.inline_targets) {
    auto parsed = pssh::parse_target_line(t, policy.ports);
    targets.insert(targets.end(), parsed.begin(), parsed.end());
  }
  if (!args.targets_file.empty()) {
    std::vector<pssh::Endpoint> from_file;
    if (args.targets_file == "-") {
      from_file = pssh::load_targets(std::cin, policy.ports);
    } else {
      std::ifstream in(args.targets_file);
      if (!in) throw pssh::Error(pssh::ErrorKind::io_error, "cannot open " + args.targets_file);
      from_file = pssh::load_targets(in, policy.ports);
    }
    targets.insert(targets.end(), from_file.begin(), from_file.end());
  }

  std::unique_ptr<pssh::Datastore> store;
  if (!args.store_path.empty())
    store = std::make_unique<pssh::Datastore>(pssh::open_sqlite_backend(args.store_path));

  std::ofstream jsonl_file;
  std::ostream* jsonl = nullptr;
  if (!args.jsonl_path.empty()) {
    if (args.jsonl_path == "-") {
      jsonl = &std::cout;
    } else {
      jsonl_file.open(args.jsonl_path, std::ios::app);
      if (!jsonl_file) throw pssh::Error(pssh::ErrorKind::io_error, "cannot open " + args.jsonl_path);
      jsonl = &jsonl_file;
    }
  } else if (!store) {
    jsonl = &std::cout;  // no sink configured: emit records on stdout
  }

  std::mutex sink_mutex;
  auto sink = [&](const pssh::ScanOutcome& out) {
    std::lock_guard lock(sink_mutex);
    if (out.record) {
      if (store) store->ingest(*out.record);
      if (jsonl) *jsonl << pssh::record_to_json(*out.record) << '\n';
    } else if (out.failure) {
      std::cerr << pssh::to_display(out.endpoint) << " failed at " << out.failure->stage << ": "
                << out.failure->message << '\n';
    }
  };

  auto summary = pssh::scan_many(targets, policy, sink);
  if (jsonl) jsonl->flush();
  std::cerr << "{\"attempted\":" << summary.attempted << ",\"succeeded\":" << summary.succeeded
            << ",\"failed\":" << summary.failed << "}\n";
  if (summary.attempted > 0 && summary.succeeded == 0) return kExitScanFailed;
  return kExitOk;
}

struct ServeArgs {
  std::string store_path;
  std::string bind_text = "127.0.0.1:8899";
  std::vector<std::string> tokens;
  bool readonly = false;
  bool protect_reads = false;
};

int run_serve(const ServeArgs& args) {
  pssh::ApiConfig config;
  std::tie(config.bind_host, config.bind_port) = parse_host_port(args.bind_text, 8899);
  config.tokens.insert(args.tokens.begin(), args.tokens.end());
  config.readonly = args.readonly;
  config.protect_reads = args.protect_reads;

  auto backend = args.store_path.empty() ? pssh::open_memory_backend()
                                         : pssh::open_sqlite_backend(args.store_path);
  pssh::Datastore store(std::move(backend));
  pssh::ApiServer server(std::move(config), store);
  server.start();
  std::cerr << "listening on " << args.bind_text << " (port " << server.port() << ")\n";
  server.wait();
  return kExitOk;
}

struct QueryArgs {
  std::string kind;
  std::string value;
  std::string store_path;
  std::string remote;
  std::string token;
  int port = 0;
};

int run_local_query(const QueryArgs& args, pssh::Datastore& store) {
  std::optional<std::uint16_t> port;
  if (args.port != 0) port = static_cast<std::uint16_t>(args.port);
  std::string out;
  if (args.kind == "host")
    out = pssh::to_json_string(store.host_lookup(args.value, port));
  else if (args.kind == "key")
    out = pssh::to_json_string(store.key_lookup(args.value));
  else if (args.kind == "hassh")
    out = pssh::to_json_string(store.hassh_lookup(args.value));
  else if (args.kind == "banner")
    out = pssh::to_json_string(store.banner_lookup(args.value));
  else if (args.kind == "stats")
    out = pssh::to_json_string(store.stats());
  else
    out = pssh::to_json_string(store.correlate_onions());
  std::cout << out << '\n';
  return kExitOk;
}

int run_remote_query(const QueryArgs& args) {
  std::string path;
  if (args.kind == "host") {
    path = "/host/ssh/" + url_encode(args.value);
    if (args.port != 0) path += "?port=" + std::to_string(args.port);
  } else if (args.kind == "key") {
    path = "/fingerprint/" + args.value;
  } else if (args.kind == "hassh") {
    path = "/hassh/hosts/" + args.value;
  } else if (args.kind == "banner") {
    path = "/banner/" + url_encode(args.value);
  } else if (args.kind == "stats") {
    path = "/stats";
  } else {
    path = "/onions/correlation";
  }
  httplib::Client client(args.remote);
  httplib::Headers headers;
  if (!args.token.empty()) headers.emplace("Authorization", "Bearer " + args.token);
  auto res = client.Get(path, headers);
  if (!res) {
    std::cerr << "request failed: " << httplib::to_string(res.error()) << '\n';
    return kExitUsage;
  }
  if (res->status == 404) {
    std::cerr << res->body << '\n';
    return kExitNotFound;
  }
  if (res->status != 200) {
    std::cerr << "HTTP " << res->status << ": " << res->body << '\n';
    return kExitUsage;
  }
  std::cout << res->body << '\n';
  return kExitOk;
}

int run_query(const QueryArgs& args) {
  bool needs_value = args.kind == "host" || args.kind == "key" || args.kind == "hassh" || args.kind == "banner";
  if (needs_value && args.value.empty()) {
    std::cerr << "query " << args.kind << " requires a value\n";
    return kExitUsage;
  }
  if (!args.remote.empty()) return run_remote_query(args);
  if (args.store_path.empty()) {
    std::cerr << "query needs --store or --remote\n";
    return kExitUsage;
  }
  pssh::Datastore store(pssh::open_sqlite_backend(args.store_path));
  try {
    return run_local_query(args, store);
  } catch (const pssh::Error& e) {
    if (e.kind() == pssh::ErrorKind::not_found) {
      std::cerr << e.what() << '\n';
      return kExitNotFound;
    }
    throw;
  }
}

int run_import(const std::string& store_path, const std::string& file) {
  pssh::Datastore store(pssh::open_sqlite_backend(store_path));
  pssh::ImportResult result;
  if (file == "-") {
    result = store.import_jsonl(std::cin);
  } else {
    std::ifstream in(file);
    if (!in) throw pssh::Error(pssh::ErrorKind::io_error, "cannot open " + file);
    result = store.import_jsonl(in);
  }
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "{\"imported\":" << result.imported << ",\"skipped\":" << result.skipped << "}\n";
  return kExitOk;
}

int run_export(const std::string& store_path, const std::string& file) {
  pssh::Datastore store(pssh::open_sqlite_backend(store_path));
  std::size_t n = 0;
  if (file == "-" || file.empty()) {
    n = store.export_jsonl(std::cout);
    std::cout.flush();
  } else {
    std::ofstream out(file);
    if (!out) throw pssh::Error(pssh::ErrorKind::io_error, "cannot open " + file);
    n = store.export_jsonl(out);
  }
  std::cerr << "{\"exported\":" << n << "}\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active SSH fingerprint collector with a historical lookup datastore"};
  app.require_subcommand(1);

  ScanArgs scan_args;
  auto* scan = app.add_subcommand("scan", "Fingerprint SSH endpoints and record the results");
  scan->add_option("hosts", scan_args.inline_targets, "Inline targets: host, host:port, or 'host port'");
  scan->add_option("--targets", scan_args.targets_file, "Target list file ('-' for stdin)");
  scan->add_option("--ports", scan_args.ports_text, "Ports for targets without one")
      ->capture_default_str();
  scan->add_option("--timeout", scan_args.timeout_s, "Connect/read timeout in seconds")
      ->capture_default_str();
  scan->add_option("--parallel", scan_args.parallel, "Concurrent connection bound")->capture_default_str();
  scan->add_option("--retries", scan_args.retries, "Extra connect attempts")->capture_default_str();
  scan->add_option("--socks", scan_args.socks_text, "SOCKS5 proxy (host[:port]), required for onions");
  scan->add_option("--store", scan_args.store_path, "Ingest results into this store");
  scan->add_option("--jsonl-out", scan_args.jsonl_path, "Append records as JSON Lines ('-' for stdout)");

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "Run the REST API over a store");
  serve->add_option("--store", serve_args.store_path, "Store path (omit for an in-memory store)");
  serve->add_option("--bind", serve_args.bind_text, "Bind address host:port")->capture_default_str();
  serve->add_option("--token", serve_args.tokens, "Accepted bearer token (repeatable)");
  serve->add_flag("--readonly", serve_args.readonly, "Disable POST /records");
  serve->add_flag("--protect-reads", serve_args.protect_reads, "Require a token for lookups too");

  QueryArgs query_args;
  auto* query = app.add_subcommand("query", "Look up stored observations");
  query->add_option("kind", query_args.kind, "host|key|hassh|banner|stats|onions")
      ->required()
      ->check(CLI::IsMember({"host", "key", "hassh", "banner", "stats", "onions"}));
  query->add_option("value", query_args.value, "Host address, md5 digest, or banner text");
  query->add_option("--store", query_args.store_path, "Local store path");
  query->add_option("--remote", query_args.remote, "Base URL of a running instance");
  query->add_option("--token", query_args.token, "Bearer token for --remote");
  query->add_option("--port", query_args.port, "Restrict host lookup to one port");

  std::string import_store, import_file;
  auto* import_cmd = app.add_subcommand("import", "Ingest a JSON Lines file");
  import_cmd->add_option("--store", import_store, "Store path")->required();
  import_cmd->add_option("file", import_file, "JSONL file ('-' for stdin)")->required();

  std::string export_store, export_file = "-";
  auto* export_cmd = app.add_subcommand("export", "Replay the store as JSON Lines");
  export_cmd->add_option("--store", export_store, "Store path")->required();
  export_cmd->add_option("file", export_file, "Output file ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*scan) return run_scan(scan_args);
    if (*serve) return run_serve(serve_args);
    if (*query) return run_query(query_args);
    if (*import_cmd) return run_import(import_store, import_file);
    if (*export_cmd) return run_export(export_store, export_file);
  } catch (const pssh::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == pssh::ErrorKind::not_found ? kExitNotFound : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
