#include "passivessh/datastore.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <map>
#include <mutex>

#include "passivessh/bytes.hpp"
#include "passivessh/digest.hpp"
#include "passivessh/errors.hpp"

namespace pssh {

namespace {

using nlohmann::json;

class MemoryBackend final : public StorageBackend {
 public:
  std::optional<std::string> get(const std::string& key) override {
    std::lock_guard lock(mutex_);
    auto it = map_.find(key);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

  void scan_prefix(const std::string& prefix,
                   const std::function<bool(const std::string&, const std::string&)>& fn) override {
    std::lock_guard lock(mutex_);
    for (auto it = map_.lower_bound(prefix); it != map_.end(); ++it) {
      if (it->first.compare(0, prefix.size(), prefix) != 0) break;
      if (!fn(it->first, it->second)) break;
    }
  }

  void apply(const std::vector<std::pair<std::string, std::optional<std::string>>>& batch) override {
    std::lock_guard lock(mutex_);
    for (const auto& [key, value] : batch) {
      if (value)
        map_[key] = *value;
      else
        map_.erase(key);
    }
  }

 private:
  std::mutex mutex_;
  std::map<std::string, std::string> map_;
};

class SqliteBackend final : public StorageBackend {
 public:
  explicit SqliteBackend(const std::string& path) {
    if (sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                        nullptr) != SQLITE_OK)
      throw Error(ErrorKind::storage_failure, "cannot open store at " + path + ": " + message());
    exec("PRAGMA journal_mode=WAL");
    exec("CREATE TABLE IF NOT EXISTS kv (k TEXT PRIMARY KEY, v TEXT NOT NULL) WITHOUT ROWID");
  }

  ~SqliteBackend() override {
    if (db_) sqlite3_close(db_);
  }

  std::optional<std::string> get(const std::string& key) override {
    std::lock_guard lock(mutex_);
    Stmt s(db_, "SELECT v FROM kv WHERE k = ?1");
    s.bind(1, key);
    if (sqlite3_step(s.get()) == SQLITE_ROW) return column_text(s.get(), 0);
    return std::nullopt;
  }

  void scan_prefix(const std::string& prefix,
                   const std::function<bool(const std::string&, const std::string&)>& fn) override {
    std::lock_guard lock(mutex_);
    Stmt s(db_, "SELECT k, v FROM kv WHERE k >= ?1 AND k < ?2 ORDER BY k");
    std::string upper = prefix;
    upper.back() = static_cast<char>(upper.back() + 1);  // prefixes end in '/', never 0xff
    s.bind(1, prefix);
    s.bind(2, upper);
    while (sqlite3_step(s.get()) == SQLITE_ROW)
      if (!fn(column_text(s.get(), 0), column_text(s.get(), 1))) break;
  }

  void apply(const std::vector<std::pair<std::string, std::optional<std::string>>>& batch) override {
    std::lock_guard lock(mutex_);
    exec("BEGIN IMMEDIATE");
    try {
      for (const auto& [key, value] : batch) {
        if (value) {
          Stmt s(db_, "INSERT INTO kv (k, v) VALUES (?1, ?2) ON CONFLICT(k) DO UPDATE SET v = excluded.v");
          s.bind(1, key);
          s.bind(2, *value);
          if (sqlite3_step(s.get()) != SQLITE_DONE)
            throw Error(ErrorKind::storage_failure, "write failed: " + message());
        } else {
          Stmt s(db_, "DELETE FROM kv WHERE k = ?1");
          s.bind(1, key);
          if (sqlite3_step(s.get()) != SQLITE_DONE)
            throw Error(ErrorKind::storage_failure, "delete failed: " + message());
        }
      }
      exec("COMMIT");
    } catch (...) {
      sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
      throw;
    }
  }

 private:
  class Stmt {
   public:
    Stmt(sqlite3* db, const char* sql) {
      if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK)
        throw Error(ErrorKind::storage_failure, std::string("prepare failed: ") + sqlite3_errmsg(db));
    }
    ~Stmt() { sqlite3_finalize(stmt_); }
    Stmt(const Stmt&) = delete;
    Stmt& operator=(const Stmt&) = delete;
    void bind(int idx, const std::string& text) {
      sqlite3_bind_text(stmt_, idx, text.data(), static_cast<int>(text.size()), SQLITE_TRANSIENT);
    }
    sqlite3_stmt* get() { return stmt_; }

   private:
    sqlite3_stmt* stmt_ = nullptr;
  };

  static std::string column_text(sqlite3_stmt* stmt, int col) {
    const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt, col));
    return std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt, col)));
  }

  std::string message() const { return sqlite3_errmsg(db_); }

  void exec(const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
      std::string detail = err ? err : "unknown";
      sqlite3_free(err);
      throw Error(ErrorKind::storage_failure, std::string(sql) + ": " + detail);
    }
  }

  std::mutex mutex_;
  sqlite3* db_ = nullptr;
};

std::string host_key_of(const Endpoint& e) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "%05u", e.port);
  return "h/" + e.host + "/" + buf;
}

std::string key_key_of(const std::string& md5_hex) { return "k/" + md5_hex; }
std::string hassh_key_of(const std::string& hassh) { return "s/" + hassh; }

// Banners are arbitrary operator-controlled text; hex keeps the key space
// clean for any byte content.
std::string banner_key_of(const std::string& banner) { return "b/" + to_hex(to_bytes(banner)); }

std::string seq_key_of(std::uint64_t seq) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%012llu", static_cast<unsigned long long>(seq));
  return "o/" + std::string(buf);
}

json endpoint_json(const Endpoint& e) { return json{{"host", e.host}, {"port", e.port}}; }

Endpoint endpoint_from(const json& j) {
  return Endpoint{j.at("host").get<std::string>(), j.at("port").get<std::uint16_t>()};
}

// Finds the element of `arr` whose fields match `probe` (all non-range keys),
// appending a fresh entry when absent. Returns (element ref, was_new).
std::pair<json*, bool> upsert_range(json& arr, const json& probe, std::int64_t t) {
  for (auto& item : arr) {
    bool match = true;
    for (auto it = probe.begin(); it != probe.end(); ++it)
      if (item.at(it.key()) != it.value()) {
        match = false;
        break;
      }
    if (match) {
      item["first_seen"] = std::min(item.at("first_seen").get<std::int64_t>(), t);
      item["last_seen"] = std::max(item.at("last_seen").get<std::int64_t>(), t);
      return {&item, false};
    }
  }
  json fresh = probe;
  fresh["first_seen"] = t;
  fresh["last_seen"] = t;
  arr.push_back(std::move(fresh));
  return {&arr.back(), true};
}

Sighting sighting_from(const json& j) {
  return Sighting{endpoint_from(j), j.at("first_seen").get<std::int64_t>(),
                  j.at("last_seen").get<std::int64_t>()};
}

std::vector<Sighting> sightings_from(const json& arr) {
  std::vector<Sighting> out;
  for (const auto& item : arr) out.push_back(sighting_from(item));
  std::sort(out.begin(), out.end(),
            [](const Sighting& a, const Sighting& b) { return a.endpoint < b.endpoint; });
  return out;
}

HostHistory history_from(const json& j) {
  HostHistory h;
  h.endpoint = endpoint_from(j);
  h.first_seen = j.at("first_seen").get<std::int64_t>();
  h.last_seen = j.at("last_seen").get<std::int64_t>();
  for (const auto& b : j.at("banners"))
    h.banners.push_back({b.at("banner").get<std::string>(), b.at("first_seen").get<std::int64_t>(),
                         b.at("last_seen").get<std::int64_t>()});
  for (const auto& k : j.at("keys"))
    h.keys.push_back({k.at("md5").get<std::string>(), k.at("algorithm").get<std::string>(),
                      k.at("first_seen").get<std::int64_t>(), k.at("last_seen").get<std::int64_t>()});
  for (const auto& s : j.at("hasshes"))
    h.hasshes.push_back({s.at("hassh").get<std::string>(), s.at("first_seen").get<std::int64_t>(),
                         s.at("last_seen").get<std::int64_t>()});
  return h;
}

KeyIndexEntry key_entry_from(const json& j) {
  KeyIndexEntry e;
  e.md5_hex = j.at("md5").get<std::string>();
  e.algorithm = j.at("algorithm").get<std::string>();
  e.sha256_b64 = j.at("sha256").get<std::string>();
  e.base64_blob = j.at("base64").get<std::string>();
  e.hosts = sightings_from(j.at("hosts"));
  return e;
}

json parse_value(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorKind::storage_failure, "corrupt store value");
  return j;
}

}  // namespace

std::unique_ptr<StorageBackend> open_memory_backend() { return std::make_unique<MemoryBackend>(); }

std::unique_ptr<StorageBackend> open_sqlite_backend(const std::string& path) {
  return std::make_unique<SqliteBackend>(path);
}

Datastore::Datastore(std::unique_ptr<StorageBackend> backend) : backend_(std::move(backend)) {
  if (auto seq = backend_->get("m/next_seq")) next_seq_ = std::stoull(*seq);
}

IngestOutcome Datastore::ingest(const ScanRecord& r) {
  std::unique_lock lock(mutex_);
  IngestOutcome outcome;
  std::vector<std::pair<std::string, std::optional<std::string>>> batch;
  const std::int64_t t = r.observed_at;

  // Host history.
  json history;
  const std::string hkey = host_key_of(r.endpoint);
  if (auto existing = backend_->get(hkey)) {
    history = parse_value(*existing);
    history["first_seen"] = std::min(history.at("first_seen").get<std::int64_t>(), t);
    history["last_seen"] = std::max(history.at("last_seen").get<std::int64_t>(), t);
  } else {
    outcome.new_host = true;
    history = endpoint_json(r.endpoint);
    history["first_seen"] = t;
    history["last_seen"] = t;
    history["banners"] = json::array();
    history["keys"] = json::array();
    history["hasshes"] = json::array();
  }
  outcome.new_banner = upsert_range(history["banners"], json{{"banner", r.banner.raw}}, t).second;
  upsert_range(history["hasshes"], json{{"hassh", r.hassh_server}}, t);
  for (const auto& key : r.host_keys) {
    auto [_, fresh] =
        upsert_range(history["keys"], json{{"md5", key.md5_hex()}, {"algorithm", key.algorithm}}, t);
    if (fresh) ++outcome.new_keys;
  }
  batch.emplace_back(hkey, history.dump());

  // Key index: digest -> hosts.
  for (const auto& key : r.host_keys) {
    const std::string kkey = key_key_of(key.md5_hex());
    json entry;
    if (auto existing = backend_->get(kkey)) {
      entry = parse_value(*existing);
    } else {
      entry = json{{"md5", key.md5_hex()},
                   {"algorithm", key.algorithm},
                   {"sha256", key.sha256_b64},
                   {"base64", key.base64_blob},
                   {"hosts", json::array()}};
    }
    upsert_range(entry["hosts"], endpoint_json(r.endpoint), t);
    batch.emplace_back(kkey, entry.dump());
  }

  // hassh index.
  {
    const std::string skey = hassh_key_of(r.hassh_server);
    json entry;
    if (auto existing = backend_->get(skey))
      entry = parse_value(*existing);
    else
      entry = json{{"hassh", r.hassh_server}, {"hosts", json::array()}};
    upsert_range(entry["hosts"], endpoint_json(r.endpoint), t);
    batch.emplace_back(skey, entry.dump());
  }

  // Banner index.
  {
    const std::string bkey = banner_key_of(r.banner.raw);
    json entry;
    if (auto existing = backend_->get(bkey))
      entry = parse_value(*existing);
    else
      entry = json{{"banner", r.banner.raw}, {"hosts", json::array()}};
    upsert_range(entry["hosts"], endpoint_json(r.endpoint), t);
    batch.emplace_back(bkey, entry.dump());
  }

  // Observation log, replayed by export.
  batch.emplace_back(seq_key_of(next_seq_), record_to_json(r));
  batch.emplace_back("m/next_seq", std::to_string(next_seq_ + 1));

  backend_->apply(batch);
  ++next_seq_;
  return outcome;
}

std::vector<HostHistory> Datastore::host_lookup(const std::string& host,
                                                std::optional<std::uint16_t> port) const {
  std::shared_lock lock(mutex_);
  std::vector<HostHistory> out;
  if (port) {
    if (auto value = backend_->get(host_key_of(Endpoint{host, *port})))
      out.push_back(history_from(parse_value(*value)));
  } else {
    backend_->scan_prefix("h/" + host + "/", [&](const std::string&, const std::string& value) {
      out.push_back(history_from(parse_value(value)));
      return true;
    });
  }
  if (out.empty()) throw Error(ErrorKind::not_found, "no history for host " + host);
  return out;
}

KeyIndexEntry Datastore::key_lookup(const std::string& md5_hex) const {
  std::shared_lock lock(mutex_);
  auto value = backend_->get(key_key_of(md5_hex));
  if (!value) throw Error(ErrorKind::not_found, "unknown key digest " + md5_hex);
  return key_entry_from(parse_value(*value));
}

std::vector<Sighting> Datastore::hassh_lookup(const std::string& hassh) const {
  std::shared_lock lock(mutex_);
  auto value = backend_->get(hassh_key_of(hassh));
  if (!value) throw Error(ErrorKind::not_found, "unknown hassh " + hassh);
  return sightings_from(parse_value(*value).at("hosts"));
}

std::vector<Sighting> Datastore::banner_lookup(const std::string& banner) const {
  std::shared_lock lock(mutex_);
  auto value = backend_->get(banner_key_of(banner));
  if (!value) throw Error(ErrorKind::not_found, "unknown banner");
  return sightings_from(parse_value(*value).at("hosts"));
}

std::vector<std::string> Datastore::list_banners() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  backend_->scan_prefix("b/", [&](const std::string&, const std::string& value) {
    out.push_back(parse_value(value).at("banner").get<std::string>());
    return true;
  });
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<KeyIndexEntry> Datastore::list_keys() const {
  std::shared_lock lock(mutex_);
  std::vector<KeyIndexEntry> out;
  backend_->scan_prefix("k/", [&](const std::string&, const std::string& value) {
    out.push_back(key_entry_from(parse_value(value)));
    return true;
  });
  return out;
}

StoreStats Datastore::stats() const {
  std::shared_lock lock(mutex_);
  StoreStats s;
  backend_->scan_prefix("b/", [&](const std::string&, const std::string&) {
    ++s.banner_count;
    return true;
  });
  backend_->scan_prefix("h/", [&](const std::string&, const std::string& value) {
    ++s.host_count;
    if (is_onion(parse_value(value).at("host").get<std::string>())) ++s.onion_count;
    return true;
  });
  backend_->scan_prefix("k/", [&](const std::string&, const std::string& value) {
    ++s.key_counts_by_type[parse_value(value).at("algorithm").get<std::string>()];
    return true;
  });
  return s;
}

std::vector<OnionCorrelation> Datastore::correlate_onions() const {
  std::shared_lock lock(mutex_);
  std::vector<OnionCorrelation> out;
  backend_->scan_prefix("k/", [&](const std::string&, const std::string& value) {
    json entry = parse_value(value);
    std::vector<Endpoint> onions, clearnet;
    for (const auto& h : entry.at("hosts")) {
      Endpoint e = endpoint_from(h);
      (is_onion(e.host) ? onions : clearnet).push_back(e);
    }
    std::sort(onions.begin(), onions.end());
    std::sort(clearnet.begin(), clearnet.end());
    for (const auto& o : onions)
      for (const auto& c : clearnet) out.push_back({o, c, entry.at("md5").get<std::string>()});
    return true;
  });
  return out;
}

std::size_t Datastore::export_jsonl(std::ostream& out) const {
  std::shared_lock lock(mutex_);
  std::size_t n = 0;
  backend_->scan_prefix("o/", [&](const std::string&, const std::string& value) {
    out << value << '\n';
    ++n;
    return true;
  });
  if (!out) throw Error(ErrorKind::io_error, "export write failed");
  return n;
}

namespace {

json sighting_json(const Sighting& s) {
  return json{{"host", s.endpoint.host},
              {"port", s.endpoint.port},
              {"first_seen", s.first_seen},
              {"last_seen", s.last_seen}};
}

json history_json(const HostHistory& h) {
  json j = endpoint_json(h.endpoint);
  j["first_seen"] = h.first_seen;
  j["last_seen"] = h.last_seen;
  j["banners"] = json::array();
  for (const auto& b : h.banners)
    j["banners"].push_back({{"banner", b.banner}, {"first_seen", b.first_seen}, {"last_seen", b.last_seen}});
  j["keys"] = json::array();
  for (const auto& k : h.keys)
    j["keys"].push_back({{"md5", k.md5_hex},
                         {"algorithm", k.algorithm},
                         {"first_seen", k.first_seen},
                         {"last_seen", k.last_seen}});
  j["hasshes"] = json::array();
  for (const auto& s : h.hasshes)
    j["hasshes"].push_back({{"hassh", s.hassh}, {"first_seen", s.first_seen}, {"last_seen", s.last_seen}});
  return j;
}

json key_entry_json(const KeyIndexEntry& e) {
  json j{{"md5", e.md5_hex}, {"algorithm", e.algorithm}, {"sha256", e.sha256_b64}, {"base64", e.base64_blob}};
  j["hosts"] = json::array();
  for (const auto& s : e.hosts) j["hosts"].push_back(sighting_json(s));
  return j;
}

}  // namespace

std::string to_json_string(const HostHistory& h) { return history_json(h).dump(); }

std::string to_json_string(const KeyIndexEntry& e) { return key_entry_json(e).dump(); }

std::string to_json_string(const std::vector<HostHistory>& v) {
  json arr = json::array();
  for (const auto& h : v) arr.push_back(history_json(h));
  return arr.dump();
}

std::string to_json_string(const std::vector<Sighting>& v) {
  json arr = json::array();
  for (const auto& s : v) arr.push_back(sighting_json(s));
  return arr.dump();
}

std::string to_json_string(const StoreStats& s) {
  json counts = json::object();
  for (const auto& [alg, n] : s.key_counts_by_type) counts[alg] = n;
  return json{{"banner_count", s.banner_count},
              {"host_count", s.host_count},
              {"onion_count", s.onion_count},
              {"key_counts_by_type", counts}}
      .dump();
}

std::string to_json_string(const std::vector<OnionCorrelation>& v) {
  json arr = json::array();
  for (const auto& c : v)
    arr.push_back({{"onion", endpoint_json(c.onion)},
                   {"clearnet", endpoint_json(c.clearnet)},
                   {"md5", c.md5_hex}});
  return arr.dump();
}

ImportResult Datastore::import_jsonl(std::istream& in) {
  ImportResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ScanRecord r;
    try {
      r = record_from_json(line);
    } catch (const Error& e) {
      ++result.skipped;
      result.warnings.push_back("line " + std::to_string(line_no) + ": " + e.what());
      continue;
    }
    ingest(r);
    ++result.imported;
  }
  return result;
}

}  // namespace pssh
