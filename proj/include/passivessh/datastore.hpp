#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <shared_mutex>
#include <string>
#include <vector>

#include "passivessh/record.hpp"

namespace pssh {

// Ordered key-value storage. Keys and values are opaque strings; apply()
// commits a batch atomically (nullopt value = delete).
class StorageBackend {
 public:
  virtual ~StorageBackend() = default;
  virtual std::optional<std::string> get(const std::string& key) = 0;
  // Visits keys with the given prefix in ascending order; stop by returning false.
  virtual void scan_prefix(const std::string& prefix,
                           const std::function<bool(const std::string&, const std::string&)>& fn) = 0;
  virtual void apply(const std::vector<std::pair<std::string, std::optional<std::string>>>& batch) = 0;
};

std::unique_ptr<StorageBackend> open_memory_backend();
std::unique_ptr<StorageBackend> open_sqlite_backend(const std::string& path);

struct Sighting {
  Endpoint endpoint;
  std::int64_t first_seen = 0;
  std::int64_t last_seen = 0;
};

struct BannerRange {
  std::string banner;
  std::int64_t first_seen = 0;
  std::int64_t last_seen = 0;
};

struct KeyRange {
  std::string md5_hex;
  std::string algorithm;
  std::int64_t first_seen = 0;
  std::int64_t last_seen = 0;
};

struct HasshRange {
  std::string hassh;
  std::int64_t first_seen = 0;
  std::int64_t last_seen = 0;
};

// Everything ever observed for one endpoint, with per-artifact time ranges.
struct HostHistory {
  Endpoint endpoint;
  std::int64_t first_seen = 0;
  std::int64_t last_seen = 0;
  std::vector<BannerRange> banners;
  std::vector<KeyRange> keys;
  std::vector<HasshRange> hasshes;
};

struct KeyIndexEntry {
  std::string md5_hex;
  std::string algorithm;
  std::string sha256_b64;
  std::string base64_blob;
  std::vector<Sighting> hosts;
};

struct StoreStats {
  std::uint64_t banner_count = 0;
  std::uint64_t host_count = 0;  // endpoints with history
  std::uint64_t onion_count = 0;
  std::map<std::string, std::uint64_t> key_counts_by_type;

  bool operator==(const StoreStats&) const = default;
};

struct OnionCorrelation {
  Endpoint onion;
  Endpoint clearnet;
  std::string md5_hex;
};

struct IngestOutcome {
  bool new_host = false;
  std::size_t new_keys = 0;
  bool new_banner = false;
};

struct ImportResult {
  std::size_t imported = 0;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

// Historical observation store. first_seen only ever decreases toward the
// earliest evidence, last_seen only ever advances. Safe for concurrent use;
// every ingest is atomic as seen by readers.
class Datastore {
 public:
  explicit Datastore(std::unique_ptr<StorageBackend> backend);

  IngestOutcome ingest(const ScanRecord& r);

  // All endpoint histories for the host, one per scanned port. Throws
  // Error{not_found} when nothing matches.
  std::vector<HostHistory> host_lookup(const std::string& host,
                                       std::optional<std::uint16_t> port = std::nullopt) const;
  KeyIndexEntry key_lookup(const std::string& md5_hex) const;
  std::vector<Sighting> hassh_lookup(const std::string& hassh) const;
  std::vector<Sighting> banner_lookup(const std::string& banner) const;

  std::vector<std::string> list_banners() const;
  std::vector<KeyIndexEntry> list_keys() const;
  StoreStats stats() const;

  // Onion-to-clearnet endpoint pairs sharing a key digest.
  std::vector<OnionCorrelation> correlate_onions() const;

  // Replays every ingested observation as JSON Lines; returns the line count.
  std::size_t export_jsonl(std::ostream& out) const;
  // Ingests one record per line; malformed lines are skipped and reported.
  ImportResult import_jsonl(std::istream& in);

 private:
  mutable std::shared_mutex mutex_;
  std::unique_ptr<StorageBackend> backend_;
  std::uint64_t next_seq_ = 0;
};

// Canonical JSON text for query results, shared by the API and the CLI.
std::string to_json_string(const HostHistory& h);
std::string to_json_string(const KeyIndexEntry& e);
std::string to_json_string(const std::vector<HostHistory>& v);
std::string to_json_string(const std::vector<Sighting>& v);
std::string to_json_string(const StoreStats& s);
std::string to_json_string(const std::vector<OnionCorrelation>& v);

}  // namespace pssh
