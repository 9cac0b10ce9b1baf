#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <string>

#include "passivessh/datastore.hpp"

namespace pssh {

// List fields in responses are capped at this many entries per page; a
// "cursor" query parameter continues where the previous page stopped.
inline constexpr std::size_t kPageLimit = 10'000;

struct ApiConfig {
  std::string bind_host = "127.0.0.1";
  std::uint16_t bind_port = 8899;  // 0 picks an ephemeral port
  std::set<std::string> tokens;    // empty disables auth
  bool readonly = false;           // disables POST /records (405)
  bool protect_reads = false;      // token-gate lookups too, not just pushes
};

// HTTP/1.1 JSON front end over a Datastore.
//
// Routes: GET /banners, /banner/{urlencoded}, /host/ssh/{host}?port=,
// /fingerprint/all, /fingerprint/{md5}, /hassh/hosts/{md5}, /stats,
// /onions/correlation; POST /records (one record or an array).
class ApiServer {
 public:
  ApiServer(ApiConfig config, Datastore& store);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds and serves on a background thread; throws Error{io_error} when the
  // address cannot be bound.
  void start();
  std::uint16_t port() const;
  void wait();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pssh
