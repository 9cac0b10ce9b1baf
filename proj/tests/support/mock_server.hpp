#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "passivessh/wire.hpp"

namespace pssh_test {

struct MockKey {
  std::string algorithm;              // algorithm embedded in the blob
  pssh::Bytes blob;
  std::vector<std::string> advertise; // names listed in KEXINIT for this key
};

struct MockConfig {
  std::string bind_host = "127.0.0.1";
  std::string identification = "SSH-2.0-MockSSH_0.9";
  std::vector<std::string> pre_banner_lines;
  std::vector<std::string> kex_algorithms = {"curve25519-sha256", "ecdh-sha2-nistp256",
                                             "diffie-hellman-group14-sha256"};
  std::vector<std::string> encryption_c2s = {"chacha20-poly1305@openssh.com", "aes128-ctr"};
  std::vector<std::string> encryption_s2c = {"chacha20-poly1305@openssh.com", "aes128-ctr"};
  std::vector<std::string> mac_c2s = {"umac-64-etm@openssh.com", "hmac-sha2-256"};
  std::vector<std::string> mac_s2c = {"umac-64-etm@openssh.com", "hmac-sha2-256"};
  std::vector<std::string> compression_c2s = {"none", "zlib@openssh.com"};
  std::vector<std::string> compression_s2c = {"none", "zlib@openssh.com"};
  std::vector<MockKey> keys;

  // Fault injection.
  bool speak_http = false;             // pretend to be a web server
  bool close_after_banner = false;     // hang up before KEXINIT
  bool wrong_reply_id = false;         // answer kexdh_init with a bogus message id
  bool first_kex_packet_follows = false;      // set the guess flag and send a junk packet
  std::vector<std::string> stall_algorithms;  // hang instead of replying for these
  std::chrono::milliseconds stall_duration{1500};
  std::chrono::milliseconds handshake_delay{0};  // stretch connections for concurrency tests
};

// Scripted SSH server speaking just enough of the pre-encryption transport
// to exercise the scanner, with concurrency and traffic instrumentation.
class MockSshServer {
 public:
  explicit MockSshServer(MockConfig config);
  ~MockSshServer();
  MockSshServer(const MockSshServer&) = delete;
  MockSshServer& operator=(const MockSshServer&) = delete;

  void start();
  void stop();
  std::uint16_t port() const { return port_; }

  // The KEXINIT the server advertises (for oracle comparisons).
  pssh::KexInitSummary server_kexinit() const;

  int total_connections() const { return total_.load(); }
  int max_concurrent() const { return max_concurrent_.load(); }
  // Client bytes received after the key-exchange reply was sent. A compliant
  // scanner sends nothing (no NEWKEYS) and just closes.
  std::int64_t post_kex_client_bytes() const { return post_kex_bytes_.load(); }

 private:
  void accept_loop();
  void handle(int fd);

  MockConfig config_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::thread accept_thread_;
  std::mutex workers_mutex_;
  std::vector<std::thread> workers_;
  std::set<int> open_fds_;
  std::atomic<bool> stopping_{false};
  std::atomic<int> total_{0};
  std::atomic<int> current_{0};
  std::atomic<int> max_concurrent_{0};
  std::atomic<std::int64_t> post_kex_bytes_{0};
};

}  // namespace pssh_test
