#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>

#include "passivessh/endpoint.hpp"
#include "passivessh/wire.hpp"

namespace pssh {

struct SocksProxy {
  std::string host;
  std::uint16_t port = 9050;
};

// Blocking TCP stream with per-operation timeouts. Reads past the deadline
// throw Error{timeout}; connection failures throw Error{connect_failed}.
class TcpStream final : public Stream {
 public:
  static TcpStream connect(const std::string& host, std::uint16_t port,
                           std::chrono::milliseconds connect_timeout,
                           std::chrono::milliseconds io_timeout);

  TcpStream(TcpStream&& other) noexcept;
  TcpStream& operator=(TcpStream&& other) noexcept;
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;
  ~TcpStream() override;

  std::size_t read_some(std::span<std::uint8_t> buf) override;
  void write_all(std::span<const std::uint8_t> data) override;

  void close();
  int fd() const { return fd_; }

 private:
  explicit TcpStream(int fd) : fd_(fd) {}
  int fd_ = -1;
};

// Opens a connection to `target`, directly or through a SOCKS5 proxy
// (RFC 1928, no authentication, remote hostname resolution for onions).
TcpStream open_connection(const Endpoint& target, const std::optional<SocksProxy>& proxy,
                          std::chrono::milliseconds connect_timeout,
                          std::chrono::milliseconds io_timeout);

}  // namespace pssh
