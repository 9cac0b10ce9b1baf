#include "passivessh/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "passivessh/errors.hpp"

namespace pssh {

namespace {

void set_io_timeout(int fd, std::chrono::milliseconds t) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(t.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((t.count() % 1000) * 1000);
  setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

int connect_with_timeout(const addrinfo* ai, std::chrono::milliseconds timeout) {
  int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
  if (fd < 0) throw Error(ErrorKind::connect_failed, std::strerror(errno));

  int flags = fcntl(fd, F_GETFL, 0);
  fcntl(fd, F_SETFL, flags | O_NONBLOCK);

  int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
  if (rc != 0 && errno != EINPROGRESS) {
    int err = errno;
    ::close(fd);
    throw Error(ErrorKind::connect_failed, std::strerror(err));
  }
  if (rc != 0) {
    pollfd pfd{fd, POLLOUT, 0};
    rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    if (rc == 0) {
      ::close(fd);
      throw Error(ErrorKind::timeout, "connect timed out");
    }
    if (rc < 0) {
      int err = errno;
      ::close(fd);
      throw Error(ErrorKind::connect_failed, std::strerror(err));
    }
    int so_error = 0;
    socklen_t len = sizeof(so_error);
    getsockopt(fd, SOL_SOCKET, SO_ERROR, &so_error, &len);
    if (so_error != 0) {
      ::close(fd);
      throw Error(ErrorKind::connect_failed, std::strerror(so_error));
    }
  }
  fcntl(fd, F_SETFL, flags);
  return fd;
}

void write_u16_be(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v >> 8);
  p[1] = static_cast<std::uint8_t>(v & 0xff);
}

// RFC 1928 CONNECT through an established proxy stream.
void socks5_connect(TcpStream& s, const Endpoint& target) {
  const std::uint8_t greeting[3] = {0x05, 0x01, 0x00};  // version 5, one method: none
  s.write_all(greeting);
  std::uint8_t reply[2] = {};
  read_exact(s, reply);
  if (reply[0] != 0x05 || reply[1] != 0x00)
    throw Error(ErrorKind::connect_failed, "proxy refused anonymous method");

  Bytes req = {0x05, 0x01, 0x00};  // CONNECT
  in_addr v4{};
  in6_addr v6{};
  if (inet_pton(AF_INET, target.host.c_str(), &v4) == 1) {
    req.push_back(0x01);
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v4);
    req.insert(req.end(), p, p + 4);
  } else if (inet_pton(AF_INET6, target.host.c_str(), &v6) == 1) {
    req.push_back(0x04);
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v6);
    req.insert(req.end(), p, p + 16);
  } else {
    // Domain form: the proxy resolves the name. Required for onions.
    if (target.host.size() > 255) throw Error(ErrorKind::malformed, "hostname too long for SOCKS5");
    req.push_back(0x03);
    req.push_back(static_cast<std::uint8_t>(target.host.size()));
    req.insert(req.end(), target.host.begin(), target.host.end());
  }
  std::uint8_t portbuf[2];
  write_u16_be(portbuf, target.port);
  req.insert(req.end(), portbuf, portbuf + 2);
  s.write_all(req);

  std::uint8_t head[4] = {};
  read_exact(s, head);
  if (head[0] != 0x05) throw Error(ErrorKind::connect_failed, "bad SOCKS5 reply version");
  if (head[1] != 0x00)
    throw Error(ErrorKind::connect_failed, "proxy connect failed, code " + std::to_string(head[1]));
  std::size_t addr_len = 0;
  switch (head[3]) {
    case 0x01: addr_len = 4; break;
    case 0x04: addr_len = 16; break;
    case 0x03: {
      std::uint8_t n = 0;
      read_exact(s, std::span(&n, 1));
      addr_len = n;
      break;
    }
    default: throw Error(ErrorKind::connect_failed, "bad SOCKS5 address type");
  }
  Bytes rest(addr_len + 2);
  read_exact(s, rest);
}

}  // namespace

TcpStream TcpStream::connect(const std::string& host, std::uint16_t port,
                             std::chrono::milliseconds connect_timeout,
                             std::chrono::milliseconds io_timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_NUMERICSERV;

  addrinfo* res = nullptr;
  int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res);
  if (rc != 0) throw Error(ErrorKind::connect_failed, gai_strerror(rc));

  int fd = -1;
  std::string last_error = "no addresses";
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    try {
      fd = connect_with_timeout(ai, connect_timeout);
      break;
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw Error(ErrorKind::connect_failed, last_error);

  set_io_timeout(fd, io_timeout);
  int one = 1;
  setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return TcpStream(fd);
}

TcpStream::TcpStream(TcpStream&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

TcpStream& TcpStream::operator=(TcpStream&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

TcpStream::~TcpStream() { close(); }

void TcpStream::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

std::size_t TcpStream::read_some(std::span<std::uint8_t> buf) {
  for (;;) {
    ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n > 0) return static_cast<std::size_t>(n);
    if (n == 0) return 0;
    if (errno == EINTR) continue;
    if (errno == EAGAIN || errno == EWOULDBLOCK) throw Error(ErrorKind::timeout, "read timed out");
    throw Error(ErrorKind::io_error, std::strerror(errno));
  }
}

void TcpStream::write_all(std::span<const std::uint8_t> data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) throw Error(ErrorKind::timeout, "write timed out");
      throw Error(ErrorKind::io_error, std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

TcpStream open_connection(const Endpoint& target, const std::optional<SocksProxy>& proxy,
                          std::chrono::milliseconds connect_timeout,
                          std::chrono::milliseconds io_timeout) {
  if (is_onion(target.host) && !proxy)
    throw Error(ErrorKind::connect_failed, "onion targets require a SOCKS5 proxy");
  if (!proxy) return TcpStream::connect(target.host, target.port, connect_timeout, io_timeout);

  TcpStream s = TcpStream::connect(proxy->host, proxy->port, connect_timeout, io_timeout);
  socks5_connect(s, target);
  return s;
}

}  // namespace pssh
