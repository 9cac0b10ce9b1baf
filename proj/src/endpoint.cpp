#include "passivessh/endpoint.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <cctype>

#include "passivessh/errors.hpp"

namespace pssh {

namespace {

constexpr std::string_view kOnionSuffix = ".onion";
constexpr std::size_t kOnionNameLength = 56;

bool is_base32_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '2' && c <= '7');
}

}  // namespace

bool is_ipv4(std::string_view host) {
  in_addr addr{};
  return inet_pton(AF_INET, std::string(host).c_str(), &addr) == 1;
}

bool is_ipv6(std::string_view host) {
  in6_addr addr{};
  return inet_pton(AF_INET6, std::string(host).c_str(), &addr) == 1;
}

bool is_onion(std::string_view host) {
  if (host.size() != kOnionNameLength + kOnionSuffix.size()) return false;
  if (!host.ends_with(kOnionSuffix)) return false;
  return std::all_of(host.begin(), host.begin() + kOnionNameLength, is_base32_char);
}

bool is_valid_host(std::string_view host) {
  return is_ipv4(host) || is_ipv6(host) || is_onion(host);
}

Endpoint make_endpoint(std::string_view host, int port) {
  if (port < 1 || port > 65535) throw Error(ErrorKind::malformed, "port out of range");
  std::string normalized(host);
  std::transform(normalized.begin(), normalized.end(), normalized.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (is_onion(normalized)) return Endpoint{std::move(normalized), static_cast<std::uint16_t>(port)};
  if (is_ipv4(host) || is_ipv6(host))
    return Endpoint{std::string(host), static_cast<std::uint16_t>(port)};
  throw Error(ErrorKind::malformed, "host is not an IPv4/IPv6 literal or v3 onion name");
}

std::string to_display(const Endpoint& e) {
  std::string out;
  if (is_ipv6(e.host))
    out = "[" + e.host + "]";
  else
    out = e.host;
  out += ":" + std::to_string(e.port);
  return out;
}

}  // namespace pssh
