#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace pssh {

// A scannable target. host is an IPv4 or IPv6 literal or a v3 onion name.
struct Endpoint {
  std::string host;
  std::uint16_t port = 22;

  auto operator<=>(const Endpoint&) const = default;
};

bool is_ipv4(std::string_view host);
bool is_ipv6(std::string_view host);
bool is_onion(std::string_view host);
bool is_valid_host(std::string_view host);

// Validates and normalizes (onion names lowercased). Throws Error{malformed}.
Endpoint make_endpoint(std::string_view host, int port);

// "192.0.2.1:22", "[2001:db8::1]:22", "…abcd.onion:2222"
std::string to_display(const Endpoint& e);

}  // namespace pssh
