#include "passivessh/digest.hpp"

#include <openssl/evp.h>

#include "passivessh/bytes.hpp"
#include "passivessh/errors.hpp"

namespace pssh {

namespace {

template <std::size_t N>
std::array<std::uint8_t, N> evp_digest(const EVP_MD* md, std::span<const std::uint8_t> data) {
  std::array<std::uint8_t, N> out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, md, nullptr) != 1 || len != N)
    throw Error(ErrorKind::io_error, "digest computation failed");
  return out;
}

}  // namespace

std::array<std::uint8_t, 16> md5(std::span<const std::uint8_t> data) {
  return evp_digest<16>(EVP_md5(), data);
}

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data) {
  return evp_digest<32>(EVP_sha256(), data);
}

std::string md5_hex(std::span<const std::uint8_t> data) {
  auto d = md5(data);
  return to_hex(d);
}

std::string md5_colons(std::span<const std::uint8_t> data) {
  auto hex = md5_hex(data);
  std::string out;
  out.reserve(47);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    if (i > 0) out.push_back(':');
    out.append(hex, i, 2);
  }
  return out;
}

}  // namespace pssh
