#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace pssh {

std::array<std::uint8_t, 16> md5(std::span<const std::uint8_t> data);
std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data);

std::string md5_hex(std::span<const std::uint8_t> data);

// "d4:1d:8c:..." display form.
std::string md5_colons(std::span<const std::uint8_t> data);

}  // namespace pssh
