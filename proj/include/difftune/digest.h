// Content hashing: SHA-256 for digests, CRC32C for log-line checksums.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace difftune {

// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

std::uint32_t crc32c(std::string_view text);

// 8 lowercase hex digits.
std::string crc32c_hex(std::string_view text);

std::string to_hex(std::span<const std::uint8_t> bytes);

// 64-bit FNV-1a, used where a stable non-cryptographic key is enough.
std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace difftune
