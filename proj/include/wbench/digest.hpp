#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace wbench {

std::string sha256_hex(std::string_view data);

/// First eight bytes of the SHA-256 digest, big-endian.
std::uint64_t sha256_u64(std::string_view data);

std::string base64_encode(std::string_view data);

}  // namespace wbench
