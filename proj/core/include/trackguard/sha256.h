#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace trackguard {

using Sha256Digest = std::array<uint8_t, 32>;

Sha256Digest sha256(std::string_view data);

}  // namespace trackguard
