#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace projgan {

std::string sha256_hex(std::span<const std::byte> bytes);
std::string sha256_hex(std::string_view text);

// Stable 64-bit seed derived from a parent seed and a label path, e.g.
// derive_seed(master, "train", 3, 0) for the first attempt of train sample 3.
uint64_t derive_seed(uint64_t parent, std::string_view label, uint64_t index = 0, uint64_t attempt = 0);

}  // namespace projgan
