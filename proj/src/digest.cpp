#include "projgan/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>

#include "projgan/error.hpp"

namespace projgan {
namespace {

std::array<unsigned char, 32> sha256_raw(const void* data, size_t size) {
  std::array<unsigned char, 32> out{};
  unsigned int len = 0;
  if (EVP_Digest(data, size, out.data(), &len, EVP_sha256(), nullptr) != 1 || len != 32) {
    throw Error(ErrorKind::Numeric, "sha256 digest failed");
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::span<const std::byte> bytes) {
  const auto raw = sha256_raw(bytes.data(), bytes.size());
  std::string hex;
  hex.reserve(64);
  char buf[3];
  for (unsigned char c : raw) {
    std::snprintf(buf, sizeof buf, "%02x", c);
    hex += buf;
  }
  return hex;
}

std::string sha256_hex(std::string_view text) {
  return sha256_hex(std::as_bytes(std::span(text.data(), text.size())));
}

uint64_t derive_seed(uint64_t parent, std::string_view label, uint64_t index, uint64_t attempt) {
  const std::string key = std::to_string(parent) + "/" + std::string(label) + "/" +
                          std::to_string(index) + "/" + std::to_string(attempt);
  const auto raw = sha256_raw(key.data(), key.size());
  uint64_t seed = 0;
  for (int i = 0; i < 8; ++i) seed = (seed << 8) | raw[static_cast<size_t>(i)];
  return seed;
}

}  // namespace projgan
