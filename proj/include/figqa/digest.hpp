#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace figqa {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

std::string base64_encode(std::string_view data);

/// Deterministic 64-bit seed derived from a run seed and an item key, so that
/// per-item randomness does not depend on processing order.
std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view key);

/// Uniform integer in [0, bound) drawn from a SplitMix64 stream. Portable across
/// standard libraries, unlike std::uniform_int_distribution.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  std::uint64_t uniform(std::uint64_t bound);

 private:
  std::uint64_t state_;
};

}  // namespace figqa
