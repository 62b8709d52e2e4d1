#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>

namespace archminer {

// 64-bit FNV-1a. Used for content fingerprints of corpora, models and run
// artifacts; not a cryptographic hash.
class Fingerprint {
 public:
  Fingerprint& update(std::string_view bytes) noexcept {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= kPrime;
    }
    return *this;
  }

  Fingerprint& update_u64(std::uint64_t value) noexcept {
    for (int i = 0; i < 8; ++i) {
      state_ ^= static_cast<unsigned char>(value >> (8 * i));
      state_ *= kPrime;
    }
    return *this;
  }

  Fingerprint& update_f64(double value) noexcept { return update_u64(std::bit_cast<std::uint64_t>(value)); }

  // Length-prefixed so that ("ab","c") and ("a","bc") differ.
  Fingerprint& update_field(std::string_view bytes) noexcept {
    update_u64(bytes.size());
    return update(bytes);
  }

  std::uint64_t value() const noexcept { return state_; }
  std::string hex() const;

 private:
  static constexpr std::uint64_t kOffset = 14695981039346656037ull;
  static constexpr std::uint64_t kPrime = 1099511628211ull;
  std::uint64_t state_ = kOffset;
};

std::string to_hex(std::uint64_t value);

inline std::string fingerprint_of(std::string_view bytes) { return Fingerprint{}.update(bytes).hex(); }

// SplitMix64 step; derives independent sub-seeds from (seed, stream).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace archminer
