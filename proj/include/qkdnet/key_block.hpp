#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qkdnet::relay {

/// Immutable fixed-length bit string. Bit 0 is the leftmost character of the
/// textual form and the most significant bit of the first byte; padding bits
/// in the last byte are always zero.
class KeyBlock {
 public:
  /// All-zero block. Throws DomainError for length 0.
  explicit KeyBlock(std::size_t length_bits);

  /// Parses "0101...". Throws DomainError on other characters or empty input.
  static KeyBlock from_string(std::string_view bits);

  /// Low `length_bits` bits of `value`, most significant first. length <= 64.
  static KeyBlock from_uint(std::uint64_t value, std::size_t length_bits);

  /// Packed bytes; bits past `length_bits` are cleared.
  static KeyBlock from_bytes(std::vector<std::uint8_t> bytes, std::size_t length_bits);

  static KeyBlock random(std::size_t length_bits, std::mt19937_64& rng);

  std::size_t length_bits() const noexcept { return length_bits_; }
  std::span<const std::uint8_t> bytes() const noexcept { return bytes_; }

  bool bit(std::size_t index) const;
  bool is_zero() const noexcept;
  std::string to_string() const;
  /// Inverse of from_uint. Throws DomainError for blocks longer than 64 bits.
  std::uint64_t to_uint() const;

  bool operator==(const KeyBlock&) const = default;

 private:
  KeyBlock(std::vector<std::uint8_t> bytes, std::size_t length_bits);

  std::vector<std::uint8_t> bytes_;
  std::size_t length_bits_ = 0;
};

inline std::size_t bytes_for_bits(std::size_t bits) noexcept { return (bits + 7) / 8; }

}  // namespace qkdnet::relay
