#include "qkdnet/key_block.hpp"

#include <algorithm>

#include "qkdnet/errors.hpp"

namespace qkdnet::relay {

namespace {

void clear_padding(std::vector<std::uint8_t>& bytes, std::size_t length_bits) {
  const std::size_t used = length_bits % 8;
  if (used != 0 && !bytes.empty()) {
    bytes.back() &= static_cast<std::uint8_t>(0xFFu << (8 - used));
  }
}

}  // namespace

KeyBlock::KeyBlock(std::size_t length_bits) : length_bits_(length_bits) {
  if (length_bits == 0) throw DomainError("KeyBlock length must be > 0");
  bytes_.assign(bytes_for_bits(length_bits), 0);
}

KeyBlock::KeyBlock(std::vector<std::uint8_t> bytes, std::size_t length_bits)
    : bytes_(std::move(bytes)), length_bits_(length_bits) {}

KeyBlock KeyBlock::from_string(std::string_view bits) {
  if (bits.empty()) throw DomainError("KeyBlock::from_string: empty bit string");
  std::vector<std::uint8_t> bytes(bytes_for_bits(bits.size()), 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') {
      bytes[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
    } else if (bits[i] != '0') {
      throw DomainError("KeyBlock::from_string: invalid character '" + std::string(1, bits[i]) +
                        "'");
    }
  }
  return KeyBlock(std::move(bytes), bits.size());
}

KeyBlock KeyBlock::from_uint(std::uint64_t value, std::size_t length_bits) {
  if (length_bits == 0 || length_bits > 64) {
    throw DomainError("KeyBlock::from_uint: length must be in [1, 64]");
  }
  std::vector<std::uint8_t> bytes(bytes_for_bits(length_bits), 0);
  for (std::size_t i = 0; i < length_bits; ++i) {
    if ((value >> (length_bits - 1 - i)) & 1u) {
      bytes[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
    }
  }
  return KeyBlock(std::move(bytes), length_bits);
}

KeyBlock KeyBlock::from_bytes(std::vector<std::uint8_t> bytes, std::size_t length_bits) {
  if (length_bits == 0) throw DomainError("KeyBlock length must be > 0");
  if (bytes.size() != bytes_for_bits(length_bits)) {
    throw DomainError("KeyBlock::from_bytes: byte count does not match length");
  }
  clear_padding(bytes, length_bits);
  return KeyBlock(std::move(bytes), length_bits);
}

KeyBlock KeyBlock::random(std::size_t length_bits, std::mt19937_64& rng) {
  if (length_bits == 0) throw DomainError("KeyBlock length must be > 0");
  std::vector<std::uint8_t> bytes(bytes_for_bits(length_bits));
  std::uniform_int_distribution<unsigned> byte_dist(0, 255);
  for (auto& b : bytes) b = static_cast<std::uint8_t>(byte_dist(rng));
  clear_padding(bytes, length_bits);
  return KeyBlock(std::move(bytes), length_bits);
}

bool KeyBlock::bit(std::size_t index) const {
  if (index >= length_bits_) throw DomainError("KeyBlock::bit: index out of range");
  return (bytes_[index / 8] >> (7 - index % 8)) & 1u;
}

bool KeyBlock::is_zero() const noexcept {
  return std::all_of(bytes_.begin(), bytes_.end(), [](std::uint8_t b) { return b == 0; });
}

std::string KeyBlock::to_string() const {
  std::string out(length_bits_, '0');
  for (std::size_t i = 0; i < length_bits_; ++i) {
    if (bit(i)) out[i] = '1';
  }
  return out;
}

std::uint64_t KeyBlock::to_uint() const {
  if (length_bits_ > 64) throw DomainError("KeyBlock::to_uint: block longer than 64 bits");
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < length_bits_; ++i) {
    value = (value << 1) | (bit(i) ? 1u : 0u);
  }
  return value;
}

}  // namespace qkdnet::relay
