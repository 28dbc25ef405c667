#include "qkdnet/simd/xor_kernels.hpp"

namespace qkdnet::simd::scalar {

void xor_bytes(const std::uint8_t* a, const std::uint8_t* b, std::uint8_t* out,
               std::size_t n) noexcept {
  for (std::size_t i = 0; i != n; ++i) {
    out[i] = static_cast<std::uint8_t>(a[i] ^ b[i]);
  }
}

}  // namespace qkdnet::simd::scalar
