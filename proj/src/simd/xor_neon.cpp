#include <arm_neon.h>

#include "qkdnet/simd/xor_kernels.hpp"

namespace qkdnet::simd::neon {

void xor_bytes(const std::uint8_t* a, const std::uint8_t* b, std::uint8_t* out,
               std::size_t n) noexcept {
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    vst1q_u8(out + i, veorq_u8(vld1q_u8(a + i), vld1q_u8(b + i)));
  }
  scalar::xor_bytes(a + i, b + i, out + i, n - i);
}

}  // namespace qkdnet::simd::neon
