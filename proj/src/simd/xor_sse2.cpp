#include <emmintrin.h>

#include "qkdnet/simd/xor_kernels.hpp"

namespace qkdnet::simd::sse2 {

void xor_bytes(const std::uint8_t* a, const std::uint8_t* b, std::uint8_t* out,
               std::size_t n) noexcept {
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const __m128i va = _mm_loadu_si128(reinterpret_cast<const __m128i*>(a + i));
    const __m128i vb = _mm_loadu_si128(reinterpret_cast<const __m128i*>(b + i));
    _mm_storeu_si128(reinterpret_cast<__m128i*>(out + i), _mm_xor_si128(va, vb));
  }
  scalar::xor_bytes(a + i, b + i, out + i, n - i);
}

}  // namespace qkdnet::simd::sse2
