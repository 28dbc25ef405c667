#pragma once

// Bytewise XOR kernels used by key-block parity and recovery.
//
// Every variant computes out[i] = a[i] ^ b[i] for i in [0, n). The scalar
// kernel is the reference; vector variants are selected once at runtime from
// CPUID (x86) or compile-time availability (NEON). Setting the environment
// variable QKDNET_SIMD to "scalar", "sse2", "avx2" or "neon" pins the choice,
// which is how the equivalence tests and benchmarks exercise every path.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace qkdnet::simd {

enum class Isa { Scalar, Sse2, Avx2, Neon };

const char* isa_name(Isa isa) noexcept;

bool isa_supported(Isa isa) noexcept;

/// All variants usable on this machine, scalar first.
std::vector<Isa> supported_isas();

/// The variant used by the dispatched entry point.
Isa active_isa() noexcept;

/// Dispatched XOR. All three spans must have the same size; `out` may alias
/// `a` or `b` exactly (in-place) but must not partially overlap them.
void xor_bytes(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
               std::span<std::uint8_t> out);

/// XOR through a specific variant. Throws UsageError if the variant is not
/// available on this machine.
void xor_bytes(Isa isa, std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
               std::span<std::uint8_t> out);

namespace scalar {
void xor_bytes(const std::uint8_t* a, const std::uint8_t* b, std::uint8_t* out,
               std::size_t n) noexcept;
}

#if defined(QKDNET_HAVE_X86)
namespace sse2 {
void xor_bytes(const std::uint8_t* a, const std::uint8_t* b, std::uint8_t* out,
               std::size_t n) noexcept;
}
namespace avx2 {
void xor_bytes(const std::uint8_t* a, const std::uint8_t* b, std::uint8_t* out,
               std::size_t n) noexcept;
}
#endif

#if defined(QKDNET_HAVE_NEON)
namespace neon {
void xor_bytes(const std::uint8_t* a, const std::uint8_t* b, std::uint8_t* out,
               std::size_t n) noexcept;
}
#endif

}  // namespace qkdnet::simd
