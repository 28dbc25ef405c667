#include <cstdlib>
#include <cstring>
#include <string>

#include "qkdnet/errors.hpp"
#include "qkdnet/simd/xor_kernels.hpp"

namespace qkdnet::simd {

namespace {

using Kernel = void (*)(const std::uint8_t*, const std::uint8_t*, std::uint8_t*,
                        std::size_t) noexcept;

Kernel kernel_for(Isa isa) noexcept {
  switch (isa) {
#if defined(QKDNET_HAVE_X86)
    case Isa::Sse2:
      return &sse2::xor_bytes;
    case Isa::Avx2:
      return &avx2::xor_bytes;
#endif
#if defined(QKDNET_HAVE_NEON)
    case Isa::Neon:
      return &neon::xor_bytes;
#endif
    default:
      return &scalar::xor_bytes;
  }
}

Isa pick_isa() noexcept {
  if (const char* forced = std::getenv("QKDNET_SIMD"); forced != nullptr) {
    for (Isa isa : {Isa::Scalar, Isa::Sse2, Isa::Avx2, Isa::Neon}) {
      if (std::strcmp(forced, isa_name(isa)) == 0 && isa_supported(isa)) {
        return isa;
      }
    }
  }
  if (isa_supported(Isa::Avx2)) return Isa::Avx2;
  if (isa_supported(Isa::Neon)) return Isa::Neon;
  if (isa_supported(Isa::Sse2)) return Isa::Sse2;
  return Isa::Scalar;
}

void check_sizes(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
                 std::span<std::uint8_t> out) {
  if (a.size() != b.size() || a.size() != out.size()) {
    throw DomainError("xor_bytes: operand sizes differ (" + std::to_string(a.size()) + ", " +
                      std::to_string(b.size()) + ", " + std::to_string(out.size()) + ")");
  }
}

}  // namespace

const char* isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Sse2:
      return "sse2";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

bool isa_supported(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
#if defined(QKDNET_HAVE_X86)
    case Isa::Sse2:
      return __builtin_cpu_supports("sse2");
    case Isa::Avx2:
      return __builtin_cpu_supports("avx2");
#endif
#if defined(QKDNET_HAVE_NEON)
    case Isa::Neon:
      return true;
#endif
    default:
      return false;
  }
}

std::vector<Isa> supported_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::Scalar, Isa::Sse2, Isa::Avx2, Isa::Neon}) {
    if (isa_supported(isa)) out.push_back(isa);
  }
  return out;
}

Isa active_isa() noexcept {
  static const Isa chosen = pick_isa();
  return chosen;
}

void xor_bytes(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
               std::span<std::uint8_t> out) {
  check_sizes(a, b, out);
  static const Kernel kernel = kernel_for(active_isa());
  kernel(a.data(), b.data(), out.data(), out.size());
}

void xor_bytes(Isa isa, std::span<const std::uint8_t> a, std::span<const std::uint8_t> b,
               std::span<std::uint8_t> out) {
  check_sizes(a, b, out);
  if (!isa_supported(isa)) {
    throw UsageError(std::string("xor_bytes: ") + isa_name(isa) + " is not available");
  }
  kernel_for(isa)(a.data(), b.data(), out.data(), out.size());
}

}  // namespace qkdnet::simd
