#include "qkdnet/relay_protocol.hpp"

#include <algorithm>
#include <cmath>

#include "qkdnet/errors.hpp"
#include "qkdnet/simd/xor_kernels.hpp"

namespace qkdnet::relay {

namespace {

constexpr unsigned kMaxEnumerationBits = 12;

void require_same_length(const KeyBlock& a, const KeyBlock& b, const char* op) {
  if (a.length_bits() != b.length_bits()) {
    throw DomainError(std::string(op) + ": key lengths differ (" +
                      std::to_string(a.length_bits()) + " vs " + std::to_string(b.length_bits()) +
                      ")");
  }
}

KeyBlock xor_blocks(const KeyBlock& a, const KeyBlock& b) {
  std::vector<std::uint8_t> out(a.bytes().size());
  simd::xor_bytes(a.bytes(), b.bytes(), out);
  return KeyBlock::from_bytes(std::move(out), a.length_bits());
}

// Packed value of a block of at most 16 bits, MSB first.
std::uint32_t unpack_small(const std::uint8_t* bytes, std::size_t nbytes, unsigned length_bits) {
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < nbytes; ++i) v = (v << 8) | bytes[i];
  return v >> (nbytes * 8 - length_bits);
}

double entropy_bits(std::span<const std::uint64_t> counts, double total) {
  double h = 0.0;
  for (std::uint64_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace

std::string_view to_string(RelayKind kind) noexcept {
  switch (kind) {
    case RelayKind::TrustedNode:
      return "trusted_node";
    case RelayKind::TrustedSatellite:
      return "trusted_satellite";
    case RelayKind::UntrustedEntanglementSatellite:
      return "untrusted_entanglement_satellite";
    case RelayKind::UntrustedMdiSatellite:
      return "untrusted_mdi_satellite";
  }
  return "unknown";
}

std::optional<RelayKind> relay_kind_from_string(std::string_view name) noexcept {
  for (RelayKind k : {RelayKind::TrustedNode, RelayKind::TrustedSatellite,
                      RelayKind::UntrustedEntanglementSatellite,
                      RelayKind::UntrustedMdiSatellite}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

KeyBlock xor_parity(const KeyBlock& k_a, const KeyBlock& k_b) {
  require_same_length(k_a, k_b, "xor_parity");
  return xor_blocks(k_a, k_b);
}

KeyBlock recover_remote_key(const KeyBlock& local, const KeyBlock& parity) {
  require_same_length(local, parity, "recover_remote_key");
  return xor_blocks(local, parity);
}

ChainOutcome chain_establish(const RelayChain& chain) {
  if (chain.nodes.size() < 2) {
    throw DomainError("chain_establish: a chain needs two end points");
  }
  if (chain.segment_keys.size() != chain.nodes.size() - 1) {
    throw DomainError("chain_establish: expected " + std::to_string(chain.nodes.size() - 1) +
                      " segment keys, got " + std::to_string(chain.segment_keys.size()));
  }
  for (std::size_t i = 0; i < chain.segment_keys.size(); ++i) {
    if (!chain.segment_keys[i]) {
      throw ProtocolError("chain_establish: no key on segment " + chain.nodes[i] + " - " +
                          chain.nodes[i + 1]);
    }
  }
  const KeyBlock& first = *chain.segment_keys.front();
  for (const auto& key : chain.segment_keys) {
    require_same_length(first, *key, "chain_establish");
  }

  std::vector<KeyBlock> announcements;
  announcements.reserve(chain.nodes.size() - 2);
  for (std::size_t relay = 1; relay + 1 < chain.nodes.size(); ++relay) {
    announcements.push_back(
        xor_parity(*chain.segment_keys[relay - 1], *chain.segment_keys[relay]));
  }

  // Far end walks back towards the near end one announcement at a time.
  KeyBlock far_view = *chain.segment_keys.back();
  for (auto it = announcements.rbegin(); it != announcements.rend(); ++it) {
    far_view = recover_remote_key(far_view, *it);
  }
  return ChainOutcome{std::move(announcements), first, std::move(far_view)};
}

LeakageSummary announcement_leakage_test(unsigned key_length_bits) {
  if (key_length_bits == 0 || key_length_bits > kMaxEnumerationBits) {
    throw DomainError("announcement_leakage_test: length must be in [1, 12]");
  }
  const std::uint32_t n = 1u << key_length_bits;
  const std::size_t nbytes = bytes_for_bits(key_length_bits);

  // Every possible K_b, packed back to back, so one kernel call produces all
  // announcements for a fixed K_a.
  std::vector<std::uint8_t> all_b(static_cast<std::size_t>(n) * nbytes);
  for (std::uint32_t v = 0; v < n; ++v) {
    const KeyBlock kb = KeyBlock::from_uint(v, key_length_bits);
    std::copy(kb.bytes().begin(), kb.bytes().end(), all_b.begin() + v * nbytes);
  }
  std::vector<std::uint8_t> repeated_a(all_b.size());
  std::vector<std::uint8_t> parities(all_b.size());

  std::vector<std::uint64_t> marginal(n, 0);
  std::vector<std::uint64_t> reference;
  std::vector<std::uint64_t> hist(n);
  bool uniform = true;
  double conditional_entropy = 0.0;
  const double total = static_cast<double>(n) * n;

  for (std::uint32_t a = 0; a < n; ++a) {
    const KeyBlock ka = KeyBlock::from_uint(a, key_length_bits);
    for (std::uint32_t v = 0; v < n; ++v) {
      std::copy(ka.bytes().begin(), ka.bytes().end(), repeated_a.begin() + v * nbytes);
    }
    simd::xor_bytes(repeated_a, all_b, parities);

    std::fill(hist.begin(), hist.end(), 0);
    for (std::uint32_t v = 0; v < n; ++v) {
      ++hist[unpack_small(parities.data() + v * nbytes, nbytes, key_length_bits)];
    }
    // Count of (K_a = a, parity = p) must not depend on a.
    if (reference.empty()) {
      reference = hist;
    } else if (hist != reference) {
      uniform = false;
    }
    for (std::uint32_t p = 0; p < n; ++p) marginal[p] += hist[p];
    conditional_entropy += (1.0 / n) * entropy_bits(hist, static_cast<double>(n));
  }

  LeakageSummary s;
  s.length_bits = key_length_bits;
  s.pairs_enumerated = static_cast<std::uint64_t>(n) * n;
  s.min_pairs_per_parity = marginal.front();
  s.max_pairs_per_parity = marginal.front();
  for (std::uint64_t c : marginal) {
    if (c != 0) ++s.parity_values_seen;
    s.min_pairs_per_parity = std::min(s.min_pairs_per_parity, c);
    s.max_pairs_per_parity = std::max(s.max_pairs_per_parity, c);
  }
  s.conditional_uniform = uniform;
  s.mutual_information_bits = std::max(0.0, entropy_bits(marginal, total) - conditional_entropy);
  return s;
}

std::vector<std::pair<KeyBlock, KeyBlock>> pairs_announcing(const KeyBlock& parity) {
  const auto length = static_cast<unsigned>(parity.length_bits());
  if (length > kMaxEnumerationBits) {
    throw DomainError("pairs_announcing: length must be <= 12");
  }
  std::vector<std::pair<KeyBlock, KeyBlock>> out;
  const std::uint32_t n = 1u << length;
  for (std::uint32_t a = 0; a < n; ++a) {
    for (std::uint32_t b = 0; b < n; ++b) {
      KeyBlock ka = KeyBlock::from_uint(a, length);
      KeyBlock kb = KeyBlock::from_uint(b, length);
      if (xor_parity(ka, kb) == parity) out.emplace_back(std::move(ka), std::move(kb));
    }
  }
  return out;
}

UntrustedRate untrusted_establish(const link::LinkBudget& arm_a, const link::LinkBudget& arm_b,
                                  RelayKind kind, double source_rate_hz, double sifting_factor,
                                  double practical_rate_bps) {
  if (is_trusted(kind)) {
    throw UsageError("untrusted_establish: " + std::string(to_string(kind)) +
                     " is a trusted relay kind");
  }
  UntrustedRate r;
  r.combined_loss_db = link::combined_arm_loss(arm_a, arm_b);
  r.rate_bps = link::key_rate_estimate(source_rate_hz, r.combined_loss_db, sifting_factor);
  r.practical = r.rate_bps >= practical_rate_bps;
  return r;
}

std::set<NodePair> compromise_analysis(std::span<const RelayPath> paths,
                                       const std::set<std::string>& compromised) {
  std::set<std::string> known;
  for (const auto& p : paths) {
    known.insert(p.a);
    known.insert(p.b);
    for (const auto& hop : p.interior) known.insert(hop.node);
  }
  for (const auto& node : compromised) {
    if (!known.contains(node)) {
      throw DomainError("compromise_analysis: unknown node '" + node + "'");
    }
  }

  std::set<NodePair> leaked;
  for (const auto& p : paths) {
    bool leaks = compromised.contains(p.a) || compromised.contains(p.b);
    for (const auto& hop : p.interior) {
      if (leaks) break;
      leaks = is_trusted(hop.kind) && compromised.contains(hop.node);
    }
    if (leaks) leaked.emplace(p.a, p.b);
  }
  return leaked;
}

}  // namespace qkdnet::relay
