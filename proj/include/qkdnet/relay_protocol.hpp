#pragma once

// Trusted-relay key chaining by XOR parity announcements, pair-based
// (untrusted satellite) key establishment, and adversary compromise analysis.

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qkdnet/key_block.hpp"
#include "qkdnet/link_models.hpp"

namespace qkdnet::relay {

enum class RelayKind {
  TrustedNode,
  TrustedSatellite,
  UntrustedEntanglementSatellite,
  UntrustedMdiSatellite,
};

std::string_view to_string(RelayKind kind) noexcept;
std::optional<RelayKind> relay_kind_from_string(std::string_view name) noexcept;

/// Trusted relays see segment keys in the clear.
constexpr bool is_trusted(RelayKind kind) noexcept {
  return kind == RelayKind::TrustedNode || kind == RelayKind::TrustedSatellite;
}

/// Bitwise parity K_a ^ K_b. Throws DomainError on length mismatch.
KeyBlock xor_parity(const KeyBlock& k_a, const KeyBlock& k_b);

/// Recovers the far key from the local key and a published parity.
KeyBlock recover_remote_key(const KeyBlock& local, const KeyBlock& parity);

/// A linear chain: nodes[0] and nodes.back() are the end points, everything in
/// between is a trusted relay. segment_keys[i] is shared by nodes[i] and
/// nodes[i + 1].
struct RelayChain {
  std::vector<std::string> nodes;
  std::vector<std::optional<KeyBlock>> segment_keys;
};

struct ChainOutcome {
  // One public parity per interior node, in chain order.
  std::vector<KeyBlock> announcements;
  KeyBlock end_key_a;
  KeyBlock end_key_b;
};

/// Runs the relay announcements and lets both ends derive the shared key.
/// The shared key is the first segment's key; the far end recovers it by
/// folding every announcement into its own segment key.
/// Throws ProtocolError naming the first segment without a key and
/// DomainError for malformed chains or mismatched key lengths.
ChainOutcome chain_establish(const RelayChain& chain);

struct LeakageSummary {
  unsigned length_bits = 0;
  std::uint64_t pairs_enumerated = 0;
  std::uint64_t parity_values_seen = 0;
  std::uint64_t min_pairs_per_parity = 0;
  std::uint64_t max_pairs_per_parity = 0;
  // For every parity value, every K_a value occurs equally often.
  bool conditional_uniform = false;
  // I(K_a; parity) computed from the joint counts.
  double mutual_information_bits = 0.0;
};

/// Exhaustive enumeration of all (K_a, K_b) pairs of the given length
/// (1..12 bits) through the block XOR kernel.
LeakageSummary announcement_leakage_test(unsigned key_length_bits);

/// Every (K_a, K_b) pair whose announcement equals `parity` (length <= 12).
std::vector<std::pair<KeyBlock, KeyBlock>> pairs_announcing(const KeyBlock& parity);

struct UntrustedRate {
  double rate_bps = 0.0;
  double combined_loss_db = 0.0;
  bool practical = false;
};

inline constexpr double kDefaultPracticalRateBps = 1.0;

/// Key rate of an entanglement-distribution or MDI link through an untrusted
/// satellite. The satellite holds no key material. Throws UsageError for
/// trusted kinds.
UntrustedRate untrusted_establish(const link::LinkBudget& arm_a, const link::LinkBudget& arm_b,
                                  RelayKind kind, double source_rate_hz,
                                  double sifting_factor = link::kDefaultSiftingFactor,
                                  double practical_rate_bps = kDefaultPracticalRateBps);

struct RelayHop {
  std::string node;
  RelayKind kind = RelayKind::TrustedNode;

  bool operator==(const RelayHop&) const = default;
};

/// Route of one end-to-end key: end points plus ordered interior relays.
struct RelayPath {
  std::string a;
  std::string b;
  std::vector<RelayHop> interior;

  bool operator==(const RelayPath&) const = default;
};

using NodePair = std::pair<std::string, std::string>;

/// End-to-end pairs whose keys an adversary holding `compromised` learns.
/// A pair leaks when a compromised node is one of its end points or a trusted
/// interior relay on its path; untrusted satellites leak nothing.
/// Throws DomainError for ids that appear in no path.
std::set<NodePair> compromise_analysis(std::span<const RelayPath> paths,
                                       const std::set<std::string>& compromised);

}  // namespace qkdnet::relay
