#pragma once

// Channel loss budgets for fiber, terrestrial free-space and satellite QKD
// links. All losses are in dB, distances in km, apertures and beam sizes in
// meters, divergences in microradians (full angle).

#include <string>
#include <string_view>
#include <vector>

namespace qkdnet::link {

struct FiberParams {
  double attenuation_db_per_km = 0.2;
  // Raman noise from classical channels sharing the fiber, as a flat penalty.
  double coexistence_penalty_db = 0.0;

  void validate() const;
  bool operator==(const FiberParams&) const = default;
};

struct FreeSpaceParams {
  double atmospheric_absorption_db_per_km = 0.07;
  double weather_penalty_db = 0.0;
  double turbulence_penalty_db = 0.0;
  double tx_divergence_urad = 10.0;
  double tx_aperture_m = 0.02;
  double rx_aperture_m = 0.05;

  void validate() const;
  bool operator==(const FreeSpaceParams&) const = default;
};

enum class Direction { Downlink, Uplink };

std::string_view to_string(Direction d) noexcept;

struct SatLinkParams {
  Direction direction = Direction::Downlink;
  double altitude_km = 500.0;
  double ground_rx_aperture_m = 0.95;
  double sat_rx_aperture_m = 0.3;
  double uplink_beam_m_at_500km = 50.0;
  double atmos_attenuation_db = 5.0;
  double pointing_penalty_db = 5.0;  // uplink only
  // Downlink transmitter: 10 urad reproduces a 12 m spot after 1200 km.
  double tx_divergence_urad = 10.0;
  double sat_tx_aperture_m = 0.0;

  void validate() const;
  bool operator==(const SatLinkParams&) const = default;
};

struct LossComponent {
  std::string source;
  double db = 0.0;

  bool operator==(const LossComponent&) const = default;
};

/// Itemized channel loss. Components keep insertion order; the total is the
/// plain sum of the components.
class LinkBudget {
 public:
  LinkBudget() = default;

  /// Appends a loss term. Throws DomainError for negative or non-finite dB.
  LinkBudget& add(std::string source, double db);

  const std::vector<LossComponent>& components() const noexcept { return components_; }
  double total_db() const noexcept;
  double transmittance() const;

  /// dB of the named component, 0 if absent.
  double component_db(std::string_view source) const noexcept;
  bool has_component(std::string_view source) const noexcept;

  bool operator==(const LinkBudget&) const = default;

 private:
  std::vector<LossComponent> components_;
};

// Component labels used by the models below.
inline constexpr std::string_view kAbsorption = "absorption";
inline constexpr std::string_view kCoexistence = "coexistence";
inline constexpr std::string_view kDiffraction = "diffraction";
inline constexpr std::string_view kBeamWandering = "beam_wandering";
inline constexpr std::string_view kAtmosphere = "atmosphere";
inline constexpr std::string_view kSpreading = "spreading";
inline constexpr std::string_view kPointing = "pointing";
inline constexpr std::string_view kWeather = "weather";
inline constexpr std::string_view kTurbulence = "turbulence";

inline constexpr double kDefaultSiftingFactor = 0.5;

double transmittance_of(double loss_db);

LinkBudget fiber_loss(double length_km, const FiberParams& params = {});

/// Photons expected at the receiver: rate x transmittance x duration.
double expected_arrivals(double source_rate_hz, double loss_db, double duration_s);

/// Linear far-field spot size: aperture + range x divergence.
double beam_diameter(double range_km, double divergence_urad, double tx_aperture_m);

/// Uniform-disk collection loss; 0 dB once the receiver covers the spot.
double diffraction_loss(double beam_diameter_m, double rx_aperture_m);

LinkBudget downlink_loss(double range_km, const SatLinkParams& params);
LinkBudget uplink_loss(double range_km, const SatLinkParams& params);

/// Uplink spot size, scaled linearly from the 500 km reference.
double uplink_beam_diameter(double range_km, const SatLinkParams& params);

LinkBudget terrestrial_freespace_loss(double length_km, const FreeSpaceParams& params = {});

/// Two-arm loss for pair-based (entanglement / MDI) links.
double combined_arm_loss(const LinkBudget& arm_a, const LinkBudget& arm_b) noexcept;

double key_rate_estimate(double source_rate_hz, double loss_db,
                         double sifting_factor = kDefaultSiftingFactor);

}  // namespace qkdnet::link
