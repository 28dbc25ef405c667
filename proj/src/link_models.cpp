#include "qkdnet/link_models.hpp"

#include <cmath>
#include <numeric>

#include "qkdnet/errors.hpp"

namespace qkdnet::link {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw DomainError(what);
}

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

// Spot sizes can be zero at zero range with a point source; treat that as
// full collection instead of rejecting it.
double spot_collection_loss(double beam_m, double rx_m) {
  if (beam_m <= rx_m) return 0.0;
  return diffraction_loss(beam_m, rx_m);
}

}  // namespace

std::string_view to_string(Direction d) noexcept {
  return d == Direction::Downlink ? "downlink" : "uplink";
}

void FiberParams::validate() const {
  require(std::isfinite(attenuation_db_per_km) && attenuation_db_per_km > 0.0,
          "fiber attenuation_db_per_km must be > 0");
  require(finite_nonneg(coexistence_penalty_db), "fiber coexistence_penalty_db must be >= 0");
}

void FreeSpaceParams::validate() const {
  require(finite_nonneg(atmospheric_absorption_db_per_km),
          "free-space atmospheric_absorption_db_per_km must be >= 0");
  require(finite_nonneg(weather_penalty_db), "free-space weather_penalty_db must be >= 0");
  require(finite_nonneg(turbulence_penalty_db), "free-space turbulence_penalty_db must be >= 0");
  require(finite_nonneg(tx_divergence_urad), "free-space tx_divergence_urad must be >= 0");
  require(finite_nonneg(tx_aperture_m), "free-space tx_aperture_m must be >= 0");
  require(std::isfinite(rx_aperture_m) && rx_aperture_m > 0.0,
          "free-space rx_aperture_m must be > 0");
}

void SatLinkParams::validate() const {
  require(altitude_km >= 300.0 && altitude_km <= 36000.0,
          "satellite altitude_km must be in [300, 36000]");
  require(atmos_attenuation_db >= 3.0 && atmos_attenuation_db <= 8.0,
          "satellite atmos_attenuation_db must be in [3, 8]");
  require(std::isfinite(ground_rx_aperture_m) && ground_rx_aperture_m > 0.0,
          "satellite ground_rx_aperture_m must be > 0");
  require(std::isfinite(sat_rx_aperture_m) && sat_rx_aperture_m > 0.0,
          "satellite sat_rx_aperture_m must be > 0");
  require(std::isfinite(uplink_beam_m_at_500km) && uplink_beam_m_at_500km > 0.0,
          "satellite uplink_beam_m_at_500km must be > 0");
  require(finite_nonneg(pointing_penalty_db), "satellite pointing_penalty_db must be >= 0");
  require(finite_nonneg(tx_divergence_urad), "satellite tx_divergence_urad must be >= 0");
  require(finite_nonneg(sat_tx_aperture_m), "satellite sat_tx_aperture_m must be >= 0");
}

LinkBudget& LinkBudget::add(std::string source, double db) {
  if (!finite_nonneg(db)) {
    throw DomainError("loss component '" + source + "' must be a finite value >= 0 dB");
  }
  components_.push_back({std::move(source), db});
  return *this;
}

double LinkBudget::total_db() const noexcept {
  return std::accumulate(components_.begin(), components_.end(), 0.0,
                         [](double acc, const LossComponent& c) { return acc + c.db; });
}

double LinkBudget::transmittance() const { return transmittance_of(total_db()); }

double LinkBudget::component_db(std::string_view source) const noexcept {
  for (const auto& c : components_) {
    if (c.source == source) return c.db;
  }
  return 0.0;
}

bool LinkBudget::has_component(std::string_view source) const noexcept {
  for (const auto& c : components_) {
    if (c.source == source) return true;
  }
  return false;
}

double transmittance_of(double loss_db) {
  require(finite_nonneg(loss_db), "transmittance_of: loss must be >= 0 dB");
  return std::pow(10.0, -loss_db / 10.0);
}

LinkBudget fiber_loss(double length_km, const FiberParams& params) {
  require(std::isfinite(length_km) && length_km >= 0.0, "fiber_loss: length must be >= 0 km");
  params.validate();
  LinkBudget budget;
  budget.add(std::string(kAbsorption), params.attenuation_db_per_km * length_km);
  budget.add(std::string(kCoexistence), params.coexistence_penalty_db);
  return budget;
}

double expected_arrivals(double source_rate_hz, double loss_db, double duration_s) {
  require(finite_nonneg(source_rate_hz), "expected_arrivals: source rate must be >= 0");
  require(finite_nonneg(duration_s), "expected_arrivals: duration must be >= 0");
  return source_rate_hz * transmittance_of(loss_db) * duration_s;
}

double beam_diameter(double range_km, double divergence_urad, double tx_aperture_m) {
  require(finite_nonneg(range_km), "beam_diameter: range must be >= 0");
  require(finite_nonneg(divergence_urad), "beam_diameter: divergence must be >= 0");
  require(finite_nonneg(tx_aperture_m), "beam_diameter: aperture must be >= 0");
  return tx_aperture_m + (range_km * 1e3) * (divergence_urad * 1e-6);
}

double diffraction_loss(double beam_diameter_m, double rx_aperture_m) {
  require(std::isfinite(beam_diameter_m) && beam_diameter_m > 0.0,
          "diffraction_loss: beam diameter must be > 0");
  require(std::isfinite(rx_aperture_m) && rx_aperture_m > 0.0,
          "diffraction_loss: receiver aperture must be > 0");
  if (rx_aperture_m >= beam_diameter_m) return 0.0;
  // -10 log10((rx/beam)^2)
  return 20.0 * std::log10(beam_diameter_m / rx_aperture_m);
}

LinkBudget downlink_loss(double range_km, const SatLinkParams& params) {
  if (params.direction != Direction::Downlink) {
    throw UsageError("downlink_loss called with uplink parameters");
  }
  params.validate();
  require(finite_nonneg(range_km), "downlink_loss: range must be >= 0");
  const double beam = beam_diameter(range_km, params.tx_divergence_urad, params.sat_tx_aperture_m);
  LinkBudget budget;
  budget.add(std::string(kDiffraction), spot_collection_loss(beam, params.ground_rx_aperture_m));
  // Spot is far larger than any eddy by the time it reaches the atmosphere.
  budget.add(std::string(kBeamWandering), 0.0);
  budget.add(std::string(kAtmosphere), params.atmos_attenuation_db);
  return budget;
}

double uplink_beam_diameter(double range_km, const SatLinkParams& params) {
  require(finite_nonneg(range_km), "uplink_beam_diameter: range must be >= 0");
  return params.uplink_beam_m_at_500km * (range_km / 500.0);
}

LinkBudget uplink_loss(double range_km, const SatLinkParams& params) {
  if (params.direction != Direction::Uplink) {
    throw UsageError("uplink_loss called with downlink parameters");
  }
  params.validate();
  require(finite_nonneg(range_km), "uplink_loss: range must be >= 0");
  const double beam = uplink_beam_diameter(range_km, params);
  LinkBudget budget;
  budget.add(std::string(kSpreading), spot_collection_loss(beam, params.sat_rx_aperture_m));
  budget.add(std::string(kAtmosphere), params.atmos_attenuation_db);
  budget.add(std::string(kPointing), params.pointing_penalty_db);
  return budget;
}

LinkBudget terrestrial_freespace_loss(double length_km, const FreeSpaceParams& params) {
  require(std::isfinite(length_km) && length_km >= 0.0,
          "terrestrial_freespace_loss: length must be >= 0 km");
  params.validate();
  const double beam = beam_diameter(length_km, params.tx_divergence_urad, params.tx_aperture_m);
  LinkBudget budget;
  budget.add(std::string(kAbsorption), params.atmospheric_absorption_db_per_km * length_km);
  budget.add(std::string(kDiffraction), spot_collection_loss(beam, params.rx_aperture_m));
  budget.add(std::string(kWeather), params.weather_penalty_db);
  budget.add(std::string(kTurbulence), params.turbulence_penalty_db);
  return budget;
}

double combined_arm_loss(const LinkBudget& arm_a, const LinkBudget& arm_b) noexcept {
  return arm_a.total_db() + arm_b.total_db();
}

double key_rate_estimate(double source_rate_hz, double loss_db, double sifting_factor) {
  require(std::isfinite(sifting_factor) && sifting_factor > 0.0 && sifting_factor <= 1.0,
          "key_rate_estimate: sifting factor must be in (0, 1]");
  require(finite_nonneg(source_rate_hz), "key_rate_estimate: source rate must be >= 0");
  return source_rate_hz * transmittance_of(loss_db) * sifting_factor;
}

}  // namespace qkdnet::link
