#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nlslab {

struct CriterionResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct BatteryOptions {
  /// Reduced resolutions for a fast smoke pass; thresholds that depend on the
  /// full resolutions are rescaled accordingly and reported as such.
  bool quick = false;
  std::uint64_t seed = 20250810;
};

/// The full verification battery: conservation, flux-rate identity and its
/// primitive, the weighted derivative inequality, free-dispersion decay,
/// the oscillatory angular integral, stationary states, tail laws,
/// scattering extraction and the amplitude saturation probe.
std::vector<CriterionResult> run_acceptance_battery(const BatteryOptions& opts);

}  // namespace nlslab
