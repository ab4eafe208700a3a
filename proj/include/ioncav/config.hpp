#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ioncav/calibration.hpp"
#include "ioncav/ramsey.hpp"

namespace ioncav {

/// Parsed experiment configuration. Configuration files speak MHz (ordinary
/// frequency) and microseconds; everything here is already resolved to rad/s
/// and seconds. Unknown keys anywhere in the file are rejected.
struct ExperimentConfig {
  int schema = 1;
  IonCavityParams params;  // drive (eta, delta_n) resolved
  CoherenceModel coherence;
  Backend backend = Backend::Full;
  std::uint64_t seed = 1;
  int trials = 0;  // 0: emit exact probabilities only
  std::vector<double> phases;

  std::vector<double> sweep_values;
  std::vector<Transition> sweep_transitions;

  std::optional<DetectionChain> detection;
  std::optional<PhotodiodeReading> photodiode;
  std::optional<double> counts;

  std::uint64_t hash = 0;  // FNV-1a of the canonical config text

  /// Fully resolved internal values (rad/s), embedded in output metadata.
  std::string resolved_json() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

std::uint64_t fnv1a64(const std::string& s);

}  // namespace ioncav
