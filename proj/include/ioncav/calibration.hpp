#pragma once

#include "ioncav/core.hpp"
#include "ioncav/model.hpp"

namespace ioncav {

/// Photon-counting calibration chain. C0 is the expected SPCM count total
/// for <n> = 1 across all repetitions of the window; C1 = C0 / c folds in
/// the field build-up correction so that <n> = C / C1.
struct DetectionChain {
  double p_out = 0.11;    // output-mirror escape probability
  double zeta = 0.0;      // path + detector efficiency
  double c = kDefaultBuildupC;
  double T = 50e-6;       // integration window
  double kappa = kTwoPi * 0.068e6;
  int cycles = 250;       // repetitions summed into one count number

  double efficiency() const { return p_out * zeta; }
  double count_rate_at_unit_n() const { return 2.0 * kappa * p_out * zeta; }
  double C0() const { return count_rate_at_unit_n() * T * cycles; }
  double C1() const { return C0() / c; }
  void validate() const;
};

/// Paper chain: zeta chosen so that C1 = 515 counts exactly (the quoted 4%
/// total efficiency is that product rounded).
DetectionChain default_detection_chain();

struct PhotodiodeReading {
  double V_DC = 0.0;  // coherent offset, volts
  double V_AC = 0.0;  // noise amplitude, volts
  double counts = 0.0;
};

/// <n> = C / C1.
double mean_n_from_counts(double counts, const DetectionChain& chain);

/// Inverse of mean_n_from_counts.
double expected_counts(double mean_n, const DetectionChain& chain);

struct ThermalCalibration {
  double n_coh = 0.0;
  double delta_n = 0.0;  // rad/s
  double n_th = 0.0;
  double S_V = 0.0;  // counts per volt
};

/// Split a photodiode trace into coherent offset and thermal oscillations:
/// S_V = C / V_DC, delta_n = kappa S_V V_AC / C1, with the thermal count
/// share proportional to V_AC.
ThermalCalibration thermal_from_photodiode(const PhotodiodeReading& r,
                                           const DetectionChain& chain);

/// g^2 / (Delta kappa) with Delta = detuning_factor * gamma.
double strong_pull_ratio(double g, double gamma, double kappa, double detuning_factor = 10.0);

}  // namespace ioncav
