#include "ioncav/calibration.hpp"

#include <cmath>
#include <stdexcept>

namespace ioncav {

void DetectionChain::validate() const {
  if (p_out < 0 || p_out > 1 || zeta < 0 || zeta > 1 || c <= 0 || c > 1)
    throw std::invalid_argument("DetectionChain: probabilities must lie in [0, 1]");
  if (T <= 0 || kappa <= 0 || cycles < 1)
    throw std::invalid_argument("DetectionChain: invalid window");
}

DetectionChain default_detection_chain() {
  DetectionChain ch;
  // pin the calibration anchor C1 = 515 counts
  double target_c1 = 515.0;
  ch.zeta = target_c1 * ch.c / (2.0 * ch.kappa * ch.p_out * ch.T * ch.cycles);
  return ch;
}

double mean_n_from_counts(double counts, const DetectionChain& chain) {
  chain.validate();
  if (counts < 0) throw std::invalid_argument("mean_n_from_counts: negative counts");
  return counts / chain.C1();
}

double expected_counts(double mean_n, const DetectionChain& chain) {
  chain.validate();
  return mean_n * chain.C1();
}

ThermalCalibration thermal_from_photodiode(const PhotodiodeReading& r,
                                           const DetectionChain& chain) {
  chain.validate();
  if (r.V_DC <= 0) throw std::invalid_argument("thermal_from_photodiode: V_DC must be > 0");
  if (r.V_AC < 0) throw std::invalid_argument("thermal_from_photodiode: negative V_AC");
  ThermalCalibration out;
  out.S_V = r.counts / r.V_DC;
  out.delta_n = chain.kappa * out.S_V * r.V_AC / chain.C1();
  out.n_th = out.delta_n / chain.kappa;
  out.n_coh = (r.counts - out.S_V * r.V_AC) / chain.C1();
  return out;
}

double strong_pull_ratio(double g, double gamma, double kappa, double detuning_factor) {
  if (g <= 0 || gamma <= 0 || kappa <= 0 || detuning_factor <= 0)
    throw std::invalid_argument("strong_pull_ratio: rates must be > 0");
  double delta = detuning_factor * gamma;
  return g * g / (delta * kappa);
}

}  // namespace ioncav
