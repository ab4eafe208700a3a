#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ioncav/model.hpp"
#include "ioncav/sectors.hpp"

namespace ioncav {

enum class Backend { Full, Eliminated };

/// Instantaneous ideal rotation on the S-D subspace. The pulse unitary is
/// exp(-i theta/2 (e^{-i phase}|D><S| + e^{+i phase}|S><D|)).
struct PulseSpec {
  double rotation_angle = kTwoPi / 4.0;  // pi/2
  double phase = 0.0;
  enum class Impl { Instantaneous } implementation = Impl::Instantaneous;
};

Operator ramsey_pulse(const HilbertSpace& space, const PulseSpec& pulse);

/// Measured or simulated excitation vs Ramsey phase. Phases are in units of
/// pi; trials is the number of repetitions per point (0 marks an exact,
/// noise-free synthetic fringe).
struct Fringe {
  std::vector<double> phases;
  std::vector<double> p_D;
  int trials = 0;

  int size() const { return int(phases.size()); }
  void validate() const;
};

struct FringeFit {
  double amplitude = 0.0;
  double offset = 0.0;
  double phase_shift = 0.0;  // units of pi
  double contrast = 0.0;
  double sigma_amplitude = 0.0;
  double sigma_offset = 0.0;
  double sigma_phase = 0.0;
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();  // (A, B, phi0)
  bool offset_pinned = false;
  int iterations = 0;
};

/// Finite qubit coherence and detection ceiling. The affine map sends the
/// ideal excitation p to 2*B0*(1/2 + (p - 1/2)*c_v); c_v is fixed by the
/// vacuum-fringe contrast. The dephasing-channel mode instead adds an
/// explicit sigma_D dephasing channel calibrated to the same vacuum contrast
/// and rescales by 2*B0 only.
struct CoherenceModel {
  double B0 = 0.4915;
  double contrast_at_vacuum = 0.99;
  enum class Mode { AffineMap, DephasingChannel } mode = Mode::AffineMap;

  double apply(double p_ideal) const {
    double cv = (mode == Mode::AffineMap) ? contrast_at_vacuum : 1.0;
    return 2.0 * B0 * (0.5 + (p_ideal - 0.5) * cv);
  }
  double dephasing_rate(double T) const;  // rate matching the vacuum contrast
};

/// Basis in which a drive target <n> is specified: the window-averaged
/// photon number seen by the ion (calibration convention; the steady state
/// is higher by the build-up factor) or the bare steady-state occupation.
enum class MeanNBasis { WindowAverage, SteadyState };

/// Set (eta, delta_n) so the total mean photon number reaches `mean_n`
/// with a fraction `thermal_fraction` of it thermal.
void set_drive_target(IonCavityParams& p, double mean_n, double thermal_fraction,
                      MeanNBasis basis, double buildup_c);

/// End-of-sequence probabilities of finding the ion in D (dark state counts
/// as not-D), including the coherence map. One evolution serves all phases.
double simulate_point(const IonCavityParams& p, double phi_pi, const CoherenceModel& coh,
                      Backend backend = Backend::Full);
Fringe simulate_fringe(const IonCavityParams& p, const std::vector<double>& phases_pi,
                       const CoherenceModel& coh, Backend backend = Backend::Full);

/// Same observable through the time-stepped engine with explicit pulse
/// unitaries; slow, used to cross-check the sector propagator.
double simulate_point_stepped(const IonCavityParams& p, double phi_pi,
                              const CoherenceModel& coh, double step);

/// Reference variant: cavity decoupled, classical drive on the upper
/// transition at Rabi amplitude `rabi`.
Fringe simulate_fringe_ion_drive(const IonCavityParams& p, double rabi,
                                 const std::vector<double>& phases_pi,
                                 const CoherenceModel& coh);

RamseyTraces fringe_traces(const IonCavityParams& p, const CoherenceModel& coh,
                           Backend backend);

/// Repeated fringe evaluations at varying drive: the sector superoperators
/// are linear in eta and delta_n, so they are assembled once and recombined
/// per evaluation, leaving two matrix exponentials per call.
class FringeModel {
 public:
  FringeModel(const IonCavityParams& base, const CoherenceModel& coh, Backend backend);

  RamseyTraces traces(double eta, double delta_n) const;
  std::vector<double> probabilities(const std::vector<double>& phases_pi, double eta,
                                    double delta_n) const;

 private:
  SectorPropagator base_, d_eta_, d_dn_;
  CoherenceModel coh_;
  double T_;
};

/// Least-squares fit of E(phi) = B + A cos(pi (phi - phi0)); Gauss-Newton
/// with a numerically differenced Jacobian, seeded by a discrete-Fourier
/// estimate. With an <n> hint the offset is pinned to the recalculated value
/// and the phase branch nearest the hint's prediction is reported.
FringeFit fit_fringe(const Fringe& fringe);
FringeFit fit_fringe(const Fringe& fringe, double n_mean_hint, const IonCavityParams& p,
                     const CoherenceModel& coh);

/// Off-resonant-scattering offset recalculation,
/// B = B0 exp(-Gamma_S' p_P <n> T) with p_P = 2 g^2 <n> / (Gamma_D^2 + Delta^2).
double recalculated_offset(double n_mean, const IonCavityParams& p, const CoherenceModel& coh);

/// Replace each point by m_k / M with m_k ~ Binomial(M, f_k); deterministic
/// per (seed, point index).
Fringe sample_projection_noise(const Fringe& fringe, int trials, std::uint64_t seed);

std::vector<double> phase_grid(int n_points);  // [0, 2) in units of pi

void write_fringe_csv(std::ostream& os, const Fringe& fringe,
                      const std::vector<double>* exact = nullptr);
Fringe read_fringe_csv(std::istream& is);
void write_fringe_csv_file(const std::string& path, const Fringe& fringe,
                           const std::vector<double>* exact = nullptr);
Fringe read_fringe_csv_file(const std::string& path);

}  // namespace ioncav
