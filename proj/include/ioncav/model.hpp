#pragma once

#include "ioncav/core.hpp"
#include "ioncav/lindblad.hpp"

namespace ioncav {

enum class Transition { DP, DpPp };

/// All rates and detunings in angular frequency (rad/s), times in seconds.
/// Configuration files speak MHz and microseconds; conversion happens at
/// ingestion, never here.
struct IonCavityParams {
  double g = 0.0;          // ion-cavity coupling
  double kappa = 0.0;      // cavity field decay rate
  double Delta_PL = 0.0;   // drive-to-atom detuning
  double Delta_CL = 0.0;   // drive-to-cavity detuning
  double Delta_DR = 0.0;   // Ramsey-laser detuning
  double Delta_SSp = 0.0;  // dark-state offset
  double eta = 0.0;        // coherent drive amplitude
  double delta_n = 0.0;    // incoherent drive rate
  double Gamma_PS = 0.0;
  double Gamma_PD = 0.0;
  double Gamma_PD32 = 0.0;
  Transition transition = Transition::DP;
  int n_max = 9;
  double T = 50e-6;  // interaction time

  void validate() const;
  HilbertSpace space() const { return HilbertSpace({kAtomDim, n_max + 1}); }
  int cavity_dim() const { return n_max + 1; }
};

/// Default parameter set for either qubit transition. The second transition
/// carries g' = 0.82 g and its own branching table.
IonCavityParams default_params(Transition t = Transition::DP);

/// Effective decay rates out of the excited level after summing Zeeman
/// branches.
struct BranchingTable {
  double to_S = 0.0;
  double to_Sprime = 0.0;
  double to_D = 0.0;
  double total() const { return to_S + to_Sprime + to_D; }
};

BranchingTable branching(const IonCavityParams& p);

/// H/hbar = D_DR s_D + (D_PL + D_CL + D_DR) s_P + D_SS' s_S' + D_CL a+a
///        + g (s_PD a + s_DP a+) + eta (a + a+)
Operator build_hamiltonian(const IonCavityParams& p);

/// Three atomic decay channels plus the cavity channel. kappa is a field
/// (amplitude) rate, so the cavity jump 'a' carries population rate 2*kappa;
/// with it the incoherent term gives the thermal occupation delta_n / kappa.
std::vector<CollapseChannel> build_channels(const IonCavityParams& p);

LindbladGenerator build_generator(const IonCavityParams& p);

/// g^2 / Delta.
double dispersive_shift(double g, double Delta);

/// Idealized linear prediction T (g^2/Delta) <n>; the full simulation also
/// carries the field build-up transient.
double expected_phase_shift(double n_mean, const IonCavityParams& p);

/// Photon-number pull of the qubit line including the decay-broadened
/// denominator: g^2 Delta / (Delta^2 + Gamma_tot^2/4).
double chi_shift(const IonCavityParams& p);

/// Total scattering rate out of the lower qubit level per intracavity
/// photon: Gamma_tot g^2 / (Delta^2 + Gamma_tot^2/4).
double scatter_rate_per_photon(const IonCavityParams& p);

/// Analytic coherent-field build-up factor: the window average of
/// |1 - e^{-kappa t}|^2 over [0, T].
double buildup_factor(double kappa, double T);

/// Calibrated build-up correction for the default parameters (includes the
/// ion pull on the cavity, hence slightly below the bare analytic factor).
inline constexpr double kDefaultBuildupC = 0.922;

// Fast backend: excited level adiabatically eliminated. Atom factor shrinks
// to {S, D, sink}; the dispersive shift enters the Hamiltonian directly and
// scattering becomes photon-assisted jumps out of D.
inline constexpr int kElimAtomDim = 3;
inline constexpr int kElimSink = 2;

LindbladGenerator eliminated_generator(const IonCavityParams& p);

/// Reference variant with the cavity decoupled and a classical field of
/// Rabi amplitude `rabi` driving the D-P transition. Lives on the bare
/// 4-level atom (trivial one-dimensional cavity factor).
LindbladGenerator ion_drive_generator(const IonCavityParams& p, double rabi);

}  // namespace ioncav
