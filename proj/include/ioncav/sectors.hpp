#pragma once

#include "ioncav/core.hpp"
#include "ioncav/lindblad.hpp"

namespace ioncav {

// The Ramsey observable needs only three quantities at the end of the
// interaction window: the S and D populations and the S-D coherence trace.
// Because the Hamiltonian never couples S to the excited manifold, the
// master equation splits into small closed sectors of atom-index blocks;
// each sector is propagated exactly by exponentiating its superoperator.
// This is algebraically the same master equation the RK4 engine integrates
// (cross-checked in the tests) but costs milliseconds instead of minutes on
// the stiff full model.

struct RamseyTraces {
  double t_SS = 0.0;  // Tr rho_SS(T)
  double t_DD = 0.0;  // Tr rho_DD(T)
  Cx z{0.0, 0.0};     // Tr rho_SD(T)
};

/// Sector superoperators for the Ramsey observable; the post-pulse initial
/// state is rho_SS = rho_DD = 1/2 |0><0|, rho_SD = i/2 |0><0|.
struct SectorPropagator {
  Mat coh;       // S-row coherence sector (blocks (S, X))
  Mat exc;       // excited population sector plus S-feed accumulator row
  int dc = 0;
  int off_sd = 0;
  int off_dd = 0;

  RamseyTraces propagate(double T) const;
};

SectorPropagator build_sector_propagator(const LindbladGenerator& gen, int atom_dim,
                                         int level_S, int level_D);

/// Propagate the post-pulse state (rho_SS = rho_DD = 1/2 |0><0|,
/// rho_SD = i/2 |0><0|) for time T.
RamseyTraces ramsey_traces(const LindbladGenerator& gen, int atom_dim, int level_S,
                           int level_D, double T);

/// Ramsey excitation before any detection-contrast mapping:
/// P(phi) = (t_SS + t_DD)/2 + Im(e^{i pi phi} z), phi in units of pi.
double ramsey_probability(const RamseyTraces& tr, double phi_pi);

struct InteractionState {
  RVec cavity_diag;  // p(n), reduced cavity populations at time T
  RVec atom_pop;     // per-level populations at time T
};

/// Populations of the post-interaction state (same initial condition as
/// ramsey_traces); coherence blocks that cannot influence populations are
/// dropped.
InteractionState interaction_state(const LindbladGenerator& gen, int atom_dim,
                                   int level_S, int level_D, double T);

}  // namespace ioncav
