#pragma once

#include <vector>

#include "ioncav/core.hpp"

namespace ioncav {

/// Dissipative channel: jump operator L with rate G contributes
/// (G/2)(2 L rho L+ - rho L+L - L+L rho) to drho/dt. G is a population
/// (energy) rate: a two-level atom with channel (sigma-, G) decays as
/// exp(-G t).
struct CollapseChannel {
  Operator op;
  double rate = 0.0;
};

/// Right-hand side of the master equation: unitary part, collapse channels
/// and the incoherent-drive term dn([[a,rho],a+] + [[a+,rho],a]).
class LindbladGenerator {
 public:
  LindbladGenerator(Operator hamiltonian, std::vector<CollapseChannel> channels,
                    double incoherent_rate = 0.0, Operator incoherent_mode = Operator{});

  const Operator& hamiltonian() const { return h_; }
  const std::vector<CollapseChannel>& channels() const { return channels_; }
  double incoherent_rate() const { return delta_n_; }
  const Operator& incoherent_mode() const { return mode_; }
  const HilbertSpace& space() const { return h_.space; }

  /// Largest |H_ii| in rad/s; sets the stiffness of the unitary part.
  double max_diag_frequency() const { return f_max_; }
  /// Fixed-step default: min(0.02 / f_max, 1 ns).
  double default_step() const;
  double min_channel_rate() const;

  Mat rhs(const Mat& rho) const;

 private:
  struct Triplets {
    std::vector<int> row, col;
    std::vector<Cx> val;
    void add(int r, int c, Cx v);
    static Triplets from(const Mat& m, double drop = 0.0);
    Triplets adjoint() const;
  };

  // acc += w * T * rho  /  acc += w * rho * T, triplet-sparse forms.
  static void add_left(Mat& acc, Cx w, const Triplets& t, const Mat& rho);
  static void add_right(Mat& acc, Cx w, const Triplets& t, const Mat& rho);
  static Mat sandwich(const Triplets& l, const Mat& rho, const Triplets& r, int n);

  Operator h_;
  std::vector<CollapseChannel> channels_;
  double delta_n_;
  Operator mode_;
  double f_max_ = 0.0;

  Triplets h_t_;
  struct ChannelT {
    Triplets l, ldag, ldagl;  // L, L+, L+L
    double rate;
  };
  std::vector<ChannelT> ch_t_;
  Triplets a_t_, adag_t_, nsum_t_;  // a, a+, a+a + a a+
};

Mat lindblad_rhs(const LindbladGenerator& gen, const DensityMatrix& rho);

/// Classical fixed-step RK4. Refuses steps that under-resolve the fastest
/// Hamiltonian scale (step <= 0.05 / f_max required) and validates the
/// output density matrix.
DensityMatrix evolve(const LindbladGenerator& gen, const DensityMatrix& rho0,
                     double duration, double step);
DensityMatrix evolve(const LindbladGenerator& gen, const DensityMatrix& rho0,
                     double duration);  // default step

struct SteadyStateResult {
  DensityMatrix rho;
  bool converged = false;
  double time_reached = 0.0;
  double residual = 0.0;
};

/// Long-time limit by time evolution, probed on the slowest dissipative
/// timescale. Starts from the maximally mixed state unless given one.
/// Non-convergence within the horizon is flagged, not thrown.
SteadyStateResult steady_state(const LindbladGenerator& gen, double horizon,
                               double settle_tol, const DensityMatrix* start = nullptr);

}  // namespace ioncav
