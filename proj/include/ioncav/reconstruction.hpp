#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ioncav/ramsey.hpp"

namespace ioncav {

struct DriveParams {
  double eta = 0.0;      // rad/s
  double delta_n = 0.0;  // rad/s
};

/// Diagonal of the reduced cavity state with its first two moments.
struct PhotonDistribution {
  RVec p;

  double mean() const;
  double second_moment() const;
  double truncation_tail() const { return p.size() ? p(p.size() - 1) : 0.0; }
  void validate() const;  // probabilities in [0,1], sum within 1e-6 of 1
};

PhotonDistribution poisson_distribution(double mean, int n_max);
PhotonDistribution thermal_distribution(double n_bar, int n_max);

/// (variance - mean) / mean; undefined for an empty cavity.
std::optional<double> mandel_q(const PhotonDistribution& d);

/// Squared statistical overlap (sum_n sqrt(p q))^2.
double sso(const PhotonDistribution& a, const PhotonDistribution& b);

struct UncertaintyRecord {
  double delta_eta = 0.0;
  double delta_delta_n = 0.0;
  int samples = 0;
  int failures = 0;
  double eta_mean = 0.0;
  double delta_n_mean = 0.0;
  PhotonDistribution upper;  // at (eta + d_eta, dn + d_dn)
  PhotonDistribution lower;  // at (eta - d_eta, dn - d_dn), floored
  double mean_n_upper = 0.0;
  double mean_n_lower = 0.0;
  std::optional<double> q_upper;
  std::optional<double> q_lower;
  double spot_check_max_ll_gap = 0.0;  // full-model audit of the fast backend
};

struct ReconstructionResult {
  DriveParams drive;
  PhotonDistribution distribution;
  double n_coh = 0.0;  // (eta/kappa)^2
  double n_th = 0.0;   // delta_n/kappa
  double log_likelihood = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  bool truncation_ok = true;  // p(n_max) < 1e-3
  std::optional<UncertaintyRecord> uncertainty;

  double mean_n() const { return distribution.mean(); }
  std::optional<double> q() const { return mandel_q(distribution); }
};

std::string to_json(const ReconstructionResult& r, std::uint64_t config_hash = 0);

/// Binomial log-likelihood of a measured fringe under the model's
/// excitation probabilities at drive d; the additive constant is dropped and
/// probabilities are clamped to [1e-12, 1-1e-12] before the logs.
double log_likelihood(const Fringe& fringe, const DriveParams& d, const IonCavityParams& p,
                      const CoherenceModel& coh, Backend backend = Backend::Eliminated);

struct ReconstructOptions {
  Backend backend = Backend::Eliminated;
  int max_iterations = 200;  // per simplex pass
  std::uint64_t seed = 0;
  std::optional<DriveParams> init;
  // The likelihood ridge along constant mean photon number is nearly flat;
  // the simplex is restarted at the incumbent until it stops improving, and
  // the spread tolerances are tighter than usual so the argmax is resolved
  // well below the bootstrap noise scale.
  int max_restarts = 8;
  double f_spread_tol = 1e-9;
  double x_spread_tol = 1e-5;
  double restart_improvement_tol = 1e-10;
  // Profile-likelihood polish: the simplex localizes the optimum but stalls
  // on the nearly flat constant-mean valley, so the share coordinate is
  // refined by a nested 1-D search (total photon number re-optimized at
  // every step).
  bool profile_polish = true;
  double polish_share_halfwidth = 14.0;  // logit units around the incumbent
  double polish_share_xtol = 1e-3;
  double polish_total_xtol = 1e-7;
  // search box: the n_max truncation is only trustworthy while the
  // distribution tail stays negligible, and large drives alias the fringe
  // phase (shift mod 2 pi) through the truncated mean
  double max_n_coh = 4.0;
  double max_n_th = 3.0;
  double max_n_total = 4.0;
};

/// Maximum-likelihood estimate of (eta, delta_n) by Nelder-Mead over
/// log-transformed coordinates (floor 1e-6 kappa); the distribution is the
/// cavity diagonal of the post-interaction state at the optimum.
ReconstructionResult reconstruct(const Fringe& fringe, const IonCavityParams& p,
                                 const CoherenceModel& coh,
                                 const ReconstructOptions& opts = ReconstructOptions{});

struct BootstrapOptions {
  int trials = 250;          // binomial resampling depth
  int batch = 25;            // convergence checked every `batch` samples
  int min_samples = 100;
  int max_samples = 1000;
  double rel_change_tol = 0.05;
  double max_failure_fraction = 0.2;
  int threads = 2;
  int spot_check_stride = 50;  // full-model likelihood audit cadence
  Backend backend = Backend::Eliminated;
};

/// Parametric bootstrap: resample the fringe with binomial projection noise,
/// re-reconstruct, and iterate until the standard deviations of eta and
/// delta_n are stable to 5%. Deterministic for a given seed regardless of
/// worker count.
UncertaintyRecord monte_carlo_uncertainty(const Fringe& fringe,
                                          const ReconstructionResult& base,
                                          const IonCavityParams& p, const CoherenceModel& coh,
                                          std::uint64_t seed,
                                          const BootstrapOptions& opts = BootstrapOptions{});

struct PhaseResolutionResult {
  double delta_phi = 0.0;   // 2 sigma of fitted phases, units of pi
  double delta_nbar = 0.0;  // delta_phi / (T g^2/Delta)
  double sigma_phi = 0.0;
  int repetitions = 0;
  int failures = 0;
};

/// Projection-noise-limited phase resolution at <n> = 1: repeatedly add
/// binomial noise to a reference fringe, refit, and report 2 sigma of the
/// fitted phase.
PhaseResolutionResult phase_resolution(const IonCavityParams& p, const CoherenceModel& coh,
                                       int repetitions, std::uint64_t seed,
                                       Backend backend = Backend::Full, int threads = 2);

/// Post-interaction cavity distribution for a given drive.
PhotonDistribution drive_distribution(const DriveParams& d, const IonCavityParams& p,
                                      Backend backend = Backend::Eliminated);

}  // namespace ioncav
