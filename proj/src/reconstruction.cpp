#include "ioncav/reconstruction.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ioncav/errors.hpp"
#include "ioncav/optim.hpp"
#include "ioncav/rng.hpp"

namespace ioncav {

double PhotonDistribution::mean() const {
  double m = 0;
  for (int n = 0; n < p.size(); ++n) m += n * p(n);
  return m;
}

double PhotonDistribution::second_moment() const {
  double m = 0;
  for (int n = 0; n < p.size(); ++n) m += double(n) * double(n) * p(n);
  return m;
}

void PhotonDistribution::validate() const {
  double sum = 0;
  for (int n = 0; n < p.size(); ++n) {
    if (p(n) < 0.0 || p(n) > 1.0)
      throw std::runtime_error("PhotonDistribution: element outside [0, 1]");
    sum += p(n);
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw std::runtime_error("PhotonDistribution: probabilities sum to " + std::to_string(sum));
}

PhotonDistribution poisson_distribution(double mean, int n_max) {
  RVec p = RVec::Zero(n_max + 1);
  double term = std::exp(-mean);
  for (int n = 0; n <= n_max; ++n) {
    p(n) = term;
    term *= mean / double(n + 1);
  }
  p /= p.sum();
  return {p};
}

PhotonDistribution thermal_distribution(double n_bar, int n_max) {
  RVec p = RVec::Zero(n_max + 1);
  double r = n_bar / (1.0 + n_bar);
  double term = 1.0 / (1.0 + n_bar);
  for (int n = 0; n <= n_max; ++n) {
    p(n) = term;
    term *= r;
  }
  p /= p.sum();
  return {p};
}

std::optional<double> mandel_q(const PhotonDistribution& d) {
  double m = d.mean();
  if (m <= 0.0) return std::nullopt;
  double var = d.second_moment() - m * m;
  return var / m - 1.0;
}

double sso(const PhotonDistribution& a, const PhotonDistribution& b) {
  if (a.p.size() != b.p.size())
    throw std::invalid_argument("sso: distributions must share a truncation");
  double s = 0;
  for (int n = 0; n < a.p.size(); ++n) s += std::sqrt(std::max(0.0, a.p(n) * b.p(n)));
  return s * s;
}

namespace {

std::vector<double> model_probs(const std::vector<double>& phases, const DriveParams& d,
                                const IonCavityParams& p, const CoherenceModel& coh,
                                Backend backend) {
  IonCavityParams q = p;
  q.eta = d.eta;
  q.delta_n = d.delta_n;
  RamseyTraces tr = fringe_traces(q, coh, backend);
  std::vector<double> out;
  out.reserve(phases.size());
  for (double phi : phases)
    out.push_back(std::clamp(coh.apply(ramsey_probability(tr, phi)), 0.0, 1.0));
  return out;
}

double ll_from_probs(const Fringe& fringe, const std::vector<double>& probs) {
  double ll = 0;
  for (int k = 0; k < fringe.size(); ++k) {
    double pk = std::clamp(probs[k], 1e-12, 1.0 - 1e-12);
    double fk = fringe.p_D[k];
    ll += fk * std::log(pk) + (1.0 - fk) * std::log(1.0 - pk);
  }
  if (!std::isfinite(ll)) throw std::logic_error("log_likelihood: non-finite value");
  return ll;
}

}  // namespace

double log_likelihood(const Fringe& fringe, const DriveParams& d, const IonCavityParams& p,
                      const CoherenceModel& coh, Backend backend) {
  fringe.validate();
  return ll_from_probs(fringe, model_probs(fringe.phases, d, p, coh, backend));
}

PhotonDistribution drive_distribution(const DriveParams& d, const IonCavityParams& p,
                                      Backend backend) {
  IonCavityParams q = p;
  q.eta = d.eta;
  q.delta_n = d.delta_n;
  int adim = (backend == Backend::Full) ? kAtomDim : kElimAtomDim;
  LindbladGenerator gen =
      (backend == Backend::Full) ? build_generator(q) : eliminated_generator(q);
  InteractionState st = interaction_state(gen, adim, 0, 1, q.T);
  RVec pn = st.cavity_diag.cwiseMax(0.0);
  return {pn};
}

namespace {

// The likelihood valley runs along (nearly) constant mean photon number:
// the fringe phase pins the total while the coherent/thermal split is only
// weakly resolved. Searching in (log total, logit share) aligns the valley
// with the coordinate axes, which the simplex handles; in (log eta,
// log delta_n) it runs diagonally and collapses the simplex.
struct DriveCoords {
  double kappa, n_floor, n_ceil, max_n_coh, max_n_th;

  DriveParams unmap(const Eigen::VectorXd& u) const {
    double n_tot = std::clamp(std::exp(u(0)), n_floor, n_ceil);
    double s = 1.0 / (1.0 + std::exp(-std::clamp(u(1), -30.0, 30.0)));
    double n_c = std::min((1.0 - s) * n_tot, max_n_coh);
    double n_t = std::min(s * n_tot, max_n_th);
    return {kappa * std::sqrt(n_c), kappa * n_t};
  }
  Eigen::VectorXd map(const DriveParams& d) const {
    double n_c = (d.eta / kappa) * (d.eta / kappa);
    double n_t = d.delta_n / kappa;
    double n_tot = std::clamp(n_c + n_t, n_floor, n_ceil);
    double s = std::clamp(n_t / n_tot, 1e-9, 1.0 - 1e-9);
    Eigen::VectorXd u(2);
    u(0) = std::log(n_tot);
    u(1) = std::log(s / (1.0 - s));
    return u;
  }
};

}  // namespace

ReconstructionResult reconstruct(const Fringe& fringe, const IonCavityParams& p,
                                 const CoherenceModel& coh, const ReconstructOptions& opts) {
  fringe.validate();
  const double floor = 1e-6 * p.kappa;
  const double n_cap = std::min(opts.max_n_total, opts.max_n_coh + opts.max_n_th);
  DriveCoords coords{p.kappa, 1e-12, n_cap, opts.max_n_coh, opts.max_n_th};

  std::vector<DriveParams> starts;
  if (opts.init) {
    starts.push_back(*opts.init);
  } else {
    // the fitted phase pins the mean photon number up to the 2 pi branch;
    // start the search on every branch compatible with the photon cap
    FringeFit fit = fit_fringe(fringe);
    double per_photon = p.T * dispersive_shift(p.g, p.Delta_PL);
    for (int branch = 0; branch < 3; ++branch) {
      double shift_rad = (fit.phase_shift + 2.0 * branch) * (kTwoPi / 2.0);
      double n_est = shift_rad / per_photon;
      if (n_est < -0.05 || n_est > n_cap) continue;
      n_est = std::clamp(n_est, 0.01, n_cap);
      for (double share : {0.02, 0.5, 0.98})
        starts.push_back(
            {p.kappa * std::sqrt((1.0 - share) * n_est), p.kappa * share * n_est});
    }
    if (starts.empty())
      starts.push_back({p.kappa * std::sqrt(0.5), 0.5 * p.kappa});
  }

  FringeModel model(p, coh, opts.backend);
  int evals = 0;
  auto objective = [&](const Eigen::VectorXd& u) {
    ++evals;
    DriveParams d = coords.unmap(u);
    return -ll_from_probs(fringe, model.probabilities(fringe.phases, d.eta, d.delta_n));
  };

  NelderMeadOptions nm;
  nm.max_iterations = opts.max_iterations;
  nm.f_spread_tol = opts.f_spread_tol;
  nm.x_spread_tol = opts.x_spread_tol;

  NelderMeadResult best;
  int total_iters = 0;
  bool converged = false;
  bool have_best = false;
  double steps[] = {0.4, 0.15, 0.06, 0.025, 0.01, 0.004, 0.0015, 0.0006};
  for (const DriveParams& start : starts) {
    Eigen::VectorXd x0 = coords.map(start);
    NelderMeadResult r;
    bool run_converged = false;
    for (int attempt = 0; attempt < std::max(1, opts.max_restarts); ++attempt) {
      nm.initial_step = steps[std::min<size_t>(attempt, std::size(steps) - 1)];
      NelderMeadResult ri = nelder_mead(objective, x0, nm);
      total_iters += ri.iterations;
      bool improved = attempt == 0 || ri.f < r.f - opts.restart_improvement_tol;
      bool moved = attempt == 0 || (ri.x - r.x).cwiseAbs().maxCoeff() > opts.x_spread_tol;
      if (attempt == 0 || ri.f <= r.f) r = ri;
      x0 = r.x;
      if (ri.converged && !improved && !moved) {
        run_converged = true;
        break;
      }
    }
    if (!have_best || r.f < best.f) {
      best = r;
      converged = run_converged;
      have_best = true;
    }
  }

  if (opts.profile_polish) {
    // maximize the profile likelihood over the share coordinate
    double u1_center = best.x(0);
    auto inner = [&](double u2, double u1_guess) {
      auto f1 = [&](double u1) {
        Eigen::VectorXd u(2);
        u(0) = u1;
        u(1) = u2;
        return objective(u);
      };
      BrentResult b1 = brent_minimize(f1, u1_guess - 0.25, u1_guess + 0.25,
                                      opts.polish_total_xtol);
      return b1;
    };
    auto profile = [&](double u2) { return inner(u2, u1_center).f; };
    double lo = std::max(best.x(1) - opts.polish_share_halfwidth, -14.0);
    double hi = std::min(best.x(1) + opts.polish_share_halfwidth, 14.0);
    BrentResult b2 = brent_minimize(profile, lo, hi, opts.polish_share_xtol);
    BrentResult b1 = inner(b2.x, u1_center);
    if (b1.f < best.f) {
      best.x(0) = b1.x;
      best.x(1) = b2.x;
      best.f = b1.f;
    }
    converged = true;
  }

  DriveParams opt = coords.unmap(best.x);
  // an optimum pinned against the photon cap is a truncation alias, not a
  // trustworthy state
  double n_found = (opt.eta / p.kappa) * (opt.eta / p.kappa) + opt.delta_n / p.kappa;
  if (n_found > 0.999 * n_cap) converged = false;
  ReconstructionResult out;
  out.drive.eta = std::max(opt.eta, floor);
  out.drive.delta_n = std::max(opt.delta_n, floor);
  out.n_coh = (out.drive.eta / p.kappa) * (out.drive.eta / p.kappa);
  out.n_th = out.drive.delta_n / p.kappa;
  out.log_likelihood = -best.f;
  out.iterations = total_iters;
  out.evaluations = evals;
  out.converged = converged;
  out.seed = opts.seed;
  out.distribution = drive_distribution(out.drive, p, opts.backend);
  out.truncation_ok = out.distribution.truncation_tail() < 1e-3;
  return out;
}

UncertaintyRecord monte_carlo_uncertainty(const Fringe& fringe, const ReconstructionResult& base,
                                          const IonCavityParams& p, const CoherenceModel& coh,
                                          std::uint64_t seed, const BootstrapOptions& opts) {
  if (!base.converged)
    throw NonConvergenceError("monte_carlo_uncertainty: base reconstruction not converged");
  CounterRng root(seed);

  std::vector<double> etas, dns;
  etas.reserve(opts.max_samples);
  dns.reserve(opts.max_samples);
  int failures = 0;
  double spot_gap = 0.0;

  double sd_eta_prev = -1.0, sd_dn_prev = -1.0;
  auto sample_std = [](const std::vector<double>& v, double& mean) {
    mean = 0;
    for (double x : v) mean += x;
    mean /= double(v.size());
    if (v.size() < 2) return 0.0;
    double s = 0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / double(v.size() - 1));
  };

  UncertaintyRecord rec;
  int issued = 0;
  bool stop = false;
  while (!stop && issued < opts.max_samples) {
    int batch_n = std::min(opts.batch, opts.max_samples - issued);
    std::vector<Fringe> resampled(batch_n);
    std::vector<std::uint64_t> seeds(batch_n);
    for (int j = 0; j < batch_n; ++j) {
      seeds[j] = root.stream(std::uint64_t(issued + j)).next_u64();
      resampled[j] = sample_projection_noise(fringe, opts.trials, seeds[j]);
    }
    std::vector<int> status(batch_n, 0);  // 0 fail, 1 ok
    std::vector<double> b_eta(batch_n, 0.0), b_dn(batch_n, 0.0), b_gap(batch_n, 0.0);

    std::atomic<int> next{0};
    auto worker = [&]() {
      for (;;) {
        int j = next.fetch_add(1);
        if (j >= batch_n) return;
        try {
          ReconstructOptions ro;
          ro.backend = opts.backend;
          ro.init = base.drive;  // warm start at the base optimum
          ro.seed = seeds[j];
          // inner loop: local refinement around the base optimum, stopping
          // well below the projection-noise scale
          ro.f_spread_tol = 1e-7;
          ro.x_spread_tol = 1e-4;
          ro.max_restarts = 4;
          ro.restart_improvement_tol = 1e-8;
          ro.polish_share_halfwidth = 1.0;
          ro.polish_share_xtol = 3e-3;
          ro.polish_total_xtol = 1e-6;
          ReconstructionResult ri = reconstruct(resampled[j], p, coh, ro);
          if (!ri.converged) continue;
          b_eta[j] = ri.drive.eta;
          b_dn[j] = ri.drive.delta_n;
          status[j] = 1;
          if (opts.spot_check_stride > 0 && (issued + j) % opts.spot_check_stride == 0 &&
              opts.backend != Backend::Full) {
            double ll_fast = log_likelihood(resampled[j], ri.drive, p, coh, opts.backend);
            double ll_full = log_likelihood(resampled[j], ri.drive, p, coh, Backend::Full);
            b_gap[j] = std::abs(ll_fast - ll_full);
          }
        } catch (const std::exception&) {
          status[j] = 0;
        }
      }
    };
    int nthreads = std::max(1, opts.threads);
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    for (int j = 0; j < batch_n; ++j) {  // aggregate in index order
      if (status[j]) {
        etas.push_back(b_eta[j]);
        dns.push_back(b_dn[j]);
        spot_gap = std::max(spot_gap, b_gap[j]);
      } else {
        ++failures;
      }
    }
    issued += batch_n;

    if (failures > opts.max_failure_fraction * issued && issued >= opts.batch)
      throw NonConvergenceError("monte_carlo_uncertainty: too many inner failures (" +
                                std::to_string(failures) + "/" + std::to_string(issued) + ")");

    if (int(etas.size()) >= opts.min_samples) {
      double me, md;
      double se = sample_std(etas, me);
      double sd = sample_std(dns, md);
      if (sd_eta_prev >= 0.0) {
        double de = (sd_eta_prev > 0) ? std::abs(se - sd_eta_prev) / sd_eta_prev
                                      : std::abs(se - sd_eta_prev);
        double dd = (sd_dn_prev > 0) ? std::abs(sd - sd_dn_prev) / sd_dn_prev
                                     : std::abs(sd - sd_dn_prev);
        if (de < opts.rel_change_tol && dd < opts.rel_change_tol) stop = true;
      }
      sd_eta_prev = se;
      sd_dn_prev = sd;
    }
  }

  double mean_eta, mean_dn;
  rec.delta_eta = sample_std(etas, mean_eta);
  rec.delta_delta_n = sample_std(dns, mean_dn);
  rec.eta_mean = mean_eta;
  rec.delta_n_mean = mean_dn;
  rec.samples = int(etas.size());
  rec.failures = failures;
  rec.spot_check_max_ll_gap = spot_gap;

  const double floor = 1e-6 * p.kappa;
  DriveParams up{base.drive.eta + rec.delta_eta, base.drive.delta_n + rec.delta_delta_n};
  DriveParams lo{std::max(floor, base.drive.eta - rec.delta_eta),
                 std::max(floor, base.drive.delta_n - rec.delta_delta_n)};
  rec.upper = drive_distribution(up, p, opts.backend);
  rec.lower = drive_distribution(lo, p, opts.backend);
  rec.mean_n_upper = rec.upper.mean();
  rec.mean_n_lower = rec.lower.mean();
  rec.q_upper = mandel_q(rec.upper);
  rec.q_lower = mandel_q(rec.lower);
  return rec;
}

PhaseResolutionResult phase_resolution(const IonCavityParams& p, const CoherenceModel& coh,
                                       int repetitions, std::uint64_t seed, Backend backend,
                                       int threads) {
  if (repetitions < 1000)
    throw std::invalid_argument("phase_resolution: need at least 1000 repetitions");
  IonCavityParams q = p;
  set_drive_target(q, 1.0, 0.0, MeanNBasis::WindowAverage, kDefaultBuildupC);
  Fringe ref = simulate_fringe(q, phase_grid(51), coh, backend);

  CounterRng root(seed);
  std::vector<double> phases(repetitions, 0.0);
  std::vector<int> ok(repetitions, 0);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= repetitions) return;
      std::uint64_t si = root.stream(std::uint64_t(i)).next_u64();
      try {
        Fringe noisy = sample_projection_noise(ref, 250, si);
        FringeFit fit = fit_fringe(noisy);
        phases[i] = fit.phase_shift;
        ok[i] = 1;
      } catch (const std::exception&) {
        ok[i] = 0;
      }
    }
  };
  int nthreads = std::max(1, threads);
  std::vector<std::thread> pool;
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  double mean = 0;
  int n = 0;
  for (int i = 0; i < repetitions; ++i)
    if (ok[i]) {
      mean += phases[i];
      ++n;
    }
  if (n < 2) throw NonConvergenceError("phase_resolution: all fits failed");
  mean /= n;
  double var = 0;
  for (int i = 0; i < repetitions; ++i)
    if (ok[i]) var += (phases[i] - mean) * (phases[i] - mean);
  var /= (n - 1);

  PhaseResolutionResult out;
  out.sigma_phi = std::sqrt(var);
  out.delta_phi = 2.0 * out.sigma_phi;
  out.delta_nbar = out.delta_phi * (kTwoPi / 2.0) / (p.T * dispersive_shift(p.g, p.Delta_PL));
  out.repetitions = n;
  out.failures = repetitions - n;
  return out;
}

std::string to_json(const ReconstructionResult& r, std::uint64_t config_hash) {
  nlohmann::ordered_json j;
  j["eta_rad_s"] = r.drive.eta;
  j["delta_n_rad_s"] = r.drive.delta_n;
  j["n_coh"] = r.n_coh;
  j["n_th"] = r.n_th;
  j["p_n"] = std::vector<double>(r.distribution.p.data(),
                                 r.distribution.p.data() + r.distribution.p.size());
  j["mean_n"] = r.mean_n();
  auto q = r.q();
  if (q)
    j["mandel_q"] = *q;
  else
    j["mandel_q"] = nullptr;
  j["log_likelihood"] = r.log_likelihood;
  j["seed"] = r.seed;
  j["iterations"] = r.iterations;
  j["evaluations"] = r.evaluations;
  j["converged"] = r.converged;
  j["truncation_ok"] = r.truncation_ok;
  if (config_hash) {
    std::ostringstream h;
    h << std::hex << config_hash;
    j["config_hash"] = h.str();
  }
  if (r.uncertainty) {
    const auto& u = *r.uncertainty;
    nlohmann::ordered_json ju;
    ju["delta_eta_rad_s"] = u.delta_eta;
    ju["delta_delta_n_rad_s"] = u.delta_delta_n;
    ju["samples"] = u.samples;
    ju["failures"] = u.failures;
    ju["eta_mean_rad_s"] = u.eta_mean;
    ju["delta_n_mean_rad_s"] = u.delta_n_mean;
    ju["mean_n_upper"] = u.mean_n_upper;
    ju["mean_n_lower"] = u.mean_n_lower;
    if (u.q_upper) ju["q_upper"] = *u.q_upper;
    if (u.q_lower) ju["q_lower"] = *u.q_lower;
    ju["p_n_upper"] = std::vector<double>(u.upper.p.data(), u.upper.p.data() + u.upper.p.size());
    ju["p_n_lower"] = std::vector<double>(u.lower.p.data(), u.lower.p.data() + u.lower.p.size());
    ju["spot_check_max_ll_gap"] = u.spot_check_max_ll_gap;
    j["uncertainty"] = ju;
  }
  return j.dump(2) + "\n";
}

}  // namespace ioncav
