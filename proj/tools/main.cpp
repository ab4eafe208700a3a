#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ioncav/calibration.hpp"
#include "ioncav/config.hpp"
#include "ioncav/errors.hpp"
#include "ioncav/reconstruction.hpp"

using namespace ioncav;

namespace {

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << text;
}

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  std::string out;
};

ExperimentConfig load_with_overrides(const CommonOpts& o, bool config_required = true) {
  ExperimentConfig cfg;
  if (!o.config_path.empty())
    cfg = load_config(o.config_path);
  else if (config_required)
    throw ConfigError("missing --config");
  else {
    cfg.params = default_params();
    cfg.phases = phase_grid(51);
  }
  if (o.seed) cfg.seed = *o.seed;
  if (o.backend) {
    if (*o.backend == "full")
      cfg.backend = Backend::Full;
    else if (*o.backend == "eliminated")
      cfg.backend = Backend::Eliminated;
    else
      throw ConfigError("--backend must be 'full' or 'eliminated'");
  }
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "experiment config (JSON)");
  auto* seed = cmd->add_option("--seed", "override config seed");
  seed->each([&o](const std::string& s) { o.seed = std::stoull(s); });
  auto* be = cmd->add_option("--backend", "full | eliminated");
  be->each([&o](const std::string& s) { o.backend = s; });
  cmd->add_option("--out", o.out, "output path (default stdout)");
}

int cmd_simulate(const CommonOpts& o) {
  ExperimentConfig cfg = load_with_overrides(o);
  Fringe exact = simulate_fringe(cfg.params, cfg.phases, cfg.coherence, cfg.backend);
  std::string out_path = o.out.empty() ? "fringe.csv" : o.out;
  if (cfg.trials > 0) {
    Fringe noisy = sample_projection_noise(exact, cfg.trials, cfg.seed);
    write_fringe_csv_file(out_path, noisy, &exact.p_D);
  } else {
    write_fringe_csv_file(out_path, exact);
  }
  std::ofstream meta(out_path + ".meta.json");
  if (!meta) throw IoError("cannot open for writing: " + out_path + ".meta.json");
  meta << cfg.resolved_json();
  return 0;
}

int cmd_fit(const CommonOpts& o, const std::string& in, std::optional<double> nmean_hint) {
  ExperimentConfig cfg = load_with_overrides(o, false);
  Fringe f = read_fringe_csv_file(in);
  FringeFit fit = nmean_hint ? fit_fringe(f, *nmean_hint, cfg.params, cfg.coherence)
                             : fit_fringe(f);
  nlohmann::ordered_json j;
  j["amplitude"] = fit.amplitude;
  j["offset"] = fit.offset;
  j["phase_shift_pi"] = fit.phase_shift;
  j["contrast"] = fit.contrast;
  j["sigma_amplitude"] = fit.sigma_amplitude;
  j["sigma_offset"] = fit.sigma_offset;
  j["sigma_phase_pi"] = fit.sigma_phase;
  j["offset_pinned"] = fit.offset_pinned;
  j["iterations"] = fit.iterations;
  std::ostringstream h;
  h << std::hex << cfg.hash;
  j["config_hash"] = h.str();
  write_text(o.out, j.dump(2) + "\n");
  return 0;
}

int cmd_reconstruct(const CommonOpts& o, const std::string& in, bool bootstrap) {
  ExperimentConfig cfg = load_with_overrides(o, false);
  Fringe f = read_fringe_csv_file(in);
  ReconstructOptions ro;
  ro.backend = o.backend ? cfg.backend : Backend::Eliminated;
  ro.seed = cfg.seed;
  ReconstructionResult r = reconstruct(f, cfg.params, cfg.coherence, ro);
  if (bootstrap) {
    BootstrapOptions bo;
    bo.backend = ro.backend;
    r.uncertainty = monte_carlo_uncertainty(f, r, cfg.params, cfg.coherence, cfg.seed, bo);
  }
  write_text(o.out, to_json(r, cfg.hash));
  if (!r.converged) throw NonConvergenceError("reconstruction did not converge");
  return 0;
}

int cmd_calibrate(const CommonOpts& o) {
  ExperimentConfig cfg = load_with_overrides(o);
  if (!cfg.detection) throw ConfigError("calibrate: config needs a 'detection' section");
  const DetectionChain& ch = *cfg.detection;
  nlohmann::ordered_json j;
  j["C0"] = ch.C0();
  j["C1"] = ch.C1();
  j["count_rate_at_unit_n_hz"] = ch.count_rate_at_unit_n();
  if (cfg.photodiode) {
    ThermalCalibration tc = thermal_from_photodiode(*cfg.photodiode, ch);
    j["n_coh"] = tc.n_coh;
    j["n_th"] = tc.n_th;
    j["delta_n_rad_s"] = tc.delta_n;
    j["s_v_counts_per_volt"] = tc.S_V;
  } else if (cfg.counts) {
    j["mean_n"] = mean_n_from_counts(*cfg.counts, ch);
  } else {
    throw ConfigError("calibrate: detection needs 'counts' or photodiode voltages");
  }
  std::ostringstream h;
  h << std::hex << cfg.hash;
  j["config_hash"] = h.str();
  write_text(o.out, j.dump(2) + "\n");
  return 0;
}

int cmd_sweep(const CommonOpts& o) {
  ExperimentConfig cfg = load_with_overrides(o);
  if (cfg.sweep_values.size() < 2) throw ConfigError("sweep: need at least 2 sweep values");
  std::ostringstream os;
  os << std::setprecision(17);
  os << "# mean photon number sweep: fitted Ramsey fringe parameters per transition\n";
  os << "# columns: transition, mean_n, phase_shift_pi, contrast, amplitude, offset\n";
  os << "transition,mean_n,phase_shift_pi,contrast,amplitude,offset\n";
  double c = cfg.detection ? cfg.detection->c : kDefaultBuildupC;
  for (Transition tr : cfg.sweep_transitions) {
    IonCavityParams base = default_params(tr);
    base.n_max = cfg.params.n_max;
    base.T = cfg.params.T;
    for (double n : cfg.sweep_values) {
      IonCavityParams p = base;
      set_drive_target(p, n, 0.0, MeanNBasis::WindowAverage, c);
      Fringe f = simulate_fringe(p, cfg.phases, cfg.coherence, cfg.backend);
      FringeFit fit = fit_fringe(f);
      double hint = expected_phase_shift(n, p) / (kTwoPi / 2.0);
      double shift = fit.phase_shift + 2.0 * std::round((hint - fit.phase_shift) / 2.0);
      os << (tr == Transition::DP ? "DP" : "DpPp") << "," << n << "," << shift << ","
         << fit.contrast << "," << fit.amplitude << "," << fit.offset << "\n";
    }
  }
  write_text(o.out.empty() ? "sweep.csv" : o.out, os.str());
  return 0;
}

int cmd_phase_resolution(const CommonOpts& o, int repetitions) {
  ExperimentConfig cfg = load_with_overrides(o, false);
  PhaseResolutionResult r =
      phase_resolution(cfg.params, cfg.coherence, repetitions, cfg.seed, cfg.backend);
  nlohmann::ordered_json j;
  j["delta_phi_pi"] = r.delta_phi;
  j["sigma_phi_pi"] = r.sigma_phi;
  j["delta_nbar"] = r.delta_nbar;
  j["repetitions"] = r.repetitions;
  j["failures"] = r.failures;
  std::ostringstream h;
  h << std::hex << cfg.hash;
  j["config_hash"] = h.str();
  write_text(o.out, j.dump(2) + "\n");
  return 0;
}

int cmd_strong_pull(const CommonOpts& o, double g_mhz, double gamma_mhz, double kappa_khz,
                    double factor) {
  nlohmann::ordered_json j;
  if (g_mhz > 0) {
    j["ratio"] = strong_pull_ratio(kTwoPi * g_mhz * 1e6, kTwoPi * gamma_mhz * 1e6,
                                   kTwoPi * kappa_khz * 1e3, factor);
  } else {
    j["Ca40"] = strong_pull_ratio(kTwoPi * 1.53e6, kTwoPi * 11.5e6, kTwoPi * 1.9e3, factor);
    j["Cs133"] = strong_pull_ratio(kTwoPi * 2.8e6, kTwoPi * 2.6e6, kTwoPi * 1.9e3, factor);
  }
  write_text(o.out, j.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ion-cavity dispersive readout: fringe simulation, fitting and "
               "photon-statistics reconstruction"};
  app.require_subcommand(1);

  CommonOpts o_sim, o_fit, o_rec, o_unc, o_cal, o_swp, o_phr, o_spl;
  std::string in_fit, in_rec, in_unc;
  std::optional<double> nmean_hint;
  bool bootstrap = false;
  int repetitions = 50000;
  double g_mhz = 0, gamma_mhz = 0, kappa_khz = 0, factor = 10.0;

  auto* sim = app.add_subcommand("simulate", "synthesize a Ramsey fringe CSV");
  add_common(sim, o_sim);

  auto* fit = app.add_subcommand("fit", "fit a fringe CSV with the sinusoid model");
  add_common(fit, o_fit);
  fit->add_option("--in", in_fit, "fringe CSV")->required();
  auto* hint_opt = fit->add_option("--nmean-hint", "pin the offset via the <n> recalculation");
  hint_opt->each([&nmean_hint](const std::string& s) { nmean_hint = std::stod(s); });

  auto* rec = app.add_subcommand("reconstruct", "maximum-likelihood (eta, delta_n) estimate");
  add_common(rec, o_rec);
  rec->add_option("--in", in_rec, "fringe CSV")->required();
  rec->add_flag("--bootstrap", bootstrap, "Monte-Carlo uncertainty");

  auto* unc = app.add_subcommand("uncertainty", "reconstruct with bootstrap uncertainties");
  add_common(unc, o_unc);
  unc->add_option("--in", in_unc, "fringe CSV")->required();

  auto* cal = app.add_subcommand("calibrate", "photon-number / thermal-noise calibration");
  add_common(cal, o_cal);

  auto* swp = app.add_subcommand("sweep", "fringe shift and contrast vs mean photon number");
  add_common(swp, o_swp);

  auto* phr = app.add_subcommand("phase-resolution", "projection-noise phase resolution");
  add_common(phr, o_phr);
  phr->add_option("--repetitions", repetitions, "bootstrap fit count");

  auto* spl = app.add_subcommand("strong-pull", "g^2/(Delta kappa) feasibility ratio");
  add_common(spl, o_spl);
  spl->add_option("--g-mhz", g_mhz, "coupling / 2pi in MHz");
  spl->add_option("--gamma-mhz", gamma_mhz, "atomic linewidth / 2pi in MHz");
  spl->add_option("--kappa-khz", kappa_khz, "cavity decay / 2pi in kHz");
  spl->add_option("--detuning-factor", factor, "Delta in units of gamma (default 10)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 2 : 0;
  }

  try {
    if (sim->parsed()) return cmd_simulate(o_sim);
    if (fit->parsed()) return cmd_fit(o_fit, in_fit, nmean_hint);
    if (rec->parsed()) return cmd_reconstruct(o_rec, in_rec, bootstrap);
    if (unc->parsed()) return cmd_reconstruct(o_unc, in_unc, true);
    if (cal->parsed()) return cmd_calibrate(o_cal);
    if (swp->parsed()) return cmd_sweep(o_swp);
    if (phr->parsed()) return cmd_phase_resolution(o_phr, repetitions);
    if (spl->parsed()) return cmd_strong_pull(o_spl, g_mhz, gamma_mhz, kappa_khz, factor);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NonConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
