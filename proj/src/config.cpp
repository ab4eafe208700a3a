#include "ioncav/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ioncav/errors.hpp"

namespace ioncav {

using nlohmann::json;

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

constexpr double kMHz = kTwoPi * 1e6;  // ordinary MHz to rad/s

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key '" + where + it.key() + "'");
}

double get_num(const json& j, const std::string& key, double fallback,
               const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number())
    throw ConfigError("config: " + where + key + " must be a number");
  return j[key].get<double>();
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  reject_unknown(j,
                 {"schema", "transition", "physical", "drive", "phases", "trials", "seed",
                  "backend", "coherence", "detection", "sweep"},
                 "");

  ExperimentConfig cfg;
  if (!j.contains("schema") || !j["schema"].is_number_integer())
    throw ConfigError("config: missing integer 'schema'");
  cfg.schema = j["schema"].get<int>();
  if (cfg.schema != 1) throw ConfigError("config: unsupported schema version");

  Transition tr = Transition::DP;
  if (j.contains("transition")) {
    std::string t = j["transition"].get<std::string>();
    if (t == "DP")
      tr = Transition::DP;
    else if (t == "DpPp")
      tr = Transition::DpPp;
    else
      throw ConfigError("config: transition must be 'DP' or 'DpPp'");
  }
  cfg.params = default_params(tr);

  if (j.contains("physical")) {
    const json& ph = j["physical"];
    reject_unknown(ph,
                   {"g_mhz", "kappa_mhz", "delta_pl_mhz", "delta_cl_mhz", "delta_dr_mhz",
                    "delta_ssp_mhz", "gamma_ps_mhz", "gamma_pd_mhz", "gamma_pd32_mhz", "t_us",
                    "n_max"},
                   "physical.");
    auto& p = cfg.params;
    p.g = kMHz * get_num(ph, "g_mhz", p.g / kMHz, "physical.");
    p.kappa = kMHz * get_num(ph, "kappa_mhz", p.kappa / kMHz, "physical.");
    p.Delta_PL = kMHz * get_num(ph, "delta_pl_mhz", p.Delta_PL / kMHz, "physical.");
    p.Delta_CL = kMHz * get_num(ph, "delta_cl_mhz", p.Delta_CL / kMHz, "physical.");
    p.Delta_DR = kMHz * get_num(ph, "delta_dr_mhz", p.Delta_DR / kMHz, "physical.");
    p.Delta_SSp = kMHz * get_num(ph, "delta_ssp_mhz", p.Delta_SSp / kMHz, "physical.");
    p.Gamma_PS = kMHz * get_num(ph, "gamma_ps_mhz", p.Gamma_PS / kMHz, "physical.");
    p.Gamma_PD = kMHz * get_num(ph, "gamma_pd_mhz", p.Gamma_PD / kMHz, "physical.");
    p.Gamma_PD32 = kMHz * get_num(ph, "gamma_pd32_mhz", p.Gamma_PD32 / kMHz, "physical.");
    p.T = 1e-6 * get_num(ph, "t_us", p.T * 1e6, "physical.");
    if (ph.contains("n_max")) p.n_max = ph["n_max"].get<int>();
  }

  if (j.contains("coherence")) {
    const json& c = j["coherence"];
    reject_unknown(c, {"b0", "contrast_at_vacuum", "mode"}, "coherence.");
    cfg.coherence.B0 = get_num(c, "b0", cfg.coherence.B0, "coherence.");
    cfg.coherence.contrast_at_vacuum =
        get_num(c, "contrast_at_vacuum", cfg.coherence.contrast_at_vacuum, "coherence.");
    if (c.contains("mode")) {
      std::string m = c["mode"].get<std::string>();
      if (m == "affine")
        cfg.coherence.mode = CoherenceModel::Mode::AffineMap;
      else if (m == "dephasing")
        cfg.coherence.mode = CoherenceModel::Mode::DephasingChannel;
      else
        throw ConfigError("config: coherence.mode must be 'affine' or 'dephasing'");
    }
    if (cfg.coherence.B0 <= 0 || cfg.coherence.B0 > 0.5)
      throw ConfigError("config: coherence.b0 must lie in (0, 0.5]");
  }

  if (j.contains("detection")) {
    const json& d = j["detection"];
    reject_unknown(d, {"p_out", "zeta", "c", "window_us", "cycles", "counts", "v_dc", "v_ac"},
                   "detection.");
    DetectionChain ch = default_detection_chain();
    ch.kappa = cfg.params.kappa;
    ch.p_out = get_num(d, "p_out", ch.p_out, "detection.");
    ch.c = get_num(d, "c", ch.c, "detection.");
    ch.T = 1e-6 * get_num(d, "window_us", ch.T * 1e6, "detection.");
    if (d.contains("cycles")) ch.cycles = d["cycles"].get<int>();
    if (d.contains("zeta"))
      ch.zeta = d["zeta"].get<double>();
    else
      ch.zeta = 515.0 * ch.c / (2.0 * ch.kappa * ch.p_out * ch.T * ch.cycles);
    ch.validate();
    cfg.detection = ch;
    if (d.contains("counts")) cfg.counts = d["counts"].get<double>();
    if (d.contains("v_dc") || d.contains("v_ac")) {
      PhotodiodeReading r;
      r.V_DC = get_num(d, "v_dc", 0.0, "detection.");
      r.V_AC = get_num(d, "v_ac", 0.0, "detection.");
      r.counts = cfg.counts.value_or(0.0);
      cfg.photodiode = r;
    }
  }

  if (j.contains("drive")) {
    const json& dr = j["drive"];
    reject_unknown(dr, {"eta_mhz", "delta_n_mhz", "mean_n", "thermal_fraction", "basis"},
                   "drive.");
    bool direct = dr.contains("eta_mhz") || dr.contains("delta_n_mhz");
    bool target = dr.contains("mean_n");
    if (direct && target)
      throw ConfigError("config: drive must give either (eta, delta_n) or mean_n, not both");
    if (direct) {
      cfg.params.eta = kMHz * get_num(dr, "eta_mhz", 0.0, "drive.");
      cfg.params.delta_n = kMHz * get_num(dr, "delta_n_mhz", 0.0, "drive.");
    } else if (target) {
      double n = dr["mean_n"].get<double>();
      double f = get_num(dr, "thermal_fraction", 0.0, "drive.");
      MeanNBasis basis = MeanNBasis::WindowAverage;
      if (dr.contains("basis")) {
        std::string b = dr["basis"].get<std::string>();
        if (b == "window_average")
          basis = MeanNBasis::WindowAverage;
        else if (b == "steady_state")
          basis = MeanNBasis::SteadyState;
        else
          throw ConfigError("config: drive.basis must be 'window_average' or 'steady_state'");
      }
      double c = cfg.detection ? cfg.detection->c : kDefaultBuildupC;
      set_drive_target(cfg.params, n, f, basis, c);
    }
  }

  if (j.contains("phases")) {
    const json& p = j["phases"];
    reject_unknown(p, {"count", "start", "stop", "list"}, "phases.");
    if (p.contains("list")) {
      cfg.phases = p["list"].get<std::vector<double>>();
    } else {
      int count = p.contains("count") ? p["count"].get<int>() : 51;
      double start = get_num(p, "start", 0.0, "phases.");
      double stop = get_num(p, "stop", 2.0, "phases.");
      if (count < 4) throw ConfigError("config: phases.count must be >= 4");
      cfg.phases.resize(count);
      for (int k = 0; k < count; ++k)
        cfg.phases[k] = start + (stop - start) * double(k) / double(count);
    }
  } else {
    cfg.phases = phase_grid(51);
  }

  if (j.contains("trials")) {
    cfg.trials = j["trials"].get<int>();
    if (cfg.trials < 0) throw ConfigError("config: trials must be >= 0");
  }
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("backend")) {
    std::string b = j["backend"].get<std::string>();
    if (b == "full")
      cfg.backend = Backend::Full;
    else if (b == "eliminated")
      cfg.backend = Backend::Eliminated;
    else
      throw ConfigError("config: backend must be 'full' or 'eliminated'");
  }

  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    reject_unknown(s, {"values", "transitions"}, "sweep.");
    if (s.contains("values")) cfg.sweep_values = s["values"].get<std::vector<double>>();
    if (s.contains("transitions")) {
      for (const auto& t : s["transitions"]) {
        std::string ts = t.get<std::string>();
        if (ts == "DP")
          cfg.sweep_transitions.push_back(Transition::DP);
        else if (ts == "DpPp")
          cfg.sweep_transitions.push_back(Transition::DpPp);
        else
          throw ConfigError("config: sweep.transitions entries must be 'DP' or 'DpPp'");
      }
    } else {
      cfg.sweep_transitions = {Transition::DP, Transition::DpPp};
    }
  }

  try {
    cfg.params.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  cfg.hash = fnv1a64(j.dump());
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string ExperimentConfig::resolved_json() const {
  nlohmann::ordered_json j;
  j["schema"] = schema;
  j["transition"] = params.transition == Transition::DP ? "DP" : "DpPp";
  nlohmann::ordered_json ph;
  ph["g_rad_s"] = params.g;
  ph["kappa_rad_s"] = params.kappa;
  ph["delta_pl_rad_s"] = params.Delta_PL;
  ph["delta_cl_rad_s"] = params.Delta_CL;
  ph["delta_dr_rad_s"] = params.Delta_DR;
  ph["delta_ssp_rad_s"] = params.Delta_SSp;
  ph["eta_rad_s"] = params.eta;
  ph["delta_n_rad_s"] = params.delta_n;
  ph["gamma_ps_rad_s"] = params.Gamma_PS;
  ph["gamma_pd_rad_s"] = params.Gamma_PD;
  ph["gamma_pd32_rad_s"] = params.Gamma_PD32;
  ph["t_s"] = params.T;
  ph["n_max"] = params.n_max;
  j["physical"] = ph;
  j["coherence"] = {{"b0", coherence.B0},
                    {"contrast_at_vacuum", coherence.contrast_at_vacuum},
                    {"mode", coherence.mode == CoherenceModel::Mode::AffineMap ? "affine"
                                                                               : "dephasing"}};
  j["backend"] = backend == Backend::Full ? "full" : "eliminated";
  j["seed"] = seed;
  j["trials"] = trials;
  std::ostringstream h;
  h << std::hex << hash;
  j["config_hash"] = h.str();
  return j.dump(2) + "\n";
}

}  // namespace ioncav
