#include "ioncav/ramsey.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ioncav/errors.hpp"
#include "ioncav/rng.hpp"

namespace ioncav {

Operator ramsey_pulse(const HilbertSpace& space, const PulseSpec& pulse) {
  double th = pulse.rotation_angle;
  if (th <= 0 || th > kTwoPi / 2.0 + 1e-12)
    throw std::invalid_argument("ramsey_pulse: angle must be in (0, pi]");
  Cx ph(std::cos(pulse.phase), std::sin(pulse.phase));
  Mat g = Mat::Zero(kAtomDim, kAtomDim);
  int S = int(Level::S), D = int(Level::D);
  g(D, S) = std::conj(ph);
  g(S, D) = ph;
  Mat u = Mat::Identity(kAtomDim, kAtomDim);
  u(S, S) = u(D, D) = std::cos(th / 2.0);
  u(S, D) = -kI * std::sin(th / 2.0) * g(S, D);
  u(D, S) = -kI * std::sin(th / 2.0) * g(D, S);
  return embed(space, Operator{HilbertSpace({kAtomDim}), std::move(u)}, 0);
}

void Fringe::validate() const {
  if (phases.size() != p_D.size()) throw std::invalid_argument("Fringe: list length mismatch");
  if (size() < 4) throw std::invalid_argument("Fringe: need at least 4 points");
  if (trials < 0) throw std::invalid_argument("Fringe: negative trials");
  for (double p : p_D)
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("Fringe: p_D outside [0, 1]");
}

double CoherenceModel::dephasing_rate(double T) const {
  if (T <= 0) return 0.0;
  return -2.0 * std::log(contrast_at_vacuum) / T;
}

void set_drive_target(IonCavityParams& p, double mean_n, double thermal_fraction,
                      MeanNBasis basis, double buildup_c) {
  if (mean_n < 0) throw std::invalid_argument("set_drive_target: mean_n < 0");
  if (thermal_fraction < 0 || thermal_fraction > 1)
    throw std::invalid_argument("set_drive_target: thermal fraction outside [0, 1]");
  double n_ss = (basis == MeanNBasis::WindowAverage) ? mean_n / buildup_c : mean_n;
  p.eta = p.kappa * std::sqrt((1.0 - thermal_fraction) * n_ss);
  p.delta_n = p.kappa * thermal_fraction * n_ss;
}

namespace {

LindbladGenerator backend_generator(const IonCavityParams& p, const CoherenceModel& coh,
                                    Backend backend, int& atom_dim) {
  atom_dim = (backend == Backend::Full) ? kAtomDim : kElimAtomDim;
  LindbladGenerator gen = (backend == Backend::Full) ? build_generator(p)
                                                     : eliminated_generator(p);
  if (coh.mode == CoherenceModel::Mode::DephasingChannel) {
    double rate = coh.dephasing_rate(p.T);
    Mat proj = Mat::Zero(atom_dim, atom_dim);
    proj(1, 1) = 1.0;  // D slot in either atom basis
    Operator sig_d = embed(gen.space(), Operator{HilbertSpace({atom_dim}), proj}, 0);
    auto ch = gen.channels();
    ch.push_back({sig_d, rate});
    gen = LindbladGenerator(gen.hamiltonian(), std::move(ch), gen.incoherent_rate(),
                            gen.incoherent_mode());
  }
  return gen;
}

}  // namespace

RamseyTraces fringe_traces(const IonCavityParams& p, const CoherenceModel& coh,
                           Backend backend) {
  int adim = 0;
  LindbladGenerator gen = backend_generator(p, coh, backend, adim);
  return ramsey_traces(gen, adim, 0, 1, p.T);
}

FringeModel::FringeModel(const IonCavityParams& base, const CoherenceModel& coh,
                         Backend backend)
    : coh_(coh), T_(base.T) {
  auto build = [&](double eta, double dn) {
    IonCavityParams q = base;
    q.eta = eta;
    q.delta_n = dn;
    int adim = 0;
    LindbladGenerator gen = backend_generator(q, coh, backend, adim);
    return build_sector_propagator(gen, adim, 0, 1);
  };
  base_ = build(0.0, 0.0);
  d_eta_ = build(1.0, 0.0);
  d_dn_ = build(0.0, 1.0);
  d_eta_.coh -= base_.coh;
  d_eta_.exc -= base_.exc;
  d_dn_.coh -= base_.coh;
  d_dn_.exc -= base_.exc;
}

RamseyTraces FringeModel::traces(double eta, double delta_n) const {
  SectorPropagator sp;
  sp.coh = base_.coh + eta * d_eta_.coh + delta_n * d_dn_.coh;
  sp.exc = base_.exc + eta * d_eta_.exc + delta_n * d_dn_.exc;
  sp.dc = base_.dc;
  sp.off_sd = base_.off_sd;
  sp.off_dd = base_.off_dd;
  return sp.propagate(T_);
}

std::vector<double> FringeModel::probabilities(const std::vector<double>& phases_pi,
                                               double eta, double delta_n) const {
  RamseyTraces tr = traces(eta, delta_n);
  std::vector<double> out;
  out.reserve(phases_pi.size());
  for (double phi : phases_pi)
    out.push_back(std::clamp(coh_.apply(ramsey_probability(tr, phi)), 0.0, 1.0));
  return out;
}

double simulate_point(const IonCavityParams& p, double phi_pi, const CoherenceModel& coh,
                      Backend backend) {
  RamseyTraces tr = fringe_traces(p, coh, backend);
  double raw = ramsey_probability(tr, phi_pi);
  return std::clamp(coh.apply(raw), 0.0, 1.0);
}

Fringe simulate_fringe(const IonCavityParams& p, const std::vector<double>& phases_pi,
                       const CoherenceModel& coh, Backend backend) {
  if (phases_pi.size() < 4)
    throw std::invalid_argument("simulate_fringe: need at least 4 distinct phases");
  RamseyTraces tr = fringe_traces(p, coh, backend);
  Fringe f;
  f.phases = phases_pi;
  f.p_D.reserve(phases_pi.size());
  for (double phi : phases_pi)
    f.p_D.push_back(std::clamp(coh.apply(ramsey_probability(tr, phi)), 0.0, 1.0));
  f.trials = 0;
  return f;
}

double simulate_point_stepped(const IonCavityParams& p, double phi_pi,
                              const CoherenceModel& coh, double step) {
  LindbladGenerator gen = build_generator(p);
  if (coh.mode == CoherenceModel::Mode::DephasingChannel) {
    int adim = 0;
    gen = backend_generator(p, coh, Backend::Full, adim);
  }
  HilbertSpace s = p.space();
  Mat r0 = Mat::Zero(s.dim(), s.dim());
  r0(0, 0) = 1.0;  // |S> x |0>
  DensityMatrix rho{s, std::move(r0)};

  Operator u1 = ramsey_pulse(s, PulseSpec{});
  rho.m = u1.m * rho.m * u1.m.adjoint();
  rho = evolve(gen, rho, p.T, step);
  PulseSpec second;
  second.phase = -(kTwoPi / 2.0) * phi_pi;  // scan convention: shift grows with +AC-Stark
  Operator u2 = ramsey_pulse(s, second);
  rho.m = u2.m * rho.m * u2.m.adjoint();
  Operator sig_d = embed(s, atomic_operator(Level::D, Level::D), 0);
  double raw = expectation(rho, sig_d).real();
  return std::clamp(coh.apply(raw), 0.0, 1.0);
}

Fringe simulate_fringe_ion_drive(const IonCavityParams& p, double rabi,
                                 const std::vector<double>& phases_pi,
                                 const CoherenceModel& coh) {
  LindbladGenerator gen = ion_drive_generator(p, rabi);
  if (coh.mode == CoherenceModel::Mode::DephasingChannel) {
    Mat proj = Mat::Zero(kAtomDim, kAtomDim);
    proj(1, 1) = 1.0;
    Operator sig_d = embed(gen.space(), Operator{HilbertSpace({kAtomDim}), proj}, 0);
    auto ch = gen.channels();
    ch.push_back({sig_d, coh.dephasing_rate(p.T)});
    gen = LindbladGenerator(gen.hamiltonian(), std::move(ch), 0.0, Operator{});
  }
  RamseyTraces tr = ramsey_traces(gen, kAtomDim, 0, 1, p.T);
  Fringe f;
  f.phases = phases_pi;
  for (double phi : phases_pi)
    f.p_D.push_back(std::clamp(coh.apply(ramsey_probability(tr, phi)), 0.0, 1.0));
  f.trials = 0;
  return f;
}

namespace {

struct SinusoidDesign {
  const std::vector<double>& phi;
  const std::vector<double>& f;
  bool pin_b;
  double b_pinned;

  double model(double a, double b, double phi0, int k) const {
    return b + a * std::cos(kTwoPi * 0.5 * (phi[k] - phi0));
  }
  double ssr(double a, double b, double phi0) const {
    double s = 0;
    for (int k = 0; k < int(phi.size()); ++k) {
      double r = f[k] - model(a, b, phi0, k);
      s += r * r;
    }
    return s;
  }
};

FringeFit fit_core(const Fringe& fringe, bool pin_b, double b_pinned, double branch_hint) {
  fringe.validate();
  const int n = fringe.size();
  const auto& phi = fringe.phases;
  const auto& f = fringe.p_D;

  double span = *std::max_element(phi.begin(), phi.end()) -
                *std::min_element(phi.begin(), phi.end());
  if (span < 1.5)
    throw std::invalid_argument("fit_fringe: fringe must span at least one period");
  double fr = *std::max_element(f.begin(), f.end()) - *std::min_element(f.begin(), f.end());
  if (fr < 1e-12) throw NonConvergenceError("fit_fringe: degenerate (constant) fringe");

  // discrete-Fourier seed
  double b0 = 0, c1 = 0, s1 = 0;
  for (double v : f) b0 += v;
  b0 /= n;
  for (int k = 0; k < n; ++k) {
    c1 += (f[k] - b0) * std::cos(kTwoPi * 0.5 * phi[k]);
    s1 += (f[k] - b0) * std::sin(kTwoPi * 0.5 * phi[k]);
  }
  c1 *= 2.0 / n;
  s1 *= 2.0 / n;
  double a = std::hypot(c1, s1);
  double phi0 = std::atan2(s1, c1) / (kTwoPi / 2.0);
  double b = pin_b ? b_pinned : b0;

  SinusoidDesign d{phi, f, pin_b, b_pinned};
  const int np = pin_b ? 2 : 3;
  Eigen::VectorXd theta(np);
  theta(0) = a;
  theta(1) = pin_b ? phi0 : b;
  if (!pin_b) theta(2) = phi0;

  auto unpack = [&](const Eigen::VectorXd& t, double& ta, double& tb, double& tp) {
    ta = t(0);
    tb = pin_b ? b_pinned : t(1);
    tp = pin_b ? t(1) : t(2);
  };

  double ssr_prev = 0;
  {
    double ta, tb, tp;
    unpack(theta, ta, tb, tp);
    ssr_prev = d.ssr(ta, tb, tp);
  }
  Eigen::MatrixXd jac(n, np);
  Eigen::VectorXd res(n);
  int it = 0;
  bool converged = false;
  for (; it < 100; ++it) {
    double ta, tb, tp;
    unpack(theta, ta, tb, tp);
    for (int k = 0; k < n; ++k) res(k) = f[k] - d.model(ta, tb, tp, k);
    for (int j = 0; j < np; ++j) {
      double h = 1e-7 * std::max(1.0, std::abs(theta(j)));
      Eigen::VectorXd tp1 = theta, tm1 = theta;
      tp1(j) += h;
      tm1(j) -= h;
      double a1, b1, p1, a2, b2, p2;
      unpack(tp1, a1, b1, p1);
      unpack(tm1, a2, b2, p2);
      for (int k = 0; k < n; ++k)
        jac(k, j) = (d.model(a1, b1, p1, k) - d.model(a2, b2, p2, k)) / (2.0 * h);
    }
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::VectorXd step = jtj.ldlt().solve(jac.transpose() * res);
    double scale = 1.0;
    double ssr_new = ssr_prev;
    for (int half = 0; half < 12; ++half) {
      Eigen::VectorXd cand = theta + scale * step;
      double ca, cb, cp;
      unpack(cand, ca, cb, cp);
      ssr_new = d.ssr(ca, cb, cp);
      if (ssr_new <= ssr_prev + 1e-18) {
        theta = cand;
        break;
      }
      scale *= 0.5;
    }
    double rel = (step.cwiseAbs().maxCoeff()) * scale;
    if (rel < 1e-12 || std::abs(ssr_prev - ssr_new) < 1e-16 * std::max(1.0, ssr_prev)) {
      ssr_prev = ssr_new;
      converged = true;
      break;
    }
    ssr_prev = ssr_new;
  }
  if (!converged && it >= 100)
    throw NonConvergenceError("fit_fringe: Gauss-Newton did not converge");

  double fa, fb, fp;
  unpack(theta, fa, fb, fp);
  if (fa < 0) {  // fold negative amplitude into a half-period phase shift
    fa = -fa;
    fp += 1.0;
  }
  fp = std::remainder(fp, 2.0);
  fp += 2.0 * std::round((branch_hint - fp) / 2.0);

  // covariance from the Jacobian at the solution
  for (int k = 0; k < n; ++k) res(k) = f[k] - d.model(fa, fb, fp, k);
  double sigma2 = res.squaredNorm() / std::max(1, n - np);
  Eigen::MatrixXd cov = (jac.transpose() * jac).inverse() * sigma2;

  FringeFit out;
  out.amplitude = fa;
  out.offset = fb;
  out.phase_shift = fp;
  out.contrast = fb > 0 ? fa / fb : 0.0;
  out.offset_pinned = pin_b;
  out.iterations = it + 1;
  if (pin_b) {
    out.sigma_amplitude = std::sqrt(std::max(0.0, cov(0, 0)));
    out.sigma_phase = std::sqrt(std::max(0.0, cov(1, 1)));
    out.covariance(0, 0) = cov(0, 0);
    out.covariance(2, 2) = cov(1, 1);
    out.covariance(0, 2) = out.covariance(2, 0) = cov(0, 1);
  } else {
    out.sigma_amplitude = std::sqrt(std::max(0.0, cov(0, 0)));
    out.sigma_offset = std::sqrt(std::max(0.0, cov(1, 1)));
    out.sigma_phase = std::sqrt(std::max(0.0, cov(2, 2)));
    out.covariance = cov;
  }
  return out;
}

}  // namespace

FringeFit fit_fringe(const Fringe& fringe) { return fit_core(fringe, false, 0.0, 0.0); }

FringeFit fit_fringe(const Fringe& fringe, double n_mean_hint, const IonCavityParams& p,
                     const CoherenceModel& coh) {
  double b = recalculated_offset(n_mean_hint, p, coh);
  double hint = expected_phase_shift(n_mean_hint, p) / (kTwoPi / 2.0);
  return fit_core(fringe, true, b, hint);
}

double recalculated_offset(double n_mean, const IonCavityParams& p, const CoherenceModel& coh) {
  BranchingTable b = branching(p);
  double p_upper = 2.0 * p.g * p.g * n_mean / (b.to_D * b.to_D + p.Delta_PL * p.Delta_PL);
  return coh.B0 * std::exp(-b.to_Sprime * p_upper * n_mean * p.T);
}

Fringe sample_projection_noise(const Fringe& fringe, int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("sample_projection_noise: trials must be >= 1");
  fringe.validate();
  CounterRng root(seed);
  Fringe out = fringe;
  out.trials = trials;
  for (int k = 0; k < fringe.size(); ++k) {
    CounterRng rk = root.stream(std::uint64_t(k));
    out.p_D[k] = double(rk.binomial(trials, fringe.p_D[k])) / double(trials);
  }
  return out;
}

std::vector<double> phase_grid(int n_points) {
  if (n_points < 4) throw std::invalid_argument("phase_grid: need at least 4 points");
  std::vector<double> g(n_points);
  for (int k = 0; k < n_points; ++k) g[k] = 2.0 * double(k) / double(n_points);
  return g;
}

void write_fringe_csv(std::ostream& os, const Fringe& fringe, const std::vector<double>* exact) {
  if (exact && exact->size() != fringe.phases.size())
    throw std::invalid_argument("write_fringe_csv: exact column length mismatch");
  os << "phase_pi,p_D,trials";
  if (exact) os << ",p_D_exact";
  os << "\n";
  os << std::setprecision(17);
  for (size_t k = 0; k < fringe.phases.size(); ++k) {
    os << fringe.phases[k] << "," << fringe.p_D[k] << "," << fringe.trials;
    if (exact) os << "," << (*exact)[k];
    os << "\n";
  }
}

Fringe read_fringe_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("fringe csv: empty input");
  if (line.rfind("phase_pi,p_D,trials", 0) != 0)
    throw IoError("fringe csv: expected header 'phase_pi,p_D,trials'");
  Fringe f;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    double vals[3];
    for (int c = 0; c < 3; ++c) {
      if (!std::getline(ss, cell, ','))
        throw IoError("fringe csv: malformed row at line " + std::to_string(lineno));
      try {
        vals[c] = std::stod(cell);
      } catch (const std::exception&) {
        throw IoError("fringe csv: bad number at line " + std::to_string(lineno));
      }
    }
    f.phases.push_back(vals[0]);
    f.p_D.push_back(vals[1]);
    f.trials = int(vals[2]);
  }
  f.validate();
  return f;
}

void write_fringe_csv_file(const std::string& path, const Fringe& fringe,
                           const std::vector<double>* exact) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open for writing: " + path);
  write_fringe_csv(os, fringe, exact);
}

Fringe read_fringe_csv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open for reading: " + path);
  return read_fringe_csv(is);
}

}  // namespace ioncav
