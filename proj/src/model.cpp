#include "ioncav/model.hpp"

#include <cmath>
#include <stdexcept>

namespace ioncav {

void IonCavityParams::validate() const {
  auto nonneg = [](double v, const char* name) {
    if (v < 0 || !std::isfinite(v))
      throw std::invalid_argument(std::string("IonCavityParams: ") + name + " must be >= 0");
  };
  nonneg(g, "g");
  nonneg(kappa, "kappa");
  nonneg(eta, "eta");
  nonneg(delta_n, "delta_n");
  nonneg(Gamma_PS, "Gamma_PS");
  nonneg(Gamma_PD, "Gamma_PD");
  nonneg(Gamma_PD32, "Gamma_PD32");
  nonneg(T, "T");
  if (n_max < 1) throw std::invalid_argument("IonCavityParams: n_max must be >= 1");
}

IonCavityParams default_params(Transition t) {
  IonCavityParams p;
  p.g = kTwoPi * 0.968e6;
  p.kappa = kTwoPi * 0.068e6;
  p.Delta_PL = kTwoPi * 125e6;
  p.Gamma_PS = kTwoPi * 21.4e6;
  p.Gamma_PD = kTwoPi * 1.34e6;
  p.Gamma_PD32 = kTwoPi * 0.152e6;
  p.n_max = 9;
  p.T = 50e-6;
  p.transition = t;
  if (t == Transition::DpPp) p.g *= 0.82;
  return p;
}

BranchingTable branching(const IonCavityParams& p) {
  BranchingTable b;
  switch (p.transition) {
    case Transition::DP:
      b.to_S = (2.0 / 3.0) * p.Gamma_PS;
      b.to_Sprime = (1.0 / 3.0) * p.Gamma_PS + (3.0 / 5.0) * p.Gamma_PD + p.Gamma_PD32;
      b.to_D = (2.0 / 5.0) * p.Gamma_PD;
      return b;
    case Transition::DpPp:
      b.to_S = p.Gamma_PS;
      b.to_Sprime = (11.0 / 15.0) * p.Gamma_PD;
      b.to_D = (4.0 / 15.0) * p.Gamma_PD;
      return b;
  }
  throw std::invalid_argument("branching: invalid transition");
}

Operator build_hamiltonian(const IonCavityParams& p) {
  p.validate();
  HilbertSpace s = p.space();
  Operator a_cav = fock_annihilation(p.n_max);
  Operator a = embed(s, a_cav, 1);
  Operator n_op = a.adjoint() * a;

  Operator sig_D = embed(s, atomic_operator(Level::D, Level::D), 0);
  Operator sig_P = embed(s, atomic_operator(Level::P, Level::P), 0);
  Operator sig_Sp = embed(s, atomic_operator(Level::Sprime, Level::Sprime), 0);
  Operator sig_PD = embed(s, atomic_operator(Level::D, Level::P), 0);  // |P><D|

  Mat h = p.Delta_DR * sig_D.m + (p.Delta_PL + p.Delta_CL + p.Delta_DR) * sig_P.m +
          p.Delta_SSp * sig_Sp.m + p.Delta_CL * n_op.m +
          p.g * (sig_PD.m * a.m + a.m.adjoint() * sig_PD.m.adjoint()) +
          p.eta * (a.m + a.m.adjoint());
  return {s, std::move(h)};
}

std::vector<CollapseChannel> build_channels(const IonCavityParams& p) {
  p.validate();
  HilbertSpace s = p.space();
  BranchingTable b = branching(p);
  std::vector<CollapseChannel> ch;
  ch.push_back({embed(s, atomic_operator(Level::P, Level::S), 0), b.to_S});
  ch.push_back({embed(s, atomic_operator(Level::P, Level::Sprime), 0), b.to_Sprime});
  ch.push_back({embed(s, atomic_operator(Level::P, Level::D), 0), b.to_D});
  ch.push_back({embed(s, fock_annihilation(p.n_max), 1), 2.0 * p.kappa});
  return ch;
}

LindbladGenerator build_generator(const IonCavityParams& p) {
  Operator a = embed(p.space(), fock_annihilation(p.n_max), 1);
  return LindbladGenerator(build_hamiltonian(p), build_channels(p), p.delta_n, a);
}

double dispersive_shift(double g, double Delta) {
  if (Delta == 0.0) throw std::invalid_argument("dispersive_shift: zero detuning");
  return g * g / Delta;
}

double expected_phase_shift(double n_mean, const IonCavityParams& p) {
  if (n_mean < 0) throw std::invalid_argument("expected_phase_shift: n_mean < 0");
  return p.T * dispersive_shift(p.g, p.Delta_PL) * n_mean;
}

double chi_shift(const IonCavityParams& p) {
  double gt = branching(p).total();
  double d2 = p.Delta_PL * p.Delta_PL + 0.25 * gt * gt;
  return p.g * p.g * p.Delta_PL / d2;
}

double scatter_rate_per_photon(const IonCavityParams& p) {
  double gt = branching(p).total();
  double d2 = p.Delta_PL * p.Delta_PL + 0.25 * gt * gt;
  return gt * p.g * p.g / d2;
}

double buildup_factor(double kappa, double T) {
  double x = kappa * T;
  if (x <= 0) return 1.0;
  return 1.0 - 2.0 * (1.0 - std::exp(-x)) / x + (1.0 - std::exp(-2.0 * x)) / (2.0 * x);
}

LindbladGenerator eliminated_generator(const IonCavityParams& p) {
  p.validate();
  HilbertSpace s({kElimAtomDim, p.n_max + 1});
  Operator a_cav = fock_annihilation(p.n_max);
  Operator a = embed(s, a_cav, 1);
  Operator n_op = a.adjoint() * a;

  auto level_op = [&](int to, int from) {
    Mat m = Mat::Zero(kElimAtomDim, kElimAtomDim);
    m(to, from) = 1.0;
    return embed(s, Operator{HilbertSpace({kElimAtomDim}), m}, 0);
  };
  const int S = 0, D = 1;

  Operator sig_D = level_op(D, D);
  Mat h = p.Delta_DR * sig_D.m + p.Delta_CL * n_op.m - chi_shift(p) * (sig_D.m * n_op.m) +
          p.eta * (a.m + a.m.adjoint());

  BranchingTable b = branching(p);
  double per_photon = scatter_rate_per_photon(p) / b.total();
  std::vector<CollapseChannel> ch;
  ch.push_back({level_op(S, D) * a, per_photon * b.to_S});
  ch.push_back({level_op(kElimSink, D) * a, per_photon * b.to_Sprime});
  ch.push_back({level_op(D, D) * a, per_photon * b.to_D});
  ch.push_back({a, 2.0 * p.kappa});

  return LindbladGenerator(Operator{s, std::move(h)}, std::move(ch), p.delta_n, a);
}

LindbladGenerator ion_drive_generator(const IonCavityParams& p, double rabi) {
  p.validate();
  if (rabi < 0) throw std::invalid_argument("ion_drive_generator: rabi < 0");
  HilbertSpace s({kAtomDim, 1});
  auto emb = [&](Level from, Level to) { return embed(s, atomic_operator(from, to), 0); };

  Operator sig_D = emb(Level::D, Level::D);
  Operator sig_P = emb(Level::P, Level::P);
  Operator sig_Sp = emb(Level::Sprime, Level::Sprime);
  Operator sig_PD = emb(Level::D, Level::P);

  Mat h = p.Delta_DR * sig_D.m + (p.Delta_PL + p.Delta_DR) * sig_P.m + p.Delta_SSp * sig_Sp.m +
          rabi * (sig_PD.m + sig_PD.m.adjoint());

  BranchingTable b = branching(p);
  std::vector<CollapseChannel> ch;
  ch.push_back({emb(Level::P, Level::S), b.to_S});
  ch.push_back({emb(Level::P, Level::Sprime), b.to_Sprime});
  ch.push_back({emb(Level::P, Level::D), b.to_D});
  return LindbladGenerator(Operator{s, std::move(h)}, std::move(ch));
}

}  // namespace ioncav
