#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ioncav/lindblad.hpp"
#include "ioncav/model.hpp"
#include "ioncav/rng.hpp"
#include "oracles.hpp"

using namespace ioncav;

namespace {

// Bare cavity with coherent drive eta and detuning delta_cl; field decay kappa.
LindbladGenerator cavity_generator(double kappa, double eta, double delta_cl, double delta_n,
                                   int n_max) {
  Operator a = fock_annihilation(n_max);
  Operator n_op = a.adjoint() * a;
  Mat h = delta_cl * n_op.m + eta * (a.m + a.m.adjoint());
  return LindbladGenerator(Operator{a.space, h}, {{a, 2.0 * kappa}}, delta_n, a);
}

DensityMatrix vacuum(const HilbertSpace& s) {
  Mat m = Mat::Zero(s.dim(), s.dim());
  m(0, 0) = 1.0;
  return {s, m};
}

Mat random_density(CounterRng& rng, int d) {
  Mat m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = Cx(rng.uniform() - 0.5, rng.uniform() - 0.5);
  m = (m * m.adjoint()).eval();
  m /= m.trace();
  return m;
}

}  // namespace

TEST_CASE("rhs: zero generator, trace conservation, linearity") {
  HilbertSpace s({6});
  Mat h = Mat::Zero(6, 6);
  LindbladGenerator gen(Operator{s, h}, {});
  CounterRng rng(11);
  Mat rho = random_density(rng, 6);
  CHECK(max_abs(gen.rhs(rho)) == 0.0);

  auto cav = cavity_generator(1e5, 2e5, 3e4, 4e4, 5);
  Mat r2 = random_density(rng, 6);
  CHECK(std::abs(cav.rhs(r2).trace()) < 1e-12 * 1e6);

  // linearity on random inputs
  Mat r3 = random_density(rng, 6);
  Cx alpha(0.3, 0.1), beta(0.7, -0.2);
  Mat lhs = cav.rhs((alpha * r2 + beta * r3).eval());
  Mat rhs2 = alpha * cav.rhs(r2) + beta * cav.rhs(r3);
  CHECK(max_abs(lhs - rhs2) < 1e-12 * max_abs(lhs));
}

TEST_CASE("incoherent term equals thermal decay-plus-excitation form") {
  // dn([[a,rho],a+] + [[a+,rho],a]) combined with the kappa channel must
  // equal (kappa+dn)(2 a rho a+ - {a+a, rho}) + dn(2 a+ rho a - {a a+, rho})
  double kappa = 4.27e5, dn = 2.1e5;
  int n_max = 5;
  auto gen = cavity_generator(kappa, 0.0, 0.0, dn, n_max);
  CounterRng rng(13);
  Mat rho = random_density(rng, n_max + 1);

  Mat a = fock_annihilation(n_max).m;
  Mat ad = a.adjoint();
  Mat expand = (kappa + dn) * (2.0 * a * rho * ad - rho * ad * a - ad * a * rho) +
               dn * (2.0 * ad * rho * a - rho * a * ad - a * ad * rho);
  CHECK(max_abs(gen.rhs(rho) - expand) < 1e-12 * max_abs(expand));

  // and literally as the double-commutator expansion
  Mat dbl = dn * ((a * rho - rho * a) * ad - ad * (a * rho - rho * a) +
                  (ad * rho - rho * ad) * a - a * (ad * rho - rho * ad));
  Mat kap = kappa * (2.0 * a * rho * ad - rho * ad * a - ad * a * rho);
  CHECK(max_abs(gen.rhs(rho) - kap - dbl) < 1e-12 * max_abs(expand));
}

TEST_CASE("evolve: two-level exponential decay oracle") {
  HilbertSpace s({2});
  double gamma = 1.0e6;
  Mat sm = Mat::Zero(2, 2);
  sm(0, 1) = 1.0;  // |g><e|
  LindbladGenerator gen(Operator{s, Mat::Zero(2, 2)}, {{Operator{s, sm}, gamma}});
  Mat e0 = Mat::Zero(2, 2);
  e0(1, 1) = 1.0;
  double t = 1.0 / gamma;  // Gamma t = 1
  DensityMatrix out = evolve(gen, DensityMatrix{s, e0}, t, 1e-3 / gamma);
  double expect = std::exp(-gamma * t);
  CHECK(std::abs(out.m(1, 1).real() - expect) / expect < 1e-6);
}

TEST_CASE("evolve: driven cavity reaches eta^2/(kappa^2 + Delta^2)") {
  double kappa = kTwoPi * 0.068e6;
  int n_max = 9;
  auto gen = cavity_generator(kappa, kappa, 0.0, 0.0, n_max);
  DensityMatrix rho = vacuum(HilbertSpace({n_max + 1}));
  DensityMatrix out = evolve(gen, rho, 10.0 / kappa, 0.02 / kappa);
  Operator a = fock_annihilation(n_max);
  double n = expectation(out, a.adjoint() * a).real();
  CHECK(n == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("evolve: incoherent drive gives Bose-Einstein state with n = dn/kappa") {
  double kappa = kTwoPi * 0.068e6;
  double dn = 0.5 * kappa;
  int n_max = 9;
  auto gen = cavity_generator(kappa, 0.0, 0.0, dn, n_max);
  DensityMatrix out = evolve(gen, vacuum(HilbertSpace({n_max + 1})), 10.0 / kappa, 0.02 / kappa);
  auto be = oracles::bose_einstein(0.5, n_max);
  for (int n = 0; n <= 6; ++n)
    CHECK(out.m(n, n).real() == doctest::Approx(be[n]).epsilon(0.01));
}

TEST_CASE("evolve rejects oversized steps and preserves invariants") {
  IonCavityParams p = default_params();
  auto gen = build_generator(p);
  DensityMatrix rho = vacuum(p.space());
  CHECK_THROWS_AS(evolve(gen, rho, 1e-9, 1.0 / gen.max_diag_frequency()),
                  std::invalid_argument);
  CHECK_THROWS_AS(evolve(gen, rho, -1.0, 1e-12), std::invalid_argument);

  // short stiff evolution keeps the density matrix valid
  IonCavityParams pd = p;
  pd.eta = p.kappa;
  auto gen2 = build_generator(pd);
  DensityMatrix out = evolve(gen2, rho, 2e-8);
  CHECK_NOTHROW(out.validate());
}

TEST_CASE("fourth-order convergence under step halving") {
  double kappa = kTwoPi * 0.068e6;
  auto gen = cavity_generator(kappa, 0.7 * kappa, 0.0, 0.2 * kappa, 7);
  DensityMatrix rho = vacuum(HilbertSpace({8}));
  double t = 0.5 / kappa;
  Operator a = fock_annihilation(7);
  Operator n_op = a.adjoint() * a;

  double h = 1e-8;
  double n_h = expectation(evolve(gen, rho, t, h), n_op).real();
  double n_h2 = expectation(evolve(gen, rho, t, h / 2), n_op).real();
  double n_h4 = expectation(evolve(gen, rho, t, h / 4), n_op).real();
  double ratio = (n_h - n_h2) / (n_h2 - n_h4);
  CHECK(ratio == doctest::Approx(16.0).epsilon(0.25));

  // halving the step changes the observable by < 1e-6 relative at the
  // default-step scale
  double h_def = 0.02 / kappa;
  double v1 = expectation(evolve(gen, rho, t, h_def), n_op).real();
  double v2 = expectation(evolve(gen, rho, t, h_def / 2), n_op).real();
  CHECK(std::abs(v1 - v2) / std::abs(v2) < 1e-6);
}

TEST_CASE("steady state: unique attractor and cross-checks") {
  HilbertSpace s({2});
  double gamma = 1e6;
  Mat sm = Mat::Zero(2, 2);
  sm(0, 1) = 1.0;
  LindbladGenerator decay(Operator{s, Mat::Zero(2, 2)}, {{Operator{s, sm}, gamma}});
  auto res = steady_state(decay, 30.0 / gamma, 1e-9);
  CHECK(res.converged);
  CHECK(res.rho.m(0, 0).real() > 1.0 - 1e-6);  // ground-state fidelity

  double kappa = kTwoPi * 0.068e6;
  auto driven = cavity_generator(kappa, 0.6 * kappa, 0.0, 0.0, 9);
  auto ss = steady_state(driven, 40.0 / kappa, 1e-8);
  CHECK(ss.converged);
  Operator a = fock_annihilation(9);
  Operator n_op = a.adjoint() * a;
  double n_ss = expectation(ss.rho, n_op).real();
  double n_evolved =
      expectation(evolve(driven, vacuum(HilbertSpace({10})), 10.0 / kappa, 0.02 / kappa), n_op)
          .real();
  CHECK(std::abs(n_ss - n_evolved) < 1e-4);

  // detuned drive: Lorentzian oracle eta^2/(kappa^2 + Delta^2)
  auto detuned = cavity_generator(kappa, kappa, kappa, 0.0, 9);
  auto ss2 = steady_state(detuned, 40.0 / kappa, 1e-9);
  CHECK(expectation(ss2.rho, n_op).real() == doctest::Approx(0.5).epsilon(0.01));

  LindbladGenerator no_decay(Operator{s, Mat::Zero(2, 2)}, {});
  CHECK_THROWS_AS(steady_state(no_decay, 1.0, 1e-6), std::invalid_argument);
}

TEST_CASE("hermiticity and positivity along an evolution") {
  double kappa = kTwoPi * 0.068e6;
  auto gen = cavity_generator(kappa, kappa, 0.2 * kappa, 0.3 * kappa, 9);
  DensityMatrix rho = vacuum(HilbertSpace({10}));
  double step = 0.02 / kappa;
  for (int chunk = 0; chunk < 5; ++chunk) {
    rho = evolve(gen, rho, 1.0 / kappa, step);
    CHECK(rho.hermiticity_error() <= 1e-10);
    CHECK(rho.trace_error() <= 1e-8);
    CHECK(rho.min_eigenvalue() >= -1e-8);
  }
}
