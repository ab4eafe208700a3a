#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "ioncav/core.hpp"
#include "ioncav/rng.hpp"
#include "oracles.hpp"

using namespace ioncav;

TEST_CASE("fock annihilation entries") {
  Operator a1 = fock_annihilation(1);
  CHECK(a1.m(0, 1) == Cx(1.0));
  CHECK(a1.m(1, 0) == Cx(0.0));
  CHECK(a1.m(0, 0) == Cx(0.0));
  CHECK(a1.m(1, 1) == Cx(0.0));

  Operator a9 = fock_annihilation(9);
  CHECK(a9.m(8, 9).real() == doctest::Approx(3.0).epsilon(1e-15));

  // number operator via direct multiplication
  Mat n_op = a9.m.adjoint() * a9.m;
  for (int n = 0; n <= 9; ++n) CHECK(n_op(n, n).real() == doctest::Approx(double(n)));

  CHECK_THROWS_AS(fock_annihilation(0), std::invalid_argument);
}

TEST_CASE("truncated commutator [a, a+] = I with -n_max corner") {
  int n_max = 9;
  Operator a = fock_annihilation(n_max);
  Mat comm = a.m * a.m.adjoint() - a.m.adjoint() * a.m;
  // diagonal entries are built from sqrt(n)^2, exact only to the ulp
  for (int n = 0; n < n_max; ++n)
    CHECK(comm(n, n).real() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(comm(n_max, n_max).real() == doctest::Approx(double(-n_max)).epsilon(1e-14));
  for (int i = 0; i <= n_max; ++i)
    for (int j = 0; j <= n_max; ++j) {
      CHECK(comm(i, j).imag() == 0.0);
      if (i != j) CHECK(comm(i, j) == Cx(0.0));
    }
}

TEST_CASE("atomic operators: projectors and adjoints") {
  Operator proj_d = atomic_operator(Level::D, Level::D);
  CHECK(proj_d.m(1, 1) == Cx(1.0));
  CHECK(proj_d.m.cwiseAbs().sum() == doctest::Approx(1.0));

  Operator sig_pd = atomic_operator(Level::D, Level::P);  // |P><D|
  Operator sig_dp = atomic_operator(Level::P, Level::D);  // |D><P|
  CHECK(max_abs(sig_pd.m.adjoint() - sig_dp.m) == 0.0);

  // sigma_SD sigma_DS = |S><S|
  Operator sd = atomic_operator(Level::D, Level::S);  // |S><D|
  Operator ds = atomic_operator(Level::S, Level::D);  // |D><S|
  Mat prod = sd.m * ds.m;
  Mat proj_s = atomic_operator(Level::S, Level::S).m;
  CHECK(max_abs(prod - proj_s) == 0.0);
}

TEST_CASE("embed: identity, commuting factors, trace scaling") {
  HilbertSpace s({4, 10});
  Operator id4 = identity(HilbertSpace({4}));
  Operator e = embed(s, id4, 0);
  CHECK(max_abs(e.m - Mat::Identity(40, 40)) == 0.0);

  Operator a = embed(s, fock_annihilation(9), 1);
  Operator sd = embed(s, atomic_operator(Level::D, Level::D), 0);
  CHECK(max_abs(a.m * sd.m - sd.m * a.m) == 0.0);

  // trace(embed(X)) = trace(X) * dim of the other factor
  Mat x = Mat::Random(4, 4);
  Operator ox{HilbertSpace({4}), x};
  CHECK(std::abs(embed(s, ox, 0).m.trace() - x.trace() * 10.0) < 1e-12);

  CHECK_THROWS_AS(embed(s, fock_annihilation(3), 1), std::invalid_argument);
  CHECK_THROWS_AS(embed(s, id4, 2), std::invalid_argument);
}

TEST_CASE("embed is multiplicative on a factor") {
  HilbertSpace s({3, 5});
  Mat x = Mat::Random(5, 5), y = Mat::Random(5, 5);
  Operator ox{HilbertSpace({5}), x}, oy{HilbertSpace({5}), y};
  Mat lhs = embed(s, Operator{HilbertSpace({5}), x * y}, 1).m;
  Mat rhs = embed(s, ox, 1).m * embed(s, oy, 1).m;
  CHECK(max_abs(lhs - rhs) < 1e-13);
}

TEST_CASE("partial trace against brute-force contraction") {
  CounterRng rng(42);
  int dA = 3, dB = 4;
  Mat m = Mat::Zero(dA * dB, dA * dB);
  for (int i = 0; i < dA * dB; ++i)
    for (int j = 0; j < dA * dB; ++j) m(i, j) = Cx(rng.uniform() - 0.5, rng.uniform() - 0.5);
  m = (m * m.adjoint()).eval();
  m /= m.trace();

  DensityMatrix rho{HilbertSpace({dA, dB}), m};
  CHECK(max_abs(partial_trace(rho, 0).m - oracles::partial_trace_keep_first(m, dA, dB)) < 1e-14);
  CHECK(max_abs(partial_trace(rho, 1).m - oracles::partial_trace_keep_second(m, dA, dB)) < 1e-14);

  // trace preservation
  CHECK(std::abs(partial_trace(rho, 0).m.trace() - m.trace()) < 1e-12);

  // product state: keep A -> rho_A
  Mat ra = Mat::Random(dA, dA);
  ra = (ra * ra.adjoint()).eval();
  ra /= ra.trace();
  Mat rb = Mat::Random(dB, dB);
  rb = (rb * rb.adjoint()).eval();
  rb /= rb.trace();
  Operator oa{HilbertSpace({dA}), ra}, ob{HilbertSpace({dB}), rb};
  DensityMatrix prod{HilbertSpace({dA, dB}), tensor(oa, ob).m};
  CHECK(max_abs(partial_trace(prod, 0).m - ra) < 1e-13);

  // maximally entangled two-qubit state reduces to I/2
  Mat bell = Mat::Zero(4, 4);
  bell(0, 0) = bell(0, 3) = bell(3, 0) = bell(3, 3) = 0.5;
  DensityMatrix rb2{HilbertSpace({2, 2}), bell};
  CHECK(max_abs(partial_trace(rb2, 0).m - Mat::Identity(2, 2) * 0.5) < 1e-14);
  CHECK(max_abs(partial_trace(rb2, 1).m - Mat::Identity(2, 2) * 0.5) < 1e-14);

  CHECK_THROWS_AS(partial_trace(rho, 2), std::invalid_argument);
}

TEST_CASE("partial trace respects embedded observables") {
  // Tr_B[(A x I) rho] = A Tr_B[rho] only when A acts on the kept factor
  CounterRng rng(7);
  int dA = 3, dB = 3;
  Mat m = Mat::Zero(dA * dB, dA * dB);
  for (int i = 0; i < dA * dB; ++i)
    for (int j = 0; j < dA * dB; ++j) m(i, j) = Cx(rng.uniform() - 0.5, rng.uniform() - 0.5);
  m = (m * m.adjoint()).eval();
  m /= m.trace();
  HilbertSpace s({dA, dB});
  Mat a = Mat::Random(dA, dA);
  Operator oa{HilbertSpace({dA}), a};
  Mat lhs = oracles::partial_trace_keep_first((embed(s, oa, 0).m * m).eval(), dA, dB);
  Mat rhs = a * oracles::partial_trace_keep_first(m, dA, dB);
  CHECK(max_abs(lhs - rhs) < 1e-13);
}

TEST_CASE("expectation values") {
  HilbertSpace s({10});
  Operator a = fock_annihilation(9);
  Operator n_op = a.adjoint() * a;

  Mat vac = Mat::Zero(10, 10);
  vac(0, 0) = 1.0;
  CHECK(std::abs(expectation({s, vac}, n_op)) < 1e-15);

  Mat f3 = Mat::Zero(10, 10);
  f3(3, 3) = 1.0;
  CHECK(expectation({s, f3}, n_op).real() == doctest::Approx(3.0));

  // coherent state |alpha|^2 = 0.5 within truncation error
  Mat coh = oracles::coherent_state(Cx(std::sqrt(0.5), 0.0), 9);
  CHECK(expectation({s, coh}, n_op).real() == doctest::Approx(0.5).epsilon(1e-5));

  Mat other = Mat::Zero(4, 4);
  CHECK_THROWS_AS(expectation(DensityMatrix{HilbertSpace({4}), other}, n_op),
                  std::invalid_argument);
}

TEST_CASE("density matrix invariants") {
  HilbertSpace s({4});
  Mat good = Mat::Zero(4, 4);
  good(0, 0) = 0.25;
  good(1, 1) = 0.75;
  CHECK_NOTHROW(DensityMatrix(s, good).validate());

  Mat bad_trace = good * 1.5;
  CHECK_THROWS_AS(DensityMatrix(s, bad_trace).validate(), std::runtime_error);

  Mat bad_herm = good;
  bad_herm(0, 1) = Cx(0.0, 1e-6);
  CHECK_THROWS_AS(DensityMatrix(s, bad_herm).validate(), std::runtime_error);

  Mat bad_pos = Mat::Zero(4, 4);
  bad_pos(0, 0) = 1.1;
  bad_pos(1, 1) = -0.1;
  CHECK_THROWS_AS(DensityMatrix(s, bad_pos).validate(), std::runtime_error);
}

TEST_CASE("Jacobi eigenvalues match Eigen's solver") {
  CounterRng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    int n = 8 + 8 * trial;
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = Cx(rng.uniform() - 0.5, rng.uniform() - 0.5);
    m = (0.5 * (m + m.adjoint())).eval();
    RVec mine = hermitian_eigenvalues(m);
    Eigen::SelfAdjointEigenSolver<Mat> ref(m);
    for (int i = 0; i < n; ++i)
      CHECK(mine(i) == doctest::Approx(ref.eigenvalues()(i)).epsilon(1e-10));
  }
}

TEST_CASE("counter rng: determinism and stream independence") {
  CounterRng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  CounterRng s1 = CounterRng(9).stream(1);
  CounterRng s2 = CounterRng(9).stream(2);
  CHECK(s1.next_u64() != s2.next_u64());

  // binomial edge cases
  CounterRng r(5);
  CHECK(r.binomial(250, 0.0) == 0);
  CHECK(r.binomial(250, 1.0) == 250);
}
