#pragma once

// Test-only oracles, kept independent of the library code paths they check.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace oracles {

using Cx = std::complex<double>;
using Mat = Eigen::MatrixXcd;

// Brute-force partial trace by explicit index contraction.
inline Mat partial_trace_keep_first(const Mat& rho, int dA, int dB) {
  Mat r = Mat::Zero(dA, dA);
  for (int i = 0; i < dA; ++i)
    for (int j = 0; j < dA; ++j)
      for (int b = 0; b < dB; ++b) r(i, j) += rho(i * dB + b, j * dB + b);
  return r;
}
inline Mat partial_trace_keep_second(const Mat& rho, int dA, int dB) {
  Mat r = Mat::Zero(dB, dB);
  for (int a = 0; a < dB; ++a)
    for (int b = 0; b < dB; ++b)
      for (int i = 0; i < dA; ++i) r(a, b) += rho(i * dB + a, i * dB + b);
  return r;
}

// Coherent-state density matrix from the displacement series, truncated.
inline Mat coherent_state(Cx alpha, int n_max) {
  Eigen::VectorXcd amp(n_max + 1);
  double lognorm = -0.5 * std::norm(alpha);
  Cx term = std::exp(Cx(lognorm, 0.0));
  for (int n = 0; n <= n_max; ++n) {
    amp(n) = term;
    term *= alpha / std::sqrt(double(n + 1));
  }
  return amp * amp.adjoint();
}

// Bose-Einstein (geometric) photon distribution.
inline std::vector<double> bose_einstein(double n_bar, int n_max) {
  std::vector<double> p(n_max + 1);
  for (int n = 0; n <= n_max; ++n)
    p[n] = std::pow(n_bar / (1.0 + n_bar), n) / (1.0 + n_bar);
  return p;
}

// Truncated, renormalized Poisson distribution.
inline std::vector<double> poisson(double lambda, int n_max) {
  std::vector<double> p(n_max + 1);
  double t = std::exp(-lambda), s = 0;
  for (int n = 0; n <= n_max; ++n) {
    p[n] = t;
    s += t;
    t *= lambda / double(n + 1);
  }
  for (auto& v : p) v /= s;
  return p;
}

inline double mean_of(const std::vector<double>& p) {
  double m = 0;
  for (size_t n = 0; n < p.size(); ++n) m += double(n) * p[n];
  return m;
}

}  // namespace oracles
