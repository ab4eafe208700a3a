#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace ioncav {

struct NelderMeadOptions {
  int max_iterations = 200;
  double f_spread_tol = 1e-6;      // stop when max-min objective over vertices is below
  double x_spread_tol = 1e-4;      // ... and relative parameter spread is below
  double initial_step = 0.35;      // simplex edge along each coordinate
  // standard coefficients: reflection, expansion, contraction, shrink
  double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Downhill simplex minimization.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0,
                             const NelderMeadOptions& opt = NelderMeadOptions{});

struct BrentResult {
  double x = 0.0;
  double f = 0.0;
  int evaluations = 0;
};

/// Golden-section / parabolic 1-D minimization on [a, b].
BrentResult brent_minimize(const std::function<double(double)>& f, double a, double b,
                           double xtol, int max_iter = 120);

}  // namespace ioncav
