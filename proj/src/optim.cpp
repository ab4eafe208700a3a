#include "ioncav/optim.hpp"

#include <algorithm>
#include <cmath>

namespace ioncav {

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const NelderMeadOptions& opt) {
  const int n = int(x0.size());
  NelderMeadResult res;

  std::vector<Eigen::VectorXd> xs(n + 1, x0);
  std::vector<double> fs(n + 1);
  for (int i = 1; i <= n; ++i) xs[i](i - 1) += opt.initial_step;
  for (int i = 0; i <= n; ++i) fs[i] = f(xs[i]);
  res.evaluations = n + 1;

  auto order = [&]() {
    std::vector<int> idx(n + 1);
    for (int i = 0; i <= n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
    std::vector<Eigen::VectorXd> xs2(n + 1);
    std::vector<double> fs2(n + 1);
    for (int i = 0; i <= n; ++i) {
      xs2[i] = xs[idx[i]];
      fs2[i] = fs[idx[i]];
    }
    xs.swap(xs2);
    fs.swap(fs2);
  };

  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    order();
    double fspread = fs[n] - fs[0];
    double xspread = 0.0;
    for (int i = 1; i <= n; ++i)
      for (int j = 0; j < n; ++j)
        xspread = std::max(xspread, std::abs(xs[i](j) - xs[0](j)) /
                                        std::max(1.0, std::abs(xs[0](j))));
    if (fspread < opt.f_spread_tol && xspread < opt.x_spread_tol) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += xs[i];
    centroid /= double(n);

    Eigen::VectorXd xr = centroid + opt.alpha * (centroid - xs[n]);
    double fr = f(xr);
    ++res.evaluations;
    if (fr < fs[0]) {
      Eigen::VectorXd xe = centroid + opt.gamma * (xr - centroid);
      double fe = f(xe);
      ++res.evaluations;
      if (fe < fr) {
        xs[n] = xe;
        fs[n] = fe;
      } else {
        xs[n] = xr;
        fs[n] = fr;
      }
      continue;
    }
    if (fr < fs[n - 1]) {
      xs[n] = xr;
      fs[n] = fr;
      continue;
    }
    Eigen::VectorXd xc = centroid + opt.rho * (xs[n] - centroid);
    double fc = f(xc);
    ++res.evaluations;
    if (fc < fs[n]) {
      xs[n] = xc;
      fs[n] = fc;
      continue;
    }
    for (int i = 1; i <= n; ++i) {
      xs[i] = xs[0] + opt.sigma * (xs[i] - xs[0]);
      fs[i] = f(xs[i]);
      ++res.evaluations;
    }
  }
  order();
  res.x = xs[0];
  res.f = fs[0];
  return res;
}

BrentResult brent_minimize(const std::function<double(double)>& f, double a, double b,
                           double xtol, int max_iter) {
  const double gold = 0.3819660112501051;
  double x, w, v, fx, fw, fv;
  double d = 0.0, e = 0.0;
  x = w = v = a + gold * (b - a);
  fx = fw = fv = f(x);
  BrentResult res;
  res.evaluations = 1;
  for (int it = 0; it < max_iter; ++it) {
    double m = 0.5 * (a + b);
    double tol1 = xtol * std::abs(x) + 1e-300;
    double tol2 = 2.0 * tol1;
    if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) break;
    bool parabolic = false;
    if (std::abs(e) > tol1) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double pp = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) pp = -pp;
      q = std::abs(q);
      double etmp = e;
      e = d;
      if (std::abs(pp) < std::abs(0.5 * q * etmp) && pp > q * (a - x) && pp < q * (b - x)) {
        d = pp / q;
        double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (m > x) ? tol1 : -tol1;
        parabolic = true;
      }
    }
    if (!parabolic) {
      e = (x < m) ? b - x : a - x;
      d = gold * e;
    }
    double u = (std::abs(d) >= tol1) ? x + d : x + ((d > 0) ? tol1 : -tol1);
    double fu = f(u);
    ++res.evaluations;
    if (fu <= fx) {
      if (u < x)
        b = x;
      else
        a = x;
      v = w;
      fv = fw;
      w = x;
      fw = fx;
      x = u;
      fx = fu;
    } else {
      if (u < x)
        a = u;
      else
        b = u;
      if (fu <= fw || w == x) {
        v = w;
        fv = fw;
        w = u;
        fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u;
        fv = fu;
      }
    }
  }
  res.x = x;
  res.f = fx;
  return res;
}

}  // namespace ioncav
