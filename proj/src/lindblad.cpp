#include "ioncav/lindblad.hpp"

#include <cmath>
#include <stdexcept>

namespace ioncav {

void LindbladGenerator::Triplets::add(int r, int c, Cx v) {
  row.push_back(r);
  col.push_back(c);
  val.push_back(v);
}

LindbladGenerator::Triplets LindbladGenerator::Triplets::from(const Mat& m, double drop) {
  Triplets t;
  for (int c = 0; c < m.cols(); ++c)
    for (int r = 0; r < m.rows(); ++r)
      if (std::abs(m(r, c)) > drop) t.add(r, c, m(r, c));
  return t;
}

LindbladGenerator::Triplets LindbladGenerator::Triplets::adjoint() const {
  Triplets t;
  for (size_t i = 0; i < val.size(); ++i) t.add(col[i], row[i], std::conj(val[i]));
  return t;
}

void LindbladGenerator::add_left(Mat& acc, Cx w, const Triplets& t, const Mat& rho) {
  // (T rho)(r, :) += v * rho(c, :)
  for (size_t i = 0; i < t.val.size(); ++i)
    acc.row(t.row[i]) += (w * t.val[i]) * rho.row(t.col[i]);
}

void LindbladGenerator::add_right(Mat& acc, Cx w, const Triplets& t, const Mat& rho) {
  // (rho T)(:, c) += v * rho(:, r)
  for (size_t i = 0; i < t.val.size(); ++i)
    acc.col(t.col[i]) += (w * t.val[i]) * rho.col(t.row[i]);
}

Mat LindbladGenerator::sandwich(const Triplets& l, const Mat& rho, const Triplets& r, int n) {
  Mat tmp = Mat::Zero(n, n);
  add_left(tmp, 1.0, l, rho);
  Mat out = Mat::Zero(n, n);
  add_right(out, 1.0, r, tmp);
  return out;
}

LindbladGenerator::LindbladGenerator(Operator hamiltonian, std::vector<CollapseChannel> channels,
                                     double incoherent_rate, Operator incoherent_mode)
    : h_(std::move(hamiltonian)),
      channels_(std::move(channels)),
      delta_n_(incoherent_rate),
      mode_(std::move(incoherent_mode)) {
  if (!h_.is_hermitian())
    throw std::invalid_argument("LindbladGenerator: Hamiltonian not Hermitian");
  if (delta_n_ < 0) throw std::invalid_argument("LindbladGenerator: incoherent rate < 0");
  for (const auto& c : channels_) {
    if (c.rate < 0) throw std::invalid_argument("LindbladGenerator: channel rate < 0");
    if (c.op.space != h_.space)
      throw std::invalid_argument("LindbladGenerator: channel space mismatch");
  }
  if (delta_n_ > 0 && mode_.space != h_.space)
    throw std::invalid_argument("LindbladGenerator: incoherent mode space mismatch");

  for (int i = 0; i < h_.m.rows(); ++i)
    f_max_ = std::max(f_max_, std::abs(h_.m(i, i)));

  h_t_ = Triplets::from(h_.m, 0.0);
  for (const auto& c : channels_) {
    ChannelT ct;
    ct.l = Triplets::from(c.op.m);
    ct.ldag = ct.l.adjoint();
    ct.ldagl = Triplets::from((c.op.m.adjoint() * c.op.m).eval(), 1e-300);
    ct.rate = c.rate;
    ch_t_.push_back(std::move(ct));
  }
  if (delta_n_ > 0) {
    a_t_ = Triplets::from(mode_.m);
    adag_t_ = a_t_.adjoint();
    Mat nsum = mode_.m.adjoint() * mode_.m + mode_.m * mode_.m.adjoint();
    nsum_t_ = Triplets::from(nsum, 1e-300);
  }
}

double LindbladGenerator::default_step() const {
  double s = 1e-9;
  if (f_max_ > 0) s = std::min(s, 0.02 / f_max_);
  return s;
}

double LindbladGenerator::min_channel_rate() const {
  double r = 0.0;
  for (const auto& c : channels_)
    if (c.rate > 0 && (r == 0.0 || c.rate < r)) r = c.rate;
  return r;
}

Mat LindbladGenerator::rhs(const Mat& rho) const {
  const int n = int(rho.rows());
  Mat acc = Mat::Zero(n, n);
  add_left(acc, -kI, h_t_, rho);
  add_right(acc, kI, h_t_, rho);
  for (const auto& ct : ch_t_) {
    if (ct.rate == 0.0) continue;
    acc += ct.rate * sandwich(ct.l, rho, ct.ldag, n);
    add_left(acc, -0.5 * ct.rate, ct.ldagl, rho);
    add_right(acc, -0.5 * ct.rate, ct.ldagl, rho);
  }
  if (delta_n_ > 0) {
    // dn([[a,rho],a+] + [[a+,rho],a]) = dn(2 a rho a+ + 2 a+ rho a - {a+a + a a+, rho})
    acc += (2.0 * delta_n_) * sandwich(a_t_, rho, adag_t_, n);
    acc += (2.0 * delta_n_) * sandwich(adag_t_, rho, a_t_, n);
    add_left(acc, -delta_n_, nsum_t_, rho);
    add_right(acc, -delta_n_, nsum_t_, rho);
  }
  return acc;
}

Mat lindblad_rhs(const LindbladGenerator& gen, const DensityMatrix& rho) {
  if (rho.space != gen.space())
    throw std::invalid_argument("lindblad_rhs: space mismatch");
  return gen.rhs(rho.m);
}

DensityMatrix evolve(const LindbladGenerator& gen, const DensityMatrix& rho0,
                     double duration, double step) {
  if (rho0.space != gen.space()) throw std::invalid_argument("evolve: space mismatch");
  if (duration < 0) throw std::invalid_argument("evolve: negative duration");
  if (step <= 0) throw std::invalid_argument("evolve: step must be > 0");
  if (gen.max_diag_frequency() > 0 && step > 0.05 / gen.max_diag_frequency())
    throw std::invalid_argument("evolve: step too large for fastest Hamiltonian scale");

  Mat rho = rho0.m;
  const int n = int(rho.rows());
  Mat k1(n, n), k2(n, n), k3(n, n), k4(n, n), tmp(n, n);
  double t = 0.0;
  while (t < duration) {
    double h = std::min(step, duration - t);
    k1 = gen.rhs(rho);
    tmp = rho + (0.5 * h) * k1;
    k2 = gen.rhs(tmp);
    tmp = rho + (0.5 * h) * k2;
    k3 = gen.rhs(tmp);
    tmp = rho + h * k3;
    k4 = gen.rhs(tmp);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  DensityMatrix out{rho0.space, std::move(rho)};
  out.validate();
  return out;
}

DensityMatrix evolve(const LindbladGenerator& gen, const DensityMatrix& rho0, double duration) {
  return evolve(gen, rho0, duration, gen.default_step());
}

SteadyStateResult steady_state(const LindbladGenerator& gen, double horizon, double settle_tol,
                               const DensityMatrix* start) {
  double r_min = gen.min_channel_rate();
  if (r_min <= 0.0)
    throw std::invalid_argument("steady_state: generator has no decay channel");
  double probe = 1.0 / r_min;

  int d = gen.space().dim();
  DensityMatrix rho = start ? *start
                            : DensityMatrix{gen.space(), Mat::Identity(d, d) / double(d)};

  SteadyStateResult res;
  double t = 0.0;
  while (t < horizon) {
    double dt = std::min(probe, horizon - t);
    DensityMatrix next = evolve(gen, rho, dt);
    res.residual = max_abs(next.m - rho.m);
    rho = std::move(next);
    t += dt;
    if (dt >= probe && res.residual < settle_tol) {
      res.converged = true;
      break;
    }
  }
  res.rho = std::move(rho);
  res.time_reached = t;
  return res;
}

}  // namespace ioncav
