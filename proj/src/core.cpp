#include "ioncav/core.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ioncav {

HilbertSpace::HilbertSpace(std::vector<int> d) : dims(std::move(d)) {
  if (dims.empty()) throw std::invalid_argument("HilbertSpace: no factors");
  for (int d0 : dims)
    if (d0 < 1) throw std::invalid_argument("HilbertSpace: dims must be >= 1");
}

int HilbertSpace::dim() const {
  int n = 1;
  for (int d : dims) n *= d;
  return n;
}

Operator::Operator(HilbertSpace s, Mat mat) : space(std::move(s)), m(std::move(mat)) {
  if (m.rows() != m.cols() || m.rows() != space.dim())
    throw std::invalid_argument("Operator: matrix size does not match space");
}

bool Operator::is_hermitian(double tol) const {
  return max_abs(m - m.adjoint()) <= tol;
}

static void check_same_space(const HilbertSpace& a, const HilbertSpace& b, const char* who) {
  if (a != b) throw std::invalid_argument(std::string(who) + ": space mismatch");
}

Operator operator+(const Operator& a, const Operator& b) {
  check_same_space(a.space, b.space, "operator+");
  return {a.space, a.m + b.m};
}
Operator operator-(const Operator& a, const Operator& b) {
  check_same_space(a.space, b.space, "operator-");
  return {a.space, a.m - b.m};
}
Operator operator*(const Operator& a, const Operator& b) {
  check_same_space(a.space, b.space, "operator*");
  return {a.space, a.m * b.m};
}
Operator operator*(Cx s, const Operator& a) { return {a.space, s * a.m}; }
Operator operator*(double s, const Operator& a) { return {a.space, s * a.m}; }

DensityMatrix::DensityMatrix(HilbertSpace s, Mat mat) : space(std::move(s)), m(std::move(mat)) {
  if (m.rows() != m.cols() || m.rows() != space.dim())
    throw std::invalid_argument("DensityMatrix: matrix size does not match space");
}

double DensityMatrix::hermiticity_error() const { return max_abs(m - m.adjoint()); }

double DensityMatrix::min_eigenvalue() const {
  Mat h = 0.5 * (m + m.adjoint());
  RVec ev = hermitian_eigenvalues(h);
  return ev(0);
}

void DensityMatrix::validate() const {
  std::ostringstream err;
  if (hermiticity_error() > kHermTol)
    err << "hermiticity error " << hermiticity_error() << " > " << kHermTol << "; ";
  if (trace_error() > kTraceTol)
    err << "trace error " << trace_error() << " > " << kTraceTol << "; ";
  double lam = min_eigenvalue();
  if (lam < kEigTol) err << "min eigenvalue " << lam << " < " << kEigTol << "; ";
  if (!err.str().empty())
    throw std::runtime_error("DensityMatrix invariant violation: " + err.str());
}

Operator fock_annihilation(int n_max) {
  if (n_max < 1) throw std::invalid_argument("fock_annihilation: n_max must be >= 1");
  int d = n_max + 1;
  Mat a = Mat::Zero(d, d);
  for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(double(n));
  return {HilbertSpace({d}), std::move(a)};
}

Operator atomic_operator(Level from, Level to) {
  int f = static_cast<int>(from), t = static_cast<int>(to);
  if (f < 0 || f >= kAtomDim || t < 0 || t >= kAtomDim)
    throw std::invalid_argument("atomic_operator: unknown level id");
  Mat m = Mat::Zero(kAtomDim, kAtomDim);
  m(t, f) = 1.0;
  return {HilbertSpace({kAtomDim}), std::move(m)};
}

Operator identity(const HilbertSpace& s) {
  return {s, Mat::Identity(s.dim(), s.dim())};
}

Operator tensor(const Operator& a, const Operator& b) {
  std::vector<int> dims = a.space.dims;
  dims.insert(dims.end(), b.space.dims.begin(), b.space.dims.end());
  int ra = int(a.m.rows()), rb = int(b.m.rows());
  Mat k(ra * rb, ra * rb);
  for (int i = 0; i < ra; ++i)
    for (int j = 0; j < ra; ++j) k.block(i * rb, j * rb, rb, rb) = a.m(i, j) * b.m;
  return {HilbertSpace(dims), std::move(k)};
}

Operator embed(const HilbertSpace& space, const Operator& op, int subsystem_index) {
  if (subsystem_index < 0 || subsystem_index >= space.factors())
    throw std::invalid_argument("embed: subsystem index out of range");
  if (op.space.dim() != space.dims[subsystem_index])
    throw std::invalid_argument("embed: operator dimension mismatch");
  Operator out = (subsystem_index == 0)
                     ? Operator{HilbertSpace({op.space.dim()}), op.m}
                     : identity(HilbertSpace({space.dims[0]}));
  for (int k = 1; k < space.factors(); ++k) {
    Operator fac = (k == subsystem_index)
                       ? Operator{HilbertSpace({op.space.dim()}), op.m}
                       : identity(HilbertSpace({space.dims[k]}));
    out = tensor(out, fac);
  }
  out.space = space;
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, int keep) {
  if (rho.space.factors() != 2)
    throw std::invalid_argument("partial_trace: two-factor spaces only");
  if (keep != 0 && keep != 1)
    throw std::invalid_argument("partial_trace: index out of range");
  int dA = rho.space.dims[0], dB = rho.space.dims[1];
  if (keep == 0) {
    Mat r = Mat::Zero(dA, dA);
    for (int i = 0; i < dA; ++i)
      for (int j = 0; j < dA; ++j)
        for (int b = 0; b < dB; ++b) r(i, j) += rho.m(i * dB + b, j * dB + b);
    return {HilbertSpace({dA}), std::move(r)};
  }
  Mat r = Mat::Zero(dB, dB);
  for (int a = 0; a < dB; ++a)
    for (int b = 0; b < dB; ++b)
      for (int i = 0; i < dA; ++i) r(a, b) += rho.m(i * dB + a, i * dB + b);
  return {HilbertSpace({dB}), std::move(r)};
}

Cx expectation(const DensityMatrix& rho, const Operator& op) {
  check_same_space(rho.space, op.space, "expectation");
  return (rho.m * op.m).trace();
}

// Cyclic Jacobi for Hermitian matrices. Rotations are built from the
// complex off-diagonal element's phase plus a real Givens angle.
RVec hermitian_eigenvalues(const Mat& a_in, double tol, int max_sweeps) {
  Mat a = 0.5 * (a_in + a_in.adjoint());
  const int n = int(a.rows());
  double scale = max_abs(a);
  if (scale == 0.0) return RVec::Zero(n);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
    if (off <= tol * scale) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        Cx apq = a(p, q);
        double mag = std::abs(apq);
        if (mag <= 1e-3 * tol * scale) continue;
        Cx phase = apq / mag;
        double app = a(p, p).real(), aqq = a(q, q).real();
        double tau = (aqq - app) / (2.0 * mag);
        double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = t * c;
        // Columns: [vp, vq] <- [c*vp - conj(s*phase)*vq ... ] via two-sided update
        Cx sp = s * phase;
        for (int k = 0; k < n; ++k) {
          Cx akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - std::conj(sp) * akq;
          a(k, q) = sp * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          Cx apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sp * aqk;
          a(q, k) = std::conj(sp) * apk + c * aqk;
        }
      }
    }
  }
  RVec ev(n);
  for (int i = 0; i < n; ++i) ev(i) = a(i, i).real();
  std::sort(ev.data(), ev.data() + n);
  return ev;
}

double max_abs(const Mat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace ioncav
