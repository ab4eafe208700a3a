#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace ioncav {

using Cx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr Cx kI{0.0, 1.0};

// Tolerances for density-matrix sanity checks (one order looser than
// accumulated RK4 roundoff at the default step).
inline constexpr double kHermTol = 1e-10;
inline constexpr double kTraceTol = 1e-8;
inline constexpr double kEigTol = -1e-8;

/// Composite Hilbert space as an ordered list of factor dimensions.
/// The ordering is fixed for the lifetime of every operator built on it.
struct HilbertSpace {
  std::vector<int> dims;

  HilbertSpace() = default;
  explicit HilbertSpace(std::vector<int> d);

  int dim() const;
  int factors() const { return static_cast<int>(dims.size()); }
  bool operator==(const HilbertSpace& o) const { return dims == o.dims; }
  bool operator!=(const HilbertSpace& o) const { return !(*this == o); }
};

/// Dense operator on a composite Hilbert space.
struct Operator {
  HilbertSpace space;
  Mat m;

  Operator() = default;
  Operator(HilbertSpace s, Mat mat);

  Operator adjoint() const { return {space, m.adjoint()}; }
  bool is_hermitian(double tol = kHermTol) const;
};

Operator operator+(const Operator& a, const Operator& b);
Operator operator-(const Operator& a, const Operator& b);
Operator operator*(const Operator& a, const Operator& b);
Operator operator*(Cx s, const Operator& a);
Operator operator*(double s, const Operator& a);

/// Density matrix; validate() enforces Hermiticity, unit trace and
/// positivity at the module tolerances.
struct DensityMatrix {
  HilbertSpace space;
  Mat m;

  DensityMatrix() = default;
  DensityMatrix(HilbertSpace s, Mat mat);

  double trace_error() const { return std::abs(m.trace() - Cx(1.0)); }
  double hermiticity_error() const;
  double min_eigenvalue() const;
  void validate() const;  // throws std::runtime_error on violation
};

// Atomic basis used throughout: {S, D, P, S'} (or {S, D', P', S'} for the
// second transition; same slots, different rates).
enum class Level : int { S = 0, D = 1, P = 2, Sprime = 3 };
inline constexpr int kAtomDim = 4;

/// Truncated Fock-space annihilation operator, a[n-1, n] = sqrt(n).
Operator fock_annihilation(int n_max);

/// |to><from| on the 4-dimensional atomic factor.
Operator atomic_operator(Level from, Level to);

Operator identity(const HilbertSpace& s);

/// Kronecker product; the result lives on the concatenated space.
Operator tensor(const Operator& a, const Operator& b);

/// Operator on factor `subsystem_index` tensored with identities elsewhere.
Operator embed(const HilbertSpace& space, const Operator& op, int subsystem_index);

/// Reduced density matrix on the kept factor (two-factor spaces only).
DensityMatrix partial_trace(const DensityMatrix& rho, int keep);

/// Tr(rho * op).
Cx expectation(const DensityMatrix& rho, const Operator& op);

/// Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations,
/// ascending order.
RVec hermitian_eigenvalues(const Mat& a, double tol = 1e-14, int max_sweeps = 50);

double max_abs(const Mat& m);

}  // namespace ioncav
