#pragma once

// Fixed-size complex matrix arithmetic for the two- and three-level systems.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace canonform {

using Complex = std::complex<double>;

template <int N>
concept SupportedDim = (N == 2 || N == 3);

template <int N>
  requires SupportedDim<N>
using ComplexMatrix = Eigen::Matrix<Complex, N, N>;

/// Raised when a value fails a structural invariant at construction.
class InvariantViolation : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when the Hermitian eigensolver does not converge.
class EigendecompositionFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kStructuralTolerance = 1e-12;

template <int N>
ComplexMatrix<N> identity() {
  return ComplexMatrix<N>::Identity();
}

template <int N>
ComplexMatrix<N> multiply(const ComplexMatrix<N>& a, const ComplexMatrix<N>& b) {
  return a * b;
}

template <int N>
ComplexMatrix<N> adjoint(const ComplexMatrix<N>& a) {
  return a.adjoint();
}

template <int N>
double frobenius_norm(const ComplexMatrix<N>& a) {
  return a.norm();
}

template <int N>
double frobenius_distance(const ComplexMatrix<N>& a, const ComplexMatrix<N>& b) {
  return (a - b).norm();
}

template <int N>
Complex determinant(const ComplexMatrix<N>& a) {
  return a.determinant();
}

template <int N>
Complex trace(const ComplexMatrix<N>& a) {
  return a.trace();
}

template <int N>
bool all_finite(const ComplexMatrix<N>& a) {
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      if (!std::isfinite(a(i, j).real()) || !std::isfinite(a(i, j).imag())) return false;
  return true;
}

/// ‖M†M − I‖_F
template <int N>
double unitarity_error(const ComplexMatrix<N>& m) {
  return (m.adjoint() * m - identity<N>()).norm();
}

/// ‖M − M†‖_F
template <int N>
double hermiticity_error(const ComplexMatrix<N>& m) {
  return (m - m.adjoint()).norm();
}

/// Special-unitary matrix. Validated eagerly; never projected.
template <int N>
  requires SupportedDim<N>
class UnitaryMatrix {
public:
  /// Throws InvariantViolation unless ‖M†M − I‖_F ≤ tolerance·N and
  /// |det M − 1| ≤ tolerance.
  static UnitaryMatrix make(const ComplexMatrix<N>& m,
                            double tolerance = kStructuralTolerance) {
    if (!all_finite(m)) throw InvariantViolation("unitary matrix has non-finite entries");
    const double unit_err = unitarity_error(m);
    if (!(unit_err <= tolerance * N))
      throw InvariantViolation("matrix is not unitary: |U^dag U - I|_F = " +
                               std::to_string(unit_err));
    const double det_err = std::abs(m.determinant() - 1.0);
    if (!(det_err <= tolerance))
      throw InvariantViolation("unitary matrix does not have unit determinant: |det U - 1| = " +
                               std::to_string(det_err));
    return UnitaryMatrix(m);
  }

  const ComplexMatrix<N>& matrix() const noexcept { return m_; }
  Complex operator()(int row, int col) const { return m_(row, col); }

private:
  explicit UnitaryMatrix(const ComplexMatrix<N>& m) : m_(m) {}
  ComplexMatrix<N> m_;
};

/// Traceless Hermitian generator H ∈ H₀(n; ℂ).
template <int N>
  requires SupportedDim<N>
class HermitianTraceless {
public:
  static HermitianTraceless make(const ComplexMatrix<N>& m,
                                 double tolerance = kStructuralTolerance) {
    if (!all_finite(m)) throw InvariantViolation("hamiltonian has non-finite entries");
    const double herm_err = hermiticity_error(m);
    if (!(herm_err <= tolerance))
      throw InvariantViolation("matrix is not Hermitian: |H - H^dag|_F = " +
                               std::to_string(herm_err));
    const double tr = std::abs(m.trace());
    if (!(tr <= tolerance))
      throw InvariantViolation("matrix is not traceless: |tr H| = " + std::to_string(tr));
    return HermitianTraceless(m);
  }

  static HermitianTraceless zero() { return HermitianTraceless(ComplexMatrix<N>::Zero()); }

  const ComplexMatrix<N>& matrix() const noexcept { return m_; }
  Complex operator()(int row, int col) const { return m_(row, col); }

private:
  explicit HermitianTraceless(const ComplexMatrix<N>& m) : m_(m) {}
  ComplexMatrix<N> m_;
};

/// exp(−i·t·H) through the eigendecomposition H = W Λ W†.
template <int N>
UnitaryMatrix<N> hermitian_expm(const HermitianTraceless<N>& h, double t) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix<N>> solver(h.matrix());
  if (solver.info() != Eigen::Success)
    throw EigendecompositionFailure("Hermitian eigendecomposition did not converge");
  const auto& w = solver.eigenvectors();
  Eigen::Matrix<Complex, N, 1> phases;
  for (int k = 0; k < N; ++k) phases(k) = std::exp(Complex(0.0, -t * solver.eigenvalues()(k)));
  const ComplexMatrix<N> u = w * phases.asDiagonal() * w.adjoint();
  return UnitaryMatrix<N>::make(u);
}

}  // namespace canonform
