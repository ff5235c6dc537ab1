#pragma once

// Dense complex linear algebra for small Hilbert spaces (dims up to a few
// hundred): Hermitian eigendecomposition, matrix exponentials, and
// Heisenberg-picture operators. Everything here is a pure function of its
// inputs and safe to call concurrently.

#include <cmath>
#include <utility>

#include "cqc/common.hpp"

namespace cqc {

inline constexpr double kHermitianTol = 1e-12;

// State of the collapsing system. Amplitudes may be unnormalized: the CSL
// evolution deliberately changes the norm, which carries the measure weight.
struct StateVector {
  Vector amps;

  StateVector() = default;
  explicit StateVector(Vector a) : amps(std::move(a)) {}

  int dim() const { return static_cast<int>(amps.size()); }
  double norm2() const { return amps.squaredNorm(); }

  bool is_normalized(double tol = 1e-12) const {
    return std::abs(norm2() - 1.0) < tol;
  }

  StateVector normalized() const {
    double n2 = norm2();
    require(n2 > 0.0 && std::isfinite(n2), "StateVector: cannot normalize, squared norm is " + std::to_string(n2));
    return StateVector(amps / std::sqrt(n2));
  }
};

inline double hermiticity_defect(const Matrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline void require_hermitian(const Matrix& m, const char* what,
                              double tol = kHermitianTol) {
  require(m.rows() == m.cols(), std::string(what) + ": matrix is not square");
  double defect = hermiticity_defect(m);
  require(defect < tol, std::string(what) + ": matrix is not Hermitian (defect " +
                            std::to_string(defect) + ")");
}

inline void require_same_dim(const Matrix& a, const Matrix& b, const char* what) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          std::string(what) + ": dimension mismatch");
}

// H = vectors * diag(values) * vectors^dagger, eigenvalues ascending.
struct EigenSystem {
  RealVector values;
  Matrix vectors;
};

inline EigenSystem eig_hermitian(const Matrix& h) {
  require_hermitian(h, "eig_hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  require_numeric(solver.info() == Eigen::Success, "eig_hermitian: solver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

// exp(z*h) for Hermitian h through the eigendecomposition.
inline Matrix expm_hermitian(const Matrix& h, Complex z) {
  EigenSystem es = eig_hermitian(h);
  Vector phases(es.values.size());
  for (Eigen::Index i = 0; i < es.values.size(); ++i)
    phases[i] = std::exp(z * es.values[i]);
  return es.vectors * phases.asDiagonal() * es.vectors.adjoint();
}

inline Matrix expm_hermitian(const EigenSystem& es, Complex z) {
  Vector phases(es.values.size());
  for (Eigen::Index i = 0; i < es.values.size(); ++i)
    phases[i] = std::exp(z * es.values[i]);
  return es.vectors * phases.asDiagonal() * es.vectors.adjoint();
}

namespace detail {

inline double one_norm(const Matrix& m) {
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

}  // namespace detail

// exp(z*m) for a general (possibly non-normal) matrix by Pade-13 scaling and
// squaring. Accuracy is ~1e-14 relative for ||z*m||_1 up to a few tens; the
// overflow guard refuses inputs whose exponential cannot be represented
// rather than returning saturated garbage.
inline Matrix expm_scaled(const Matrix& m, Complex z) {
  require(m.rows() == m.cols(), "expm_scaled: matrix is not square");
  require(m.allFinite(), "expm_scaled: matrix has non-finite entries");

  const Eigen::Index n = m.rows();
  Matrix a = z * m;
  const double norm = detail::one_norm(a);
  require_numeric(norm < 300.0,
                  "expm_scaled: ||z*M|| = " + std::to_string(norm) +
                      " too large, exponential would overflow");

  // Pade-13 coefficients (Higham 2005).
  static const double b[14] = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
      1187353796428800.0,  129060195264000.0,   10559470521600.0,
      670442572800.0,      33522128640.0,       1323241920.0,
      40840800.0,          960960.0,            16380.0,
      182.0,               1.0};
  const double theta13 = 5.371920351148152;

  int squarings = 0;
  if (norm > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
    a /= std::pow(2.0, squarings);
  }

  const Matrix ident = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a2 * a4;

  Matrix u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 +
                  b[5] * a4 + b[3] * a2 + b[1] * ident);
  Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 +
             b[4] * a4 + b[2] * a2 + b[0] * ident;

  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) r = r * r;
  return r;
}

// A(t) = exp(i*H*t) A exp(-i*H*t). Preserves the spectrum of A.
inline Matrix heisenberg_op(const Matrix& a, const Matrix& h, double t) {
  require_hermitian(a, "heisenberg_op(A)");
  require_hermitian(h, "heisenberg_op(H)");
  require_same_dim(a, h, "heisenberg_op");
  EigenSystem es = eig_hermitian(h);
  Matrix u = expm_hermitian(es, kImag * t);
  return u * a * u.adjoint();
}

}  // namespace cqc
