#pragma once

#include <Eigen/Dense>

#include "kaflab/errors.hpp"

namespace kaflab {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Largest r*r (rows of the lexicographic K operator) accepted by default.
inline constexpr Index kDefaultKCap = 10'000;

/// Dense real symmetric matrix. Symmetry is exact: the constructor mirrors
/// (A + A^T) / 2 after checking the input is symmetric to rounding.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& a);

  static SymMatrix identity(Index n);
  static SymMatrix diagonal(const Vector& d);
  static SymMatrix zero(Index n);

  Index dim() const noexcept { return m_.rows(); }
  double operator()(Index i, Index j) const { return m_(i, j); }
  const Matrix& matrix() const noexcept { return m_; }

 private:
  Matrix m_;
};

struct EigDecomposition {
  Vector values;   // ascending
  Matrix vectors;  // orthonormal columns
};

EigDecomposition sym_eig(const SymMatrix& a);

struct PdSqrt {
  SymMatrix sqrt;
  SymMatrix inv_sqrt;
};

/// Symmetric PD square root and its inverse. Throws NotPositiveDefinite when
/// the smallest eigenvalue is at or below 1e-12 * (largest eigenvalue).
PdSqrt pd_sqrt(const SymMatrix& a);

/// Relative eigenvalue floor used by pd_sqrt and the Gram factorization.
inline constexpr double kPdFloor = 1e-12;

Matrix kron(const Matrix& a, const Matrix& b);

/// Maximum eigenvalue modulus. Symmetric inputs use the self-adjoint solver.
double spectral_radius(const Matrix& a);
double spectral_radius(const SymMatrix& a);

/// Column-stacked (lexicographic) vectorization.
Vector vec_lex(const Matrix& c);
Vector vec_lex(const SymMatrix& c);
Matrix unvec_lex_general(const Vector& v, Index dim);
SymMatrix unvec_lex(const Vector& v, Index dim);

}  // namespace kaflab
