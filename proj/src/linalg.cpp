#include "kaflab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace kaflab {

SymMatrix::SymMatrix(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("SymMatrix: input is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-9 * scale)) {
    std::ostringstream os;
    os << "SymMatrix: input not symmetric (max |a - a^T| = " << asym << ")";
    throw DimensionError(os.str());
  }
  m_ = 0.5 * (a + a.transpose());
}

SymMatrix SymMatrix::identity(Index n) { return SymMatrix(Matrix::Identity(n, n)); }
SymMatrix SymMatrix::diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }
SymMatrix SymMatrix::zero(Index n) { return SymMatrix(Matrix::Zero(n, n)); }

EigDecomposition sym_eig(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix());
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("sym_eig: self-adjoint solver did not converge",
                           std::numeric_limits<double>::infinity());
  }
  EigDecomposition out{solver.eigenvalues(), solver.eigenvectors()};
  const Matrix recon = out.vectors * out.values.asDiagonal() * out.vectors.transpose();
  const double norm = std::max(a.matrix().norm(), std::numeric_limits<double>::min());
  const double residual = (recon - a.matrix()).norm() / norm;
  if (!(residual < 1e-10)) {
    throw ConvergenceError("sym_eig: reconstruction residual too large", residual);
  }
  return out;
}

PdSqrt pd_sqrt(const SymMatrix& a) {
  const EigDecomposition e = sym_eig(a);
  const double lmax = e.values(e.values.size() - 1);
  const double lmin = e.values(0);
  if (!(lmax > 0.0) || !(lmin > kPdFloor * lmax)) {
    std::ostringstream os;
    os << "matrix is not positive definite: smallest eigenvalue " << lmin
       << " (largest " << lmax << ")";
    throw NotPositiveDefinite(os.str(), lmin);
  }
  const Vector s = e.values.cwiseSqrt();
  const Matrix& v = e.vectors;
  return {SymMatrix(v * s.asDiagonal() * v.transpose()),
          SymMatrix(v * s.cwiseInverse().asDiagonal() * v.transpose())};
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

double spectral_radius(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.matrix(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("spectral_radius: self-adjoint solver did not converge",
                           std::numeric_limits<double>::infinity());
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_radius(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("spectral_radius: matrix not square");
  if (a.size() == 0) return 0.0;
  if (a == a.transpose()) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
      throw ConvergenceError("spectral_radius: self-adjoint solver did not converge",
                             std::numeric_limits<double>::infinity());
    }
    return solver.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::EigenSolver<Matrix> solver(a, false);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("spectral_radius: eigen solver did not converge",
                           std::numeric_limits<double>::infinity());
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Vector vec_lex(const Matrix& c) {
  return Eigen::Map<const Vector>(c.data(), c.size());
}

Vector vec_lex(const SymMatrix& c) { return vec_lex(c.matrix()); }

Matrix unvec_lex_general(const Vector& v, Index dim) {
  if (v.size() != dim * dim) {
    throw DimensionError("unvec_lex: length " + std::to_string(v.size()) + " != " +
                         std::to_string(dim) + "^2");
  }
  return Eigen::Map<const Matrix>(v.data(), dim, dim);
}

SymMatrix unvec_lex(const Vector& v, Index dim) { return SymMatrix(unvec_lex_general(v, dim)); }

}  // namespace kaflab
