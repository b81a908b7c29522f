#pragma once

#include "gtgda/types.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

namespace gtgda {

/// Kronecker product A ⊗ B.
template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> kron(const Eigen::MatrixBase<DerivedA>& a,
                                       const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  Matrix<Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Block-diagonal matrix diag(M_1, ..., M_n).
template <typename Scalar>
Matrix<Scalar> block_diag(const std::vector<Matrix<Scalar>>& blocks) {
  Index rows = 0;
  Index cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Matrix<Scalar> out = Matrix<Scalar>::Zero(rows, cols);
  Index r = 0;
  Index c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

/// (1/n) 1 1ᵀ, the limit of W^k for a primitive doubly-stochastic W.
template <typename Scalar>
Matrix<Scalar> averaging_matrix(Index n) {
  return Matrix<Scalar>::Constant(n, n, Scalar(1) / Scalar(n));
}

template <typename Derived>
typename Derived::Scalar spectral_norm(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  if (m.size() == 0) return Scalar(0);
  Eigen::JacobiSVD<Matrix<Scalar>> svd(m.eval());
  return svd.singularValues()(0);
}

template <typename Derived>
typename Derived::Scalar symmetric_min_eigenvalue(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(m.eval(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

template <typename Derived>
Matrix<typename Derived::Scalar> symmetrized(const Eigen::MatrixBase<Derived>& m) {
  return m + m.transpose();
}

/// Row-major flattening of an n×p block matrix into the stacked vector
/// [row_1; row_2; ...; row_n], matching the W ⊗ I_p ordering.
template <typename Derived>
Vector<typename Derived::Scalar> stack_rows(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Vector<Scalar> out(m.size());
  for (Index i = 0; i < m.rows(); ++i) out.segment(i * m.cols(), m.cols()) = m.row(i).transpose();
  return out;
}

template <typename Scalar>
std::vector<std::complex<Scalar>> eigenvalues(const Matrix<Scalar>& m) {
  Eigen::EigenSolver<Matrix<Scalar>> es(m, false);
  if (es.info() != Eigen::Success) throw NumericFailure("dense eigensolve failed", 0);
  std::vector<std::complex<Scalar>> out(es.eigenvalues().data(),
                                        es.eigenvalues().data() + es.eigenvalues().size());
  return out;
}

}  // namespace gtgda
