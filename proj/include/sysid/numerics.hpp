#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "sysid/types.hpp"

namespace sysid {

// Relative rank tolerance for positive-definite solves: a Gram matrix with
// min_eig <= kGramRankTolerance * spectral_norm is treated as singular.
inline constexpr double kGramRankTolerance = 1e-10;

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* who) {
  if (!m.allFinite()) {
    throw ShapeError(std::string(who) + ": matrix has non-finite entries");
  }
}

// Symmetry check: absolute 1e-12 at unit scale, relative above it so that
// exactly symmetrized large-magnitude matrices are not rejected.
template <typename Derived>
void require_symmetric(const Eigen::MatrixBase<Derived>& m, const char* who) {
  if (m.rows() != m.cols()) {
    throw ShapeError(std::string(who) + ": matrix is not square");
  }
  const double scale = std::max(1.0, static_cast<double>(m.cwiseAbs().maxCoeff()));
  const double asym =
      static_cast<double>((m.derived() - m.derived().transpose()).cwiseAbs().maxCoeff());
  if (asym > 1e-12 * scale) {
    throw ShapeError(std::string(who) + ": matrix is asymmetric beyond tolerance");
  }
}

}  // namespace detail

// Largest singular value. Jacobi SVD keeps the relative error near machine
// precision for the dense sizes this library targets.
template <typename Derived>
typename Derived::RealScalar spectral_norm(const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw ShapeError("spectral_norm: empty matrix");
  }
  detail::require_finite(m, "spectral_norm");
  using Plain = DenseMatrix<typename Derived::Scalar>;
  Eigen::JacobiSVD<Plain> svd(m.derived());
  return svd.singularValues()(0);
}

// Smallest eigenvalue of a symmetric matrix (symmetric-aware solver; the
// input must be symmetric to 1e-12 elementwise at unit scale).
template <typename Derived>
typename Derived::RealScalar min_eig_sym(const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() == 0) {
    throw ShapeError("min_eig_sym: empty matrix");
  }
  detail::require_finite(m, "min_eig_sym");
  detail::require_symmetric(m, "min_eig_sym");
  using Plain = DenseMatrix<typename Derived::Scalar>;
  Eigen::SelfAdjointEigenSolver<Plain> es(m.derived(), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

// Solve g * S = rhs for symmetric positive definite g. Cholesky plus
// iterative refinement until the residual is below 1e-9 * ||rhs||, which
// leaves margin under the 1e-8 contract even near the rank tolerance.
template <typename DerivedG, typename DerivedR>
DenseMatrix<typename DerivedG::Scalar> solve_spd(const Eigen::MatrixBase<DerivedG>& g_in,
                                                 const Eigen::MatrixBase<DerivedR>& rhs_in) {
  using Scalar = typename DerivedG::Scalar;
  using Plain = DenseMatrix<Scalar>;

  Plain g = g_in.derived();
  Plain rhs = rhs_in.derived();
  if (g.rows() == 0) {
    throw ShapeError("solve_spd: empty matrix");
  }
  detail::require_finite(g, "solve_spd");
  detail::require_symmetric(g, "solve_spd");
  if (rhs.rows() != g.rows()) {
    throw ShapeError("solve_spd: rhs row count does not match g");
  }

  Eigen::SelfAdjointEigenSolver<Plain> es(g, Eigen::EigenvaluesOnly);
  const double lo = static_cast<double>(es.eigenvalues()(0));
  const double hi = static_cast<double>(es.eigenvalues()(g.rows() - 1));
  const double norm = std::max(std::abs(lo), std::abs(hi));
  if (!(lo > kGramRankTolerance * norm)) {
    throw SingularGramError("solve_spd: matrix singular or indefinite at tolerance (min eig " +
                                std::to_string(lo) + ", spectral norm " + std::to_string(norm) + ")",
                            lo, g.cols());
  }

  Eigen::LLT<Plain> llt(g);
  if (llt.info() != Eigen::Success) {
    throw SingularGramError("solve_spd: Cholesky factorization failed", lo, g.cols());
  }
  Plain x = llt.solve(rhs);
  const double rhs_norm = rhs.norm();
  if (rhs_norm > 0) {
    for (int iter = 0; iter < 3; ++iter) {
      Plain resid = rhs - g * x;
      if (resid.norm() <= 1e-9 * rhs_norm) break;
      x += llt.solve(resid);
    }
  }
  return x;
}

}  // namespace sysid
