#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "entdepth/error.hpp"

namespace entdepth {

template <typename Scalar>
struct Eigenpair {
  using RealScalar = typename Eigen::NumTraits<Scalar>::Real;
  RealScalar value{};
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> vector;
  RealScalar residual{};
};

// Residual bound for ||(H - lambda) x||, relative to max(1, ||H||_max).
inline constexpr double kEigenResidualTol = 1e-10;

// Smallest eigenpair of a dense self-adjoint matrix.
template <typename Derived>
Eigenpair<typename Derived::Scalar> smallest_eigenpair(const Eigen::MatrixBase<Derived>& h) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h.derived());
  if (solver.info() != Eigen::Success) throw NumericalError("eigensolver did not converge");
  Eigenpair<Scalar> pair;
  pair.value = solver.eigenvalues()(0);
  pair.vector = solver.eigenvectors().col(0);
  pair.residual = (h * pair.vector - pair.value * pair.vector).norm();
  const auto scale = std::max<typename Eigenpair<Scalar>::RealScalar>(1, h.cwiseAbs().maxCoeff());
  if (!(pair.residual < kEigenResidualTol * scale)) {
    throw NumericalError("eigenpair residual " + std::to_string(double(pair.residual)) +
                         " exceeds tolerance");
  }
  return pair;
}

// Smallest eigenpair of the real symmetric tridiagonal matrix with the given
// diagonal and first sub-diagonal. Eigenvalue from implicit QL, vector from
// shifted inverse iteration (the shifted matrix is positive definite, so the
// elimination needs no pivoting).
template <typename Scalar>
Eigenpair<Scalar> smallest_eigenpair_tridiagonal(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& diag,
                                                 const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& sub) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using std::abs;
  using std::max;
  using std::sqrt;
  const Eigen::Index dim = diag.size();
  Eigenpair<Scalar> pair;
  if (dim == 1) {
    pair.value = diag(0);
    pair.vector = Vector::Ones(1);
    pair.residual = 0;
    return pair;
  }

  Eigen::SelfAdjointEigenSolver<Matrix> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("tridiagonal eigensolver did not converge");
  const Scalar lambda = solver.eigenvalues()(0);

  Scalar scale = 1;
  for (Eigen::Index i = 0; i < dim; ++i) scale = max(scale, abs(diag(i)));
  for (Eigen::Index i = 0; i + 1 < dim; ++i) scale = max(scale, abs(sub(i)));

  auto apply = [&](const Vector& x) {
    Vector y = diag.cwiseProduct(x);
    y.head(dim - 1) += sub.cwiseProduct(x.tail(dim - 1));
    y.tail(dim - 1) += sub.cwiseProduct(x.head(dim - 1));
    return y;
  };

  const Scalar shift = lambda - Scalar(1e-9) * scale;
  Vector x = Vector::Ones(dim) / sqrt(Scalar(dim));
  Vector pivot(dim);
  for (int iter = 0; iter < 4; ++iter) {
    // Forward elimination of (T - shift) y = x, then back substitution.
    Vector rhs = x;
    pivot(0) = diag(0) - shift;
    for (Eigen::Index i = 1; i < dim; ++i) {
      const Scalar factor = sub(i - 1) / pivot(i - 1);
      pivot(i) = diag(i) - shift - factor * sub(i - 1);
      rhs(i) -= factor * rhs(i - 1);
    }
    x(dim - 1) = rhs(dim - 1) / pivot(dim - 1);
    for (Eigen::Index i = dim - 2; i >= 0; --i) {
      x(i) = (rhs(i) - sub(i) * x(i + 1)) / pivot(i);
    }
    x.normalize();
  }

  // Fix the sign so the largest-magnitude component is positive.
  Eigen::Index arg = 0;
  x.cwiseAbs().maxCoeff(&arg);
  if (x(arg) < 0) x = -x;

  const Vector hx = apply(x);
  pair.value = x.dot(hx);
  pair.vector = x;
  pair.residual = (hx - pair.value * x).norm();
  if (!(pair.residual < Scalar(kEigenResidualTol) * scale)) {
    throw NumericalError("tridiagonal eigenpair residual exceeds tolerance");
  }
  return pair;
}

}  // namespace entdepth
