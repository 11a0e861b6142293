#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dsh {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Double-precision workhorses used by the IO layer and the CLI.
using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

// Input data contains NaN/Inf or violates a documented data invariant.
struct InvalidDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A kernel width could not be estimated (all samples coincide).
struct DegenerateKernelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A linear system in a closed-form update is numerically singular.
struct SingularSystemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File format or filesystem failure during (de)serialization.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sign convention used everywhere: sgn(0) = +1.
template <typename Scalar>
inline Scalar sign_plus(Scalar x) {
  return x >= Scalar(0) ? Scalar(1) : Scalar(-1);
}

template <typename Derived>
MatrixX<typename Derived::Scalar> sign_matrix(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return x.unaryExpr([](S v) { return sign_plus(v); });
}

// Checks a c x n category-membership matrix: entries in {0,1}, every sample
// carries at least one active label.
template <typename Derived>
void validate_label_matrix(const Eigen::MatrixBase<Derived>& labels) {
  using S = typename Derived::Scalar;
  if (labels.rows() < 1 || labels.cols() < 1)
    throw std::invalid_argument("label matrix is empty");
  for (Index j = 0; j < labels.cols(); ++j) {
    S active = S(0);
    for (Index i = 0; i < labels.rows(); ++i) {
      const S v = labels(i, j);
      if (v != S(0) && v != S(1))
        throw InvalidDataError("label matrix entry (" + std::to_string(i) + "," +
                               std::to_string(j) + ") is not 0/1");
      active += v;
    }
    if (active == S(0))
      throw InvalidDataError("sample " + std::to_string(j) + " has no active label");
  }
}

// Solves A X = R for symmetric positive (semi)definite A. The ridge terms of
// the block updates keep A well conditioned for lambda > 0; a residual check
// catches the lambda = 0 rank-deficient case.
template <typename Scalar>
MatrixX<Scalar> solve_spd(const MatrixX<Scalar>& a, const MatrixX<Scalar>& rhs) {
  if (a.rows() != a.cols() || a.rows() != rhs.rows())
    throw std::invalid_argument("solve_spd: dimension mismatch");
  Eigen::LDLT<MatrixX<Scalar>> ldlt(a);
  // LDLT pseudo-inverts near-zero pivots, so rank deficiency must be caught
  // from the pivots themselves; the residual check backstops everything else.
  const auto pivots = ldlt.vectorD().cwiseAbs().eval();
  const Scalar pivot_max = pivots.maxCoeff();
  constexpr Scalar eps = std::numeric_limits<Scalar>::epsilon();
  if (!(pivots.minCoeff() > pivot_max * eps * Scalar(a.rows())))
    throw SingularSystemError("solve_spd: system is numerically singular");
  MatrixX<Scalar> x = ldlt.solve(rhs);
  if (!x.allFinite())
    throw SingularSystemError("solve_spd: system is numerically singular");
  const Scalar scale = a.norm() * x.norm() + rhs.norm();
  const Scalar residual = (a * x - rhs).norm();
  if (residual > std::sqrt(eps) * scale + std::numeric_limits<Scalar>::min())
    throw SingularSystemError("solve_spd: residual " + std::to_string(double(residual)) +
                              " indicates a singular system");
  return x;
}

}  // namespace dsh
