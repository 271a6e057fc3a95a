#pragma once

// Dense small-matrix linear algebra shared by the rest of the library.
// Every function is pure; matrices are small (d <= ~30) and stored densely.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>

#include "klbss/error.hpp"
#include "klbss/index_set.hpp"

namespace klbss {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Pivots below this fraction of the largest diagonal entry are treated as singular.
inline constexpr double kPivotTolerance = 1e-12;

inline Matrix submatrix(const Matrix& m, const IndexSet& rows, const IndexSet& cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
  return out;
}

inline Matrix submatrix(const Matrix& m, const IndexSet& idx) { return submatrix(m, idx, idx); }

inline Vector subvector(const Vector& v, const IndexSet& idx) {
  Vector out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out(i) = v(idx[i]);
  return out;
}

inline Matrix columns(const Matrix& m, const IndexSet& cols) {
  Matrix out(m.rows(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(j) = m.col(cols[j]);
  return out;
}

inline bool is_symmetric(const Matrix& m, double tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

/// Unit lower-triangular factor and pivot sequence with sigma = L diag(D) L^T.
struct LdlFactor {
  Matrix lower;
  Vector diag;

  Matrix reconstruct() const { return lower * diag.asDiagonal() * lower.transpose(); }
};

namespace detail {

// Pivot-free LDL^T. Returns the index of the first failing pivot, or -1 on success.
// A pivot fails when it is <= floor; pass floor = 0 for a plain positivity check.
inline long ldl_in_place(const Matrix& a, LdlFactor& f, double floor) {
  const Eigen::Index n = a.rows();
  f.lower = Matrix::Identity(n, n);
  f.diag = Vector::Zero(n);
  Vector scaled(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    // scaled = D_{<k} * L_{k,<k}^T, so column k below the pivot is one matrix-vector product.
    scaled.head(k) = f.diag.head(k).cwiseProduct(f.lower.row(k).head(k).transpose());
    const double dk = a(k, k) - f.lower.row(k).head(k).dot(scaled.head(k));
    if (!(dk > floor)) return static_cast<long>(k);
    f.diag(k) = dk;
    const Eigen::Index rest = n - k - 1;
    if (rest > 0) {
      f.lower.col(k).tail(rest) = a.col(k).tail(rest);
      f.lower.col(k).tail(rest).noalias() -= f.lower.bottomLeftCorner(rest, k) * scaled.head(k);
      f.lower.col(k).tail(rest) /= dk;
    }
  }
  return -1;
}

inline double pivot_floor(const Matrix& a) {
  return a.rows() == 0 ? 0.0 : kPivotTolerance * a.diagonal().cwiseAbs().maxCoeff();
}

}  // namespace detail

/// LDL^T factorization of a positive-definite matrix.
inline LdlFactor ldl_decompose(const Matrix& sigma) {
  if (sigma.rows() != sigma.cols()) throw DimensionMismatch("ldl_decompose needs a square matrix");
  LdlFactor f;
  if (long bad = detail::ldl_in_place(sigma, f, 0.0); bad >= 0)
    throw NotPositiveDefinite("pivot " + std::to_string(bad) + " is not positive");
  return f;
}

/// Solves L D L^T x = rhs for every column of rhs.
inline Matrix ldl_solve(const LdlFactor& f, const Matrix& rhs) {
  Matrix x = f.lower.triangularView<Eigen::UnitLower>().solve(rhs);
  for (Eigen::Index i = 0; i < x.rows(); ++i) x.row(i) /= f.diag(i);
  return f.lower.transpose().triangularView<Eigen::UnitUpper>().solve(x);
}

/// Solves a @ x = rhs for symmetric positive-definite `a`, raising `Err` when a pivot
/// drops below kPivotTolerance times the largest diagonal entry.
template <class Err>
Matrix solve_spd(const Matrix& a, const Matrix& rhs, const char* what) {
  if (a.rows() != a.cols() || a.rows() != rhs.rows()) throw DimensionMismatch(what);
  if (a.rows() == 0) return Matrix(0, rhs.cols());
  LdlFactor f;
  if (long bad = detail::ldl_in_place(a, f, detail::pivot_floor(a)); bad >= 0)
    throw Err(std::string(what) + ": pivot " + std::to_string(bad) + " below tolerance");
  return ldl_solve(f, rhs);
}

/// Sigma_{ab} - Sigma_{at} Sigma_{tt}^{-1} Sigma_{tb}.
inline Matrix conditional_cross_covariance(const Matrix& sigma, const IndexSet& a, const IndexSet& b,
                                           const IndexSet& t) {
  Matrix out = submatrix(sigma, a, b);
  if (t.empty() || a.empty() || b.empty()) return out;
  const Matrix coef = solve_spd<SingularConditioning>(submatrix(sigma, t), submatrix(sigma, t, b),
                                                      "conditioning block");
  out.noalias() -= submatrix(sigma, a, t) * coef;
  return out;
}

/// Covariance of X_s given X_t (Schur complement); Sigma_ss when t is empty.
inline Matrix conditional_covariance(const Matrix& sigma, const IndexSet& s, const IndexSet& t) {
  if (t.empty()) return submatrix(sigma, s);
  Matrix out = conditional_cross_covariance(sigma, s, s, t);
  return 0.5 * (out + out.transpose());
}

inline double min_eigenvalue(const Matrix& sigma) {
  if (sigma.rows() == 0) throw DimensionMismatch("min_eigenvalue of an empty matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

inline double max_eigenvalue(const Matrix& sigma) {
  if (sigma.rows() == 0) throw DimensionMismatch("max_eigenvalue of an empty matrix");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

/// Least-squares coefficients of `response` on the columns of `design`.
inline Vector ols_fit(const Matrix& design, const Vector& response) {
  if (design.rows() != response.size()) throw DimensionMismatch("ols_fit: row count differs from response length");
  if (design.cols() > design.rows()) throw RankDeficient("more columns than rows");
  const Matrix gram = design.transpose() * design;
  return solve_spd<RankDeficient>(gram, design.transpose() * response, "ols_fit Gram matrix");
}

/// Squared norm of the residual after projecting `response` off the column span of `design`.
inline double residual_sq_norm(const Matrix& design, const Vector& response) {
  if (design.cols() == 0) return response.squaredNorm();
  if (design.rows() <= design.cols()) throw RankDeficient("residual_sq_norm needs n > k");
  const Vector coef = ols_fit(design, response);
  return (response - design * coef).squaredNorm();
}

}  // namespace klbss
