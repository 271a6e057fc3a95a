#pragma once

// Coefficient spaces with a magnitude floor and the constrained quadratic
// projection min_{gamma in Theta_R} (gamma_hat - gamma)^T M (gamma_hat - gamma).

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "klbss/covkit.hpp"
#include "klbss/error.hpp"

namespace klbss {

struct QpSolution {
  Vector minimizer;
  double value = 0.0;
  std::vector<int> active_pattern;  // +1 / -1 per coordinate
};

namespace detail {

// min (z - c)^T m (z - c) subject to z >= 0, for PSD m. Lawson-Hanson style
// active set: grow the passive set by the most violated KKT multiplier, step
// back toward feasibility whenever the face solution leaves the orthant.
inline Vector nonnegative_qp(const Matrix& m, const Vector& c) {
  const Eigen::Index r = c.size();
  const Vector mc = m * c;
  const double scale = std::max({1.0, m.cwiseAbs().maxCoeff(), c.cwiseAbs().maxCoeff()});
  const double tol = 1e-10 * scale * scale;
  Vector z = Vector::Zero(r);
  std::vector<bool> passive(static_cast<std::size_t>(r), false);
  std::vector<bool> rejected(static_cast<std::size_t>(r), false);

  auto face_solve = [&](const std::vector<Eigen::Index>& idx) {
    const auto k = static_cast<Eigen::Index>(idx.size());
    Matrix a(k, k);
    Vector b(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      b(i) = mc(idx[i]);
      for (Eigen::Index j = 0; j < k; ++j) a(i, j) = m(idx[i], idx[j]);
    }
    return Vector(Eigen::CompleteOrthogonalDecomposition<Matrix>(a).solve(b));
  };

  const int max_outer = 8 * static_cast<int>(r) + 8;
  for (int outer = 0; outer < max_outer; ++outer) {
    const Vector w = mc - m * z;  // negative gradient
    Eigen::Index pick = -1;
    double best = tol;
    for (Eigen::Index i = 0; i < r; ++i) {
      if (passive[i] || rejected[i]) continue;
      if (w(i) > best) {
        best = w(i);
        pick = i;
      }
    }
    if (pick < 0) break;
    passive[pick] = true;
    std::fill(rejected.begin(), rejected.end(), false);

    for (int inner = 0; inner <= static_cast<int>(r); ++inner) {
      std::vector<Eigen::Index> idx;
      for (Eigen::Index i = 0; i < r; ++i)
        if (passive[i]) idx.push_back(i);
      if (idx.empty()) break;
      const Vector y = face_solve(idx);
      bool interior = true;
      for (Eigen::Index i = 0; i < y.size(); ++i) interior = interior && y(i) > 0.0;
      if (interior) {
        z.setZero();
        for (std::size_t i = 0; i < idx.size(); ++i) z(idx[i]) = y(static_cast<Eigen::Index>(i));
        break;
      }
      double step = 1.0;
      for (std::size_t i = 0; i < idx.size(); ++i) {
        const double yi = y(static_cast<Eigen::Index>(i));
        const double zi = z(idx[i]);
        if (yi <= 0.0) step = std::min(step, zi / (zi - yi));
      }
      for (std::size_t i = 0; i < idx.size(); ++i) {
        double& zi = z(idx[i]);
        zi += step * (y(static_cast<Eigen::Index>(i)) - zi);
        if (zi <= 1e-14 * scale) {
          zi = 0.0;
          passive[idx[i]] = false;
        }
      }
      if (!passive[pick]) rejected[pick] = true;
    }
  }
  return z;
}

inline double quad_gap(const Vector& a, const Vector& b, const Matrix& m) {
  const Vector diff = a - b;
  return std::max(0.0, diff.dot(m * diff));
}

}  // namespace detail

/// Global minimum of (gamma_hat - gamma)^T m (gamma_hat - gamma) over |gamma_j| >= beta_min.
/// Sign patterns are enumerated lexicographically with + before -; the first best wins.
inline QpSolution project_magnitude_floor(const Vector& gamma_hat, const Matrix& m, double beta_min) {
  const Eigen::Index r = gamma_hat.size();
  if (m.rows() != r || m.cols() != r) throw DimensionMismatch("project_qp: M must be r x r");
  if (!(beta_min >= 0.0) || !std::isfinite(beta_min)) throw DimensionMismatch("project_qp: beta_min must be finite and >= 0");

  QpSolution out;
  out.minimizer = gamma_hat;
  out.active_pattern.assign(static_cast<std::size_t>(r), 1);
  for (Eigen::Index j = 0; j < r; ++j)
    if (gamma_hat(j) < 0.0) out.active_pattern[j] = -1;
  if (r == 0 || beta_min == 0.0 || gamma_hat.cwiseAbs().minCoeff() >= beta_min) return out;

  out.value = std::numeric_limits<double>::infinity();
  const std::size_t patterns = std::size_t{1} << r;
  Vector sign(r);
  Matrix m_signed(r, r);
  for (std::size_t p = 0; p < patterns; ++p) {
    for (Eigen::Index j = 0; j < r; ++j) sign(j) = ((p >> (r - 1 - j)) & 1U) ? -1.0 : 1.0;
    m_signed = sign.asDiagonal() * m * sign.asDiagonal();
    const Vector c = sign.cwiseProduct(gamma_hat).array() - beta_min;
    const Vector z = detail::nonnegative_qp(m_signed, c);
    const Vector gamma = sign.cwiseProduct((z.array() + beta_min).matrix());
    const double value = detail::quad_gap(gamma_hat, gamma, m);
    if (p == 0 || value < out.value - 1e-12 * std::max(1.0, out.value)) {
      out.value = value;
      out.minimizer = gamma;
      for (Eigen::Index j = 0; j < r; ++j) out.active_pattern[j] = sign(j) > 0 ? 1 : -1;
    }
  }
  return out;
}

/// Anything that can test membership of a coefficient vector and project onto itself
/// in a quadratic norm.
template <class T>
concept CoefficientSpace = requires(const T& t, const Vector& v, const Matrix& m) {
  { t.feasible(v) } -> std::convertible_to<bool>;
  { t.project(v, m) } -> std::same_as<QpSolution>;
};

/// Sparsity plus beta-min constraints. Restricted to an index set R the space is
/// { gamma in R^|R| : |gamma_j| >= beta_min }.
struct ThetaSpec {
  enum class Sparsity { exact, upper_bound };

  std::size_t d = 0;
  std::size_t sparsity = 0;
  Sparsity mode = Sparsity::exact;
  double beta_min = 0.0;

  bool feasible(const Vector& gamma, double slack = 1e-9) const {
    for (Eigen::Index j = 0; j < gamma.size(); ++j)
      if (std::abs(gamma(j)) < beta_min - slack) return false;
    return true;
  }

  QpSolution project(const Vector& gamma_hat, const Matrix& m) const {
    return project_magnitude_floor(gamma_hat, m, beta_min);
  }
};

static_assert(CoefficientSpace<ThetaSpec>);

template <CoefficientSpace Theta>
QpSolution project_qp(const Vector& gamma_hat, const Matrix& m, const Theta& theta) {
  return theta.project(gamma_hat, m);
}

/// Population counterpart of project_qp (same contract, exact covariance blocks).
template <CoefficientSpace Theta>
QpSolution population_project(const Vector& alpha_target, const Matrix& m, const Theta& theta) {
  return theta.project(alpha_target, m);
}

/// sqrt(constant * (log(d - s) + log(1/delta)) * sigma_sq / ((n - s) * sigma_min_sq))
inline double tune_beta_min(std::size_t d, std::size_t s, std::size_t n, double delta, double sigma_min_sq,
                            double sigma_sq, double constant) {
  if (n <= s) throw DimensionMismatch("tune_beta_min needs n > s");
  if (d <= s) throw DimensionMismatch("tune_beta_min needs d > s");
  const double numer = std::log(static_cast<double>(d - s)) + std::log(1.0 / delta);
  return std::sqrt(constant * numer * sigma_sq / (static_cast<double>(n - s) * sigma_min_sq));
}

}  // namespace klbss
