#pragma once

// Support estimators: best subset selection, the pairwise Compare score and the
// tournaments built on it, penalized variants for unknown sparsity, and a Lasso path.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "klbss/covkit.hpp"
#include "klbss/error.hpp"
#include "klbss/index_set.hpp"
#include "klbss/random.hpp"
#include "klbss/semgen.hpp"
#include "klbss/theta.hpp"

namespace klbss {

/// Largest candidate family the pairwise tournament will enumerate.
inline constexpr std::size_t kMaxFullCandidates = 2000;

struct ScorePair {
  double residual_term = 0.0;
  double violation_term = 0.0;
  double total = 0.0;
};

/// Per-dataset sufficient statistics: the Gram matrix of [X Y] plus memoized
/// residual sums of squares. Not safe to share across threads.
class DesignCache {
 public:
  explicit DesignCache(const Dataset& data) : data_(&data), n_(data.n()), d_(data.d()) {
    if (static_cast<std::size_t>(data.y.size()) != n_) throw DimensionMismatch("response length differs from row count");
    Matrix xy(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(d_ + 1));
    xy.leftCols(static_cast<Eigen::Index>(d_)) = data.x;
    xy.col(static_cast<Eigen::Index>(d_)) = data.y;
    gram_ = xy.transpose() * xy;
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t d() const noexcept { return d_; }
  const Dataset& data() const noexcept { return *data_; }
  const Matrix& gram() const noexcept { return gram_; }

  /// ||Pi_S^perp Y||^2 from a Householder QR of [X_S Y].
  double rss(const IndexSet& s) {
    if (auto it = rss_.find(s); it != rss_.end()) return it->second;
    const double v = compute_rss(s);
    rss_.emplace(s, v);
    return v;
  }

  /// OLS of Pi_W^perp Y on Pi_W^perp X_R, together with the partialled Gram block.
  struct PartialFit {
    Vector gamma_hat;
    Matrix gram_rr;
  };

  PartialFit partial_fit(const IndexSet& w, const IndexSet& r) const {
    std::vector<std::size_t> ry(r.members());
    ry.push_back(d_);
    const IndexSet ryset(ry);
    Matrix block = submatrix(gram_, ryset);
    if (!w.empty()) {
      const Matrix coef = solve_spd<RankDeficient>(submatrix(gram_, w), submatrix(gram_, w, ryset), "Gram block of W");
      block.noalias() -= submatrix(gram_, ryset, w) * coef;
    }
    const auto k = static_cast<Eigen::Index>(r.size());
    PartialFit out;
    out.gram_rr = 0.5 * (block.topLeftCorner(k, k) + block.topLeftCorner(k, k).transpose());
    out.gamma_hat = solve_spd<RankDeficient>(out.gram_rr, block.topRightCorner(k, 1), "partialled Gram block");
    return out;
  }

 private:
  double compute_rss(const IndexSet& s) const {
    const auto k = static_cast<Eigen::Index>(s.size());
    if (k == 0) return data_->y.squaredNorm();
    if (n_ <= s.size()) throw RankDeficient("n must exceed the support size");
    Matrix a(static_cast<Eigen::Index>(n_), k + 1);
    for (Eigen::Index j = 0; j < k; ++j) a.col(j) = data_->x.col(static_cast<Eigen::Index>(s[j]));
    a.col(k) = data_->y;
    Eigen::HouseholderQR<Matrix> qr(a);
    const Matrix& packed = qr.matrixQR();
    double largest = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) largest = std::max(largest, std::abs(packed(j, j)));
    for (Eigen::Index j = 0; j < k; ++j)
      if (!(std::abs(packed(j, j)) > 1e-6 * largest)) throw RankDeficient("design columns of " + s.to_string() + " are collinear");
    return packed(k, k) * packed(k, k);
  }

  const Dataset* data_;
  std::size_t n_, d_;
  Matrix gram_;
  std::map<IndexSet, double> rss_;
};

struct CompareResult {
  IndexSet winner;
  ScorePair first;
  ScorePair second;
};

namespace detail {

// Score of D = R u W against the other candidate: rss / (n - |D|) plus the weighted
// distance of the partial OLS coefficients from Theta_R with weight G_RR / (n - |W|).
// With |S| = |T| = s the denominators are n - s and n - (s - r).
template <CoefficientSpace Theta>
ScorePair pair_score(DesignCache& cache, const IndexSet& d_set, const IndexSet& w, const IndexSet& r, const Theta& theta) {
  const double n = static_cast<double>(cache.n());
  ScorePair out;
  out.residual_term = cache.rss(d_set) / (n - static_cast<double>(d_set.size()));
  if (!r.empty()) {
    const auto fit = cache.partial_fit(w, r);
    const Matrix m = fit.gram_rr / (n - static_cast<double>(w.size()));
    out.violation_term = project_qp(fit.gamma_hat, m, theta).value;
  }
  out.total = out.residual_term + out.violation_term;
  return out;
}

template <CoefficientSpace Theta>
CompareResult compare_scores(DesignCache& cache, const IndexSet& s, const IndexSet& t, const Theta& theta, double tau) {
  if (s == t) throw DimensionMismatch("compare needs two distinct candidates");
  if (!s.within(cache.d()) || !t.within(cache.d())) throw DimensionMismatch("candidate outside [0, d)");
  if (cache.n() <= std::max(s.size(), t.size())) throw RankDeficient("n must exceed the candidate size");
  const IndexSet w = s.set_intersection(t);
  CompareResult out;
  out.first = pair_score(cache, s, w, s.set_difference(t), theta);
  out.second = pair_score(cache, t, w, t.set_difference(s), theta);
  const double lhs = out.first.total + tau * static_cast<double>(s.size());
  const double rhs = out.second.total + tau * static_cast<double>(t.size());
  out.winner = lhs <= rhs ? s : t;
  return out;
}

inline std::vector<IndexSet> shuffled(std::vector<IndexSet> family, std::uint64_t seed) {
  Rng rng(seed);
  rng.shuffle(family);
  return family;
}

template <class Tiebreak>
IndexSet vote_winner(const std::vector<IndexSet>& family, const std::vector<std::size_t>& votes, Tiebreak&& secondary) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < family.size(); ++i) {
    if (votes[i] > votes[best] || (votes[i] == votes[best] && secondary(family[i]) < secondary(family[best]))) best = i;
  }
  return family[best];
}

}  // namespace detail

/// argmin of ||Pi_S^perp Y||^2 over size-s supports; lexicographically first on ties.
inline IndexSet bss(DesignCache& cache, std::size_t s) {
  IndexSet best;
  double best_rss = std::numeric_limits<double>::infinity();
  for (const IndexSet& cand : all_supports(cache.d(), s, kMaxCandidates)) {
    const double v = cache.rss(cand);
    if (v < best_rss) {
      best_rss = v;
      best = cand;
    }
  }
  return best;
}

inline IndexSet bss(const Dataset& data, std::size_t s) {
  DesignCache cache(data);
  return bss(cache, s);
}

/// Pairwise Compare of two equal-size candidates; ties go to the first argument.
template <CoefficientSpace Theta>
CompareResult compare(DesignCache& cache, const IndexSet& s, const IndexSet& t, const Theta& theta) {
  if (s.size() != t.size()) throw DimensionMismatch("compare needs candidates of equal size");
  return detail::compare_scores(cache, s, t, theta, 0.0);
}

template <CoefficientSpace Theta>
CompareResult compare(const Dataset& data, const IndexSet& s, const IndexSet& t, const Theta& theta) {
  DesignCache cache(data);
  return compare(cache, s, t, theta);
}

/// Compare with cardinality penalty tau |D| and size-adjusted denominators.
template <CoefficientSpace Theta>
CompareResult compare_unknown(DesignCache& cache, const IndexSet& s, const IndexSet& t, const Theta& theta, double tau) {
  if (tau < 0.0) throw DimensionMismatch("tau must be nonnegative");
  return detail::compare_scores(cache, s, t, theta, tau);
}

template <CoefficientSpace Theta>
CompareResult compare_unknown(const Dataset& data, const IndexSet& s, const IndexSet& t, const Theta& theta, double tau) {
  DesignCache cache(data);
  return compare_unknown(cache, s, t, theta, tau);
}

/// Sequential tournament over a seeded shuffle of the size-s supports.
template <CoefficientSpace Theta>
IndexSet simple_klbss(DesignCache& cache, std::size_t s, const Theta& theta, std::uint64_t seed) {
  const auto order = detail::shuffled(all_supports(cache.d(), s, kMaxCandidates), seed);
  IndexSet winner = order.front();
  for (std::size_t j = 1; j < order.size(); ++j) winner = compare(cache, winner, order[j], theta).winner;
  return winner;
}

template <CoefficientSpace Theta>
IndexSet simple_klbss(const Dataset& data, std::size_t s, const Theta& theta, std::uint64_t seed) {
  DesignCache cache(data);
  return simple_klbss(cache, s, theta, seed);
}

/// Round robin: each candidate collects a vote for every comparison it wins (ties
/// count for both sides). Most votes wins; then smaller residual, then lexicographic.
template <CoefficientSpace Theta>
IndexSet full_klbss(DesignCache& cache, std::size_t s, const Theta& theta) {
  if (binomial_capped(cache.d(), s, kMaxFullCandidates) > kMaxFullCandidates)
    throw TooManyCandidates("pairwise tournament limited to " + std::to_string(kMaxFullCandidates) + " candidates");
  const auto family = all_supports(cache.d(), s, kMaxFullCandidates);
  std::vector<std::size_t> votes(family.size(), 0);
  for (std::size_t i = 0; i < family.size(); ++i) {
    for (std::size_t j = i + 1; j < family.size(); ++j) {
      const auto res = compare(cache, family[i], family[j], theta);
      if (res.first.total <= res.second.total) ++votes[i];
      if (res.second.total <= res.first.total) ++votes[j];
    }
  }
  return detail::vote_winner(family, votes, [&](const IndexSet& c) { return cache.rss(c); });
}

template <CoefficientSpace Theta>
IndexSet full_klbss(const Dataset& data, std::size_t s, const Theta& theta) {
  DesignCache cache(data);
  return full_klbss(cache, s, theta);
}

/// Score of a single support: rss / (n - s) + min over Theta_S of the
/// (X_S^T X_S / n)-weighted distance from the full OLS fit.
template <CoefficientSpace Theta>
ScorePair vanilla_score(DesignCache& cache, const IndexSet& s, const Theta& theta) {
  const double n = static_cast<double>(cache.n());
  if (cache.n() <= s.size()) throw RankDeficient("n must exceed the support size");
  ScorePair out;
  out.residual_term = cache.rss(s) / (n - static_cast<double>(s.size()));
  if (!s.empty()) {
    const auto fit = cache.partial_fit(IndexSet{}, s);
    out.violation_term = project_qp(fit.gamma_hat, Matrix(fit.gram_rr / n), theta).value;
  }
  out.total = out.residual_term + out.violation_term;
  return out;
}

template <CoefficientSpace Theta>
IndexSet vanilla_klbss(DesignCache& cache, std::size_t s, const Theta& theta) {
  IndexSet best;
  double best_score = std::numeric_limits<double>::infinity();
  for (const IndexSet& cand : all_supports(cache.d(), s, kMaxCandidates)) {
    const double v = vanilla_score(cache, cand, theta).total;
    if (v < best_score) {
      best_score = v;
      best = cand;
    }
  }
  return best;
}

template <CoefficientSpace Theta>
IndexSet vanilla_klbss(const Dataset& data, std::size_t s, const Theta& theta) {
  DesignCache cache(data);
  return vanilla_klbss(cache, s, theta);
}

/// rss / (n - |S|) + |S| tau.
inline double bssu_score(DesignCache& cache, const IndexSet& s, double tau) {
  return cache.rss(s) / (static_cast<double>(cache.n()) - static_cast<double>(s.size())) + tau * static_cast<double>(s.size());
}

/// Penalized residual argmin over every support of size <= sbar (the empty set included).
inline IndexSet bssu(DesignCache& cache, std::size_t sbar, double tau) {
  if (tau < 0.0) throw DimensionMismatch("tau must be nonnegative");
  if (cache.n() <= sbar) throw RankDeficient("n must exceed sbar");
  IndexSet best;
  double best_score = std::numeric_limits<double>::infinity();
  for (const IndexSet& cand : supports_up_to(cache.d(), sbar, kMaxCandidates)) {
    const double v = bssu_score(cache, cand, tau);
    if (v < best_score) {
      best_score = v;
      best = cand;
    }
  }
  return best;
}

inline IndexSet bssu(const Dataset& data, std::size_t sbar, double tau) {
  DesignCache cache(data);
  return bssu(cache, sbar, tau);
}

enum class TournamentMode { simple, full };

/// Tournament of the penalized Compare over all supports of size <= sbar, ordered
/// by size then lexicographically. Full-mode vote ties go to the smaller penalized
/// residual score, then to the earlier candidate.
template <CoefficientSpace Theta>
IndexSet klbss_unknown(DesignCache& cache, std::size_t sbar, const Theta& theta, double tau, TournamentMode mode,
                       std::uint64_t seed = 0) {
  if (cache.n() <= sbar) throw RankDeficient("n must exceed sbar");
  auto family = supports_up_to(cache.d(), sbar, kMaxCandidates);
  if (mode == TournamentMode::simple) {
    family = detail::shuffled(std::move(family), seed);
    IndexSet winner = family.front();
    for (std::size_t j = 1; j < family.size(); ++j) winner = compare_unknown(cache, winner, family[j], theta, tau).winner;
    return winner;
  }
  if (family.size() > kMaxFullCandidates) throw TooManyCandidates("pairwise tournament limited to " + std::to_string(kMaxFullCandidates) + " candidates");
  std::vector<std::size_t> votes(family.size(), 0);
  for (std::size_t i = 0; i < family.size(); ++i) {
    for (std::size_t j = i + 1; j < family.size(); ++j) {
      const auto res = compare_unknown(cache, family[i], family[j], theta, tau);
      const double a = res.first.total + tau * static_cast<double>(family[i].size());
      const double b = res.second.total + tau * static_cast<double>(family[j].size());
      if (a <= b) ++votes[i];
      if (b <= a) ++votes[j];
    }
  }
  return detail::vote_winner(family, votes, [&](const IndexSet& c) { return bssu_score(cache, c, tau); });
}

template <CoefficientSpace Theta>
IndexSet klbss_unknown(const Dataset& data, std::size_t sbar, const Theta& theta, double tau, TournamentMode mode,
                       std::uint64_t seed = 0) {
  DesignCache cache(data);
  return klbss_unknown(cache, sbar, theta, tau, mode, seed);
}

/// Supports along a Lasso path. Columns are scaled to unit mean square (no
/// centering); the objective is ||y - Xb||^2 / (2n) + lambda ||b||_1 on a
/// log-spaced grid from lambda_max = ||X^T y||_inf / n down to 1e-3 lambda_max,
/// solved by cyclic coordinate descent with warm starts.
inline std::vector<IndexSet> lasso_path(const Dataset& data, std::size_t nlambda, double tol = 1e-7) {
  const auto n = static_cast<double>(data.n());
  const Eigen::Index d = data.x.cols();
  if (data.n() < 2) throw DimensionMismatch("lasso_path needs n >= 2");
  if (nlambda < 1) throw DimensionMismatch("lasso_path needs nlambda >= 1");

  Vector scale = (data.x.colwise().squaredNorm() / n).cwiseSqrt().transpose();
  for (Eigen::Index j = 0; j < d; ++j)
    if (!(scale(j) > 0.0)) scale(j) = 1.0;
  const Matrix xs = data.x * scale.cwiseInverse().asDiagonal();
  const Matrix g = xs.transpose() * xs / n;
  const Vector c = xs.transpose() * data.y / n;
  const double lambda_max = c.cwiseAbs().maxCoeff();

  std::vector<IndexSet> path;
  path.reserve(nlambda);
  Vector b = Vector::Zero(d);
  Vector gb = Vector::Zero(d);  // g * b, kept in sync
  for (std::size_t step = 0; step < nlambda; ++step) {
    const double frac = nlambda == 1 ? 0.0 : static_cast<double>(step) / static_cast<double>(nlambda - 1);
    const double lambda = lambda_max * std::pow(1e-3, frac);
    for (int sweep = 0; sweep < 100000; ++sweep) {
      double max_change = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double gjj = g(j, j);
        const double z = c(j) - gb(j) + gjj * b(j);
        const double updated = (z > lambda ? z - lambda : z < -lambda ? z + lambda : 0.0) / gjj;
        const double delta = updated - b(j);
        if (delta != 0.0) {
          gb += delta * g.col(j);
          b(j) = updated;
          max_change = std::max(max_change, std::abs(delta));
        }
      }
      if (max_change < tol) break;
    }
    std::vector<std::size_t> support;
    for (Eigen::Index j = 0; j < d; ++j)
      if (b(j) != 0.0) support.push_back(static_cast<std::size_t>(j));
    path.emplace_back(std::move(support));
  }
  return path;
}

inline bool recovery_success(const IndexSet& estimated, const IndexSet& truth) { return estimated == truth; }

inline bool recovery_success(const std::vector<IndexSet>& path, const IndexSet& truth) {
  return std::any_of(path.begin(), path.end(), [&](const IndexSet& s) { return s == truth; });
}

}  // namespace klbss
