#pragma once

// Population identification signals between candidate supports, design
// parameters of the covariance, and KL divergences between linear models.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "klbss/covkit.hpp"
#include "klbss/error.hpp"
#include "klbss/index_set.hpp"
#include "klbss/model_io.hpp"
#include "klbss/semgen.hpp"
#include "klbss/theta.hpp"

namespace klbss {

struct SignalReport {
  IndexSet s, t;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta2_tilde = 0.0;
  Vector alpha_beta;        // Sigma_{T'|W}^{-1} Sigma_{T'S'|W} beta_{S'}
  Vector alpha_star;        // minimizer of delta2 over Theta_{T'}
  Vector alpha_tilde_beta;  // Sigma_TT^{-1} Sigma_TS beta_S
  Vector alpha_tilde_star;  // minimizer of delta2_tilde over Theta_T

  double signal() const noexcept { return std::max(delta1, delta2); }
};

namespace detail {

inline void check_pair(const LinearModel& model, const IndexSet& s, const IndexSet& t) {
  if (!s.within(model.size()) || !t.within(model.size())) throw DimensionMismatch("index set outside [0, d)");
  if (model.sigma.rows() != model.beta.size()) throw DimensionMismatch("sigma and beta sizes differ");
}

}  // namespace detail

/// beta_{S'}^T Sigma_{S'|T} beta_{S'} / sigma^2 with S' = S \ T.
inline double delta1(const LinearModel& model, const IndexSet& s, const IndexSet& t) {
  detail::check_pair(model, s, t);
  const IndexSet s_only = s.set_difference(t);
  if (s_only.empty()) return 0.0;
  const Vector b = subvector(model.beta, s_only);
  return std::max(0.0, b.dot(conditional_covariance(model.sigma, s_only, t) * b)) / model.noise_var;
}

/// Sigma_{T'|W}^{-1} Sigma_{T'S'|W} beta_{S'}.
inline Vector alpha_beta(const LinearModel& model, const IndexSet& s, const IndexSet& t) {
  detail::check_pair(model, s, t);
  const IndexSet w = s.set_intersection(t), s_only = s.set_difference(t), t_only = t.set_difference(s);
  if (t_only.empty()) return Vector(0);
  const Matrix cond = conditional_covariance(model.sigma, t_only, w);
  const Vector rhs = conditional_cross_covariance(model.sigma, t_only, s_only, w) * subvector(model.beta, s_only);
  return solve_spd<SingularConditioning>(cond, rhs, "Sigma_{T'|W}");
}

/// Full report for the ordered pair (S, T).
template <CoefficientSpace Theta>
SignalReport signal_report(const LinearModel& model, const IndexSet& s, const IndexSet& t, const Theta& theta) {
  SignalReport rep;
  rep.s = s;
  rep.t = t;
  rep.delta1 = delta1(model, s, t);

  const IndexSet w = s.set_intersection(t), t_only = t.set_difference(s);
  rep.alpha_beta = alpha_beta(model, s, t);
  if (!t_only.empty()) {
    const QpSolution q = population_project(rep.alpha_beta, conditional_covariance(model.sigma, t_only, w), theta);
    rep.delta2 = q.value / model.noise_var;
    rep.alpha_star = q.minimizer;
  } else {
    rep.alpha_star = Vector(0);
  }

  if (!t.empty()) {
    const Matrix stt = submatrix(model.sigma, t);
    const Vector rhs = submatrix(model.sigma, t, s) * subvector(model.beta, s);
    rep.alpha_tilde_beta = solve_spd<SingularConditioning>(stt, rhs, "Sigma_TT");
    const QpSolution q = population_project(rep.alpha_tilde_beta, stt, theta);
    rep.delta2_tilde = q.value / model.noise_var;
    rep.alpha_tilde_star = q.minimizer;
  } else {
    rep.alpha_tilde_beta = rep.alpha_tilde_star = Vector(0);
  }
  return rep;
}

template <CoefficientSpace Theta>
double delta2(const LinearModel& model, const IndexSet& s, const IndexSet& t, const Theta& theta) {
  return signal_report(model, s, t, theta).delta2;
}

template <CoefficientSpace Theta>
double delta2_tilde(const LinearModel& model, const IndexSet& s, const IndexSet& t, const Theta& theta) {
  return signal_report(model, s, t, theta).delta2_tilde;
}

/// Alternatives T against which a fixed true support is compared.
struct CandidateFamily {
  enum class Kind { exact_s, up_to_sbar, layer_restricted };

  Kind kind = Kind::exact_s;
  std::size_t size = 0;  // s or s-bar; 0 means the size of the true support
  IndexSet v1, v2;       // layers for layer_restricted

  static CandidateFamily exact(std::size_t s = 0) { return {Kind::exact_s, s, {}, {}}; }
  static CandidateFamily up_to(std::size_t sbar) { return {Kind::up_to_sbar, sbar, {}, {}}; }
  static CandidateFamily layers(IndexSet v1, IndexSet v2, std::size_t s = 0) {
    return {Kind::layer_restricted, s, std::move(v1), std::move(v2)};
  }

  std::vector<IndexSet> enumerate(std::size_t d, std::size_t true_size) const {
    const std::size_t k = size == 0 ? true_size : size;
    switch (kind) {
      case Kind::exact_s:
        return all_supports(d, k, kMaxCandidates);
      case Kind::up_to_sbar:
        return supports_up_to(d, k, kMaxCandidates);
      case Kind::layer_restricted: {
        if (binomial_capped(v1.size(), k, kMaxCandidates) + binomial_capped(v2.size(), k, kMaxCandidates) > kMaxCandidates)
          throw TooManyCandidates("layer-restricted family too large");
        auto out = combinations(v1, k);
        auto second = combinations(v2, k);
        out.insert(out.end(), second.begin(), second.end());
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
      }
    }
    return {};
  }
};

struct GlobalSignal {
  double value = std::numeric_limits<double>::infinity();
  IndexSet argmin;
};

namespace detail {

// Minimum over the family of score(T) / |S* \ T|, skipping T with S* inside T.
template <class Score>
GlobalSignal min_per_unit(const LinearModel& model, const CandidateFamily& family, Score&& score) {
  const IndexSet truth = model.support();
  GlobalSignal out;
  for (const IndexSet& t : family.enumerate(model.size(), truth.size())) {
    const std::size_t r = truth.set_difference(t).size();
    if (r == 0) continue;
    const double v = score(truth, t) / static_cast<double>(r);
    if (v < out.value) {
      out.value = v;
      out.argmin = t;
    }
  }
  return out;
}

}  // namespace detail

/// min over alternatives T of (Delta1 v Delta2)(S*, T) / |S* \ T|.
template <CoefficientSpace Theta>
GlobalSignal global_signal(const LinearModel& model, const Theta& theta, const CandidateFamily& family) {
  return detail::min_per_unit(model, family, [&](const IndexSet& s, const IndexSet& t) {
    return signal_report(model, s, t, theta).signal();
  });
}

/// min over alternatives T of Delta1(S*, T) / |S* \ T|.
inline GlobalSignal global_signal_bss(const LinearModel& model, const CandidateFamily& family) {
  return detail::min_per_unit(model, family,
                              [&](const IndexSet& s, const IndexSet& t) { return delta1(model, s, t); });
}

struct ProportionalReport {
  double ratio = 1.0;
  IndexSet worst;
  GlobalSignal signal;
};

/// max over T of (Delta1 v Delta2)(S*, T) / (|S* \ T| * global signal); always >= 1.
template <CoefficientSpace Theta>
ProportionalReport proportional_property_ratio(const LinearModel& model, const Theta& theta,
                                               const CandidateFamily& family) {
  ProportionalReport out;
  out.signal = global_signal(model, theta, family);
  if (!(out.signal.value > 0.0) || !std::isfinite(out.signal.value)) {
    out.ratio = std::numeric_limits<double>::infinity();
    return out;
  }
  const IndexSet truth = model.support();
  out.ratio = 0.0;
  for (const IndexSet& t : family.enumerate(model.size(), truth.size())) {
    const std::size_t r = truth.set_difference(t).size();
    if (r == 0) continue;
    const double v = signal_report(model, truth, t, theta).signal() / (static_cast<double>(r) * out.signal.value);
    if (v > out.ratio) {
      out.ratio = v;
      out.worst = t;
    }
  }
  return out;
}

/// min over T in T_{d,s} \ {S*} of lambda_min(Sigma_{S* \ T | T}).
inline double omega_param(const LinearModel& model, std::size_t s) {
  const IndexSet truth = model.support();
  double best = std::numeric_limits<double>::infinity();
  for (const IndexSet& t : all_supports(model.size(), s, kMaxCandidates)) {
    const IndexSet diff = truth.set_difference(t);
    if (diff.empty()) continue;
    best = std::min(best, min_eigenvalue(conditional_covariance(model.sigma, diff, t)));
  }
  return best;
}

/// D^{-1/2} Sigma D^{-1/2}.
inline Matrix correlation_matrix(const Matrix& sigma) {
  const Vector diag = sigma.diagonal();
  for (Eigen::Index j = 0; j < diag.size(); ++j)
    if (!(diag(j) > 0.0)) throw NotPositiveDefinite("zero-variance coordinate " + std::to_string(j));
  const Vector inv_sd = diag.cwiseSqrt().cwiseInverse();
  return inv_sd.asDiagonal() * sigma * inv_sd.asDiagonal();
}

/// max over j outside S* of |C_{jS*} C_{S*S*}^{-1} sgn(beta_{S*})| on the correlation matrix C.
inline double irrepresentability_gamma(const LinearModel& model) {
  const IndexSet truth = model.support();
  const IndexSet rest = IndexSet::range(model.size()).set_difference(truth);
  if (truth.empty() || rest.empty()) return 0.0;
  const Matrix corr = correlation_matrix(model.sigma);
  Vector sgn(static_cast<Eigen::Index>(truth.size()));
  for (std::size_t i = 0; i < truth.size(); ++i) sgn(static_cast<Eigen::Index>(i)) = model.beta(truth[i]) > 0 ? 1.0 : -1.0;
  const Vector w = solve_spd<SingularConditioning>(submatrix(corr, truth), sgn, "support correlation block");
  return (submatrix(corr, rest, truth) * w).cwiseAbs().maxCoeff();
}

/// Largest off-diagonal correlation magnitude.
inline double mutual_incoherence_mu(const LinearModel& model) {
  const Matrix corr = correlation_matrix(model.sigma);
  double mu = 0.0;
  for (Eigen::Index j = 0; j < corr.rows(); ++j)
    for (Eigen::Index k = 0; k < corr.cols(); ++k)
      if (j != k) mu = std::max(mu, std::abs(corr(j, k)));
  return mu;
}

/// KL(P_beta || P_alpha) = (beta - alpha)^T Sigma (beta - alpha) / (2 sigma^2).
inline double kl_linear_models(const Vector& beta, const Vector& alpha, const Matrix& sigma, double noise_var) {
  if (beta.size() != alpha.size() || sigma.rows() != beta.size()) throw DimensionMismatch("kl_linear_models sizes differ");
  const Vector diff = beta - alpha;
  return std::max(0.0, diff.dot(sigma * diff)) / (2.0 * noise_var);
}

/// Additive parts of E(X^T beta - X^T alpha)^2 / sigma^2 = 2 KL for two models
/// sharing Sigma and sigma^2. Two-term split: delta1 + delta2_tilde.
/// Three-term split: delta1 + delta2 + delta3.
struct KlDecomposition {
  double delta1 = 0.0;
  double delta2_tilde = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  double total = 0.0;  // 2 KL
};

inline KlDecomposition kl_decomposition_check(const Vector& beta, const Vector& alpha, const Matrix& sigma,
                                              double noise_var) {
  LinearModel m{beta, sigma, noise_var};
  const IndexSet s = m.support();
  const IndexSet t = LinearModel{alpha, sigma, noise_var}.support();
  const IndexSet w = s.set_intersection(t), s_only = s.set_difference(t), t_only = t.set_difference(s);

  KlDecomposition out;
  out.total = 2.0 * kl_linear_models(beta, alpha, sigma, noise_var);
  out.delta1 = delta1(m, s, t);

  if (!t.empty()) {
    const Matrix stt = submatrix(sigma, t);
    const Vector tilde = solve_spd<SingularConditioning>(stt, submatrix(sigma, t, s) * subvector(beta, s), "Sigma_TT");
    const Vector gap = tilde - subvector(alpha, t);
    out.delta2_tilde = std::max(0.0, gap.dot(stt * gap)) / noise_var;
  }
  const Vector a_t = subvector(alpha, t_only);
  if (!t_only.empty()) {
    const Vector gap = alpha_beta(m, s, t) - a_t;
    out.delta2 = std::max(0.0, gap.dot(conditional_covariance(sigma, t_only, w) * gap)) / noise_var;
  }
  if (!w.empty()) {
    const Matrix sww = submatrix(sigma, w);
    Vector cross = Vector::Zero(static_cast<Eigen::Index>(w.size()));
    if (!s_only.empty()) cross += submatrix(sigma, w, s_only) * subvector(beta, s_only);
    if (!t_only.empty()) cross -= submatrix(sigma, w, t_only) * a_t;
    const Vector v = subvector(beta, w) - subvector(alpha, w) + solve_spd<SingularConditioning>(sww, cross, "Sigma_WW");
    out.delta3 = std::max(0.0, v.dot(sww * v)) / noise_var;
  }
  return out;
}

inline std::string signal_csv_header() { return "pair,delta1,delta2,delta2_tilde"; }

/// "S=i|j;T=k|l,delta1,delta2,delta2_tilde"
inline std::string signal_csv_row(const SignalReport& rep) {
  return "S=" + rep.s.to_string() + ";T=" + rep.t.to_string() + "," + format_real(rep.delta1) + "," +
         format_real(rep.delta2) + "," + format_real(rep.delta2_tilde);
}

}  // namespace klbss
