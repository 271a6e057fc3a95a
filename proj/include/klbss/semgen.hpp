#pragma once

// Linear SEMs over DAGs: representation, covariance, random generators, named
// constructions, Gaussian sampling and model-class predicates.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "klbss/covkit.hpp"
#include "klbss/error.hpp"
#include "klbss/index_set.hpp"
#include "klbss/random.hpp"

namespace klbss {

using Edge = std::pair<std::size_t, std::size_t>;

class Dag {
 public:
  Dag() = default;

  /// Throws CyclicGraph on a cycle and DimensionMismatch on out-of-range endpoints.
  Dag(std::size_t d, std::vector<Edge> edges) : d_(d), edges_(std::move(edges)) {
    std::sort(edges_.begin(), edges_.end());
    edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
    parents_.assign(d, {});
    children_.assign(d, {});
    for (auto [j, k] : edges_) {
      if (j >= d || k >= d) throw DimensionMismatch("edge endpoint outside [0, d)");
      if (j == k) throw CyclicGraph("self loop at node " + std::to_string(j));
      parents_[k].push_back(j);
      children_[j].push_back(k);
    }
    // Kahn's algorithm, smallest ready node first.
    std::vector<std::size_t> indeg(d);
    for (std::size_t k = 0; k < d; ++k) indeg[k] = parents_[k].size();
    std::vector<std::size_t> ready;
    for (std::size_t k = 0; k < d; ++k)
      if (indeg[k] == 0) ready.push_back(k);
    while (!ready.empty()) {
      auto it = std::min_element(ready.begin(), ready.end());
      const std::size_t v = *it;
      ready.erase(it);
      order_.push_back(v);
      for (std::size_t c : children_[v])
        if (--indeg[c] == 0) ready.push_back(c);
    }
    if (order_.size() != d) throw CyclicGraph("graph has a directed cycle");
  }

  std::size_t size() const noexcept { return d_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<std::size_t>& topological_order() const noexcept { return order_; }
  IndexSet parents(std::size_t k) const { return IndexSet(parents_.at(k)); }
  IndexSet children(std::size_t k) const { return IndexSet(children_.at(k)); }
  std::size_t in_degree(std::size_t k) const { return parents_.at(k).size(); }
  bool has_edge(std::size_t j, std::size_t k) const {
    return std::binary_search(edges_.begin(), edges_.end(), Edge{j, k});
  }

  /// Layers (V1, V2) with V2 the nodes that have parents. Empty when some node
  /// has both parents and children, i.e. the graph is not two-layer.
  std::optional<std::pair<IndexSet, IndexSet>> bipartite_layers() const {
    std::vector<std::size_t> v1, v2;
    for (std::size_t k = 0; k < d_; ++k) {
      if (parents_[k].empty()) {
        v1.push_back(k);
      } else {
        if (!children_[k].empty()) return std::nullopt;
        v2.push_back(k);
      }
    }
    return std::make_pair(IndexSet(std::move(v1)), IndexSet(std::move(v2)));
  }

 private:
  std::size_t d_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> order_;
};

struct SemSpec {
  Dag dag;
  std::map<Edge, double> coeffs;
  std::vector<double> noise_vars;
  std::optional<double> sigma_min_sq;

  std::size_t size() const noexcept { return dag.size(); }
  double coeff(std::size_t j, std::size_t k) const {
    auto it = coeffs.find({j, k});
    return it == coeffs.end() ? 0.0 : it->second;
  }

  void validate() const {
    if (noise_vars.size() != dag.size()) throw DimensionMismatch("noise_vars length differs from node count");
    if (coeffs.size() != dag.edges().size()) throw DimensionMismatch("coefficients must match the edge set");
    for (const auto& e : dag.edges()) {
      auto it = coeffs.find(e);
      if (it == coeffs.end()) throw DimensionMismatch("edge without coefficient");
      if (it->second == 0.0 || !std::isfinite(it->second)) throw DimensionMismatch("edge coefficients must be finite and nonzero");
    }
    for (double v : noise_vars) {
      if (!(v > 0.0)) throw NotPositiveDefinite("noise variances must be positive");
      if (sigma_min_sq && v < *sigma_min_sq * (1.0 - 1e-12)) throw DimensionMismatch("noise variance below the declared floor");
    }
  }
};

struct LinearModel {
  Vector beta;
  Matrix sigma;
  double noise_var = 1.0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(beta.size()); }
  IndexSet support() const {
    std::vector<std::size_t> idx;
    for (Eigen::Index j = 0; j < beta.size(); ++j)
      if (beta(j) != 0.0) idx.push_back(static_cast<std::size_t>(j));
    return IndexSet(std::move(idx));
  }
};

struct Dataset {
  Matrix x;
  Vector y;
  std::uint64_t seed = 0;
  std::string model_id;

  std::size_t n() const noexcept { return static_cast<std::size_t>(x.rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(x.cols()); }
};

/// Ranges for random SEM parameters: |b_jk| ~ Unif(b_min, b_max) with an
/// optional Rademacher sign, noise standard deviation ~ Unif(sigma_lo, sigma_hi).
struct SemParams {
  double b_min = 0.1;
  double b_max = 5.0;
  double sigma_lo = 0.5;
  double sigma_hi = 2.0;
  bool signed_weights = true;
};

/// Total-effect matrix A with X = A eps, built in topological order.
inline Matrix total_effects(const SemSpec& spec) {
  const std::size_t d = spec.size();
  Matrix a = Matrix::Identity(d, d);
  for (std::size_t k : spec.dag.topological_order())
    for (std::size_t j : spec.dag.parents(k)) a.row(k) += spec.coeff(j, k) * a.row(j);
  return a;
}

/// cov(X) = (I - B^T)^{-1} D (I - B)^{-1}.
inline Matrix sem_covariance(const SemSpec& spec) {
  spec.validate();
  const Matrix a = total_effects(spec);
  Vector noise(spec.size());
  for (std::size_t k = 0; k < spec.size(); ++k) noise(k) = spec.noise_vars[k];
  Matrix sigma = a * noise.asDiagonal() * a.transpose();
  return 0.5 * (sigma + sigma.transpose());
}

namespace detail {

inline SemSpec weighted_spec(std::size_t d, std::vector<Edge> edges, const SemParams& p, Rng& rng) {
  SemSpec spec;
  spec.dag = Dag(d, std::move(edges));
  for (const auto& e : spec.dag.edges()) {
    const double sign = p.signed_weights ? rng.rademacher() : 1.0;
    spec.coeffs[e] = sign * rng.uniform(p.b_min, p.b_max);
  }
  spec.noise_vars.resize(d);
  for (std::size_t k = 0; k < d; ++k) {
    const double sd = rng.uniform(p.sigma_lo, p.sigma_hi);
    spec.noise_vars[k] = sd * sd;
  }
  spec.sigma_min_sq = p.sigma_lo * p.sigma_lo;
  return spec;
}

}  // namespace detail

/// Relabels node i as perm[i].
inline SemSpec permute_nodes(const SemSpec& spec, const std::vector<std::size_t>& perm) {
  const std::size_t d = spec.size();
  if (perm.size() != d) throw DimensionMismatch("permutation length differs from node count");
  std::vector<Edge> edges;
  std::map<Edge, double> coeffs;
  for (const auto& [e, b] : spec.coeffs) {
    const Edge f{perm[e.first], perm[e.second]};
    edges.push_back(f);
    coeffs[f] = b;
  }
  SemSpec out;
  out.dag = Dag(d, std::move(edges));
  out.coeffs = std::move(coeffs);
  out.noise_vars.resize(d);
  for (std::size_t i = 0; i < d; ++i) out.noise_vars[perm[i]] = spec.noise_vars[i];
  out.sigma_min_sq = spec.sigma_min_sq;
  return out;
}

/// Erdos-Renyi DAG: forward edges of a random topological order, each kept with
/// probability min(1, k d / C(d, 2)).
inline SemSpec gen_er(std::size_t d, double avg_edges_per_node, const SemParams& p, std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<std::size_t> order = rng.permutation(d);
  const double pairs = 0.5 * static_cast<double>(d) * static_cast<double>(d > 0 ? d - 1 : 0);
  const double prob = pairs > 0 ? std::min(1.0, avg_edges_per_node * static_cast<double>(d) / pairs) : 0.0;
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      if (rng.bernoulli(prob)) edges.emplace_back(order[i], order[j]);
  return detail::weighted_spec(d, std::move(edges), p, rng);
}

/// Barabasi-Albert preferential attachment seeded with the edge 0 -> 1; each new
/// node attaches to min(attach, t) distinct earlier nodes, edges oriented old -> new.
inline SemSpec gen_sf(std::size_t d, std::size_t attach, const SemParams& p, std::uint64_t seed) {
  if (attach < 1) throw DimensionMismatch("gen_sf needs attach >= 1");
  Rng rng(seed);
  std::vector<Edge> edges;
  std::vector<double> degree(d, 0.0);
  if (d >= 2) {
    edges.emplace_back(0, 1);
    degree[0] = degree[1] = 1.0;
  }
  for (std::size_t t = 2; t < d; ++t) {
    const std::size_t m = std::min(attach, t);
    std::vector<bool> taken(t, false);
    for (std::size_t pick = 0; pick < m; ++pick) {
      double total = 0.0;
      for (std::size_t v = 0; v < t; ++v)
        if (!taken[v]) total += degree[v];
      double u = rng.uniform() * total;
      std::size_t chosen = t;
      for (std::size_t v = 0; v < t; ++v) {
        if (taken[v]) continue;
        chosen = v;
        if (u < degree[v]) break;
        u -= degree[v];
      }
      taken[chosen] = true;
    }
    for (std::size_t v = 0; v < t; ++v) {
      if (!taken[v]) continue;
      edges.emplace_back(v, t);
      degree[v] += 1.0;
      degree[t] += 1.0;
    }
  }
  return detail::weighted_spec(d, std::move(edges), p, rng);
}

/// Random two-layer DAG: coin-flip split into (V1, V2), each V2 node draws
/// Unif{1..min(s,|V1|)} parents from V1, then nodes are randomly relabeled.
inline SemSpec gen_bipartite(std::size_t d, std::size_t s, const SemParams& p, std::uint64_t seed) {
  if (d < 2 || s < 1) throw DimensionMismatch("gen_bipartite needs d >= 2 and s >= 1");
  Rng rng(seed);
  std::vector<std::size_t> v1, v2;
  for (int attempt = 0;; ++attempt) {
    if (attempt == 100) throw DegenerateSplit("no nonempty split after 100 draws");
    v1.clear();
    v2.clear();
    for (std::size_t k = 0; k < d; ++k) (rng.bernoulli(0.5) ? v1 : v2).push_back(k);
    if (!v1.empty() && !v2.empty()) break;
  }
  const std::size_t s_eff = std::min(s, v1.size());
  std::vector<Edge> edges;
  for (std::size_t k : v2) {
    const auto count = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(s_eff)));
    for (std::size_t i : rng.sample_without_replacement(v1.size(), count)) edges.emplace_back(v1[i], k);
  }
  SemSpec spec = detail::weighted_spec(d, std::move(edges), p, rng);
  return permute_nodes(spec, rng.permutation(d));
}

inline LinearModel attach_target(const SemSpec& spec, const IndexSet& support, const Vector& beta_values,
                                 double noise_var) {
  if (!support.within(spec.size())) throw DimensionMismatch("support outside [0, d)");
  if (static_cast<std::size_t>(beta_values.size()) != support.size())
    throw DimensionMismatch("beta_values length differs from support size");
  LinearModel model;
  model.sigma = sem_covariance(spec);
  model.beta = Vector::Zero(spec.size());
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (beta_values(i) == 0.0) throw DimensionMismatch("beta values on the support must be nonzero");
    model.beta(support[i]) = beta_values(i);
  }
  model.noise_var = noise_var;
  return model;
}

/// Rows x_i = L sqrt(D) z_i with z_i standard normal, then y_i = x_i^T beta + sigma eps_i.
inline Dataset sample_dataset(const LinearModel& model, std::size_t n, std::uint64_t seed) {
  const LdlFactor f = ldl_decompose(model.sigma);
  const Matrix factor = f.lower * f.diag.cwiseSqrt().asDiagonal();
  const auto d = static_cast<Eigen::Index>(model.size());
  Rng rng(seed);
  Matrix z(static_cast<Eigen::Index>(n), d);
  Vector eps(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z(i, j) = rng.normal();
    eps(i) = rng.normal();
  }
  Dataset data;
  data.x = z * factor.transpose();
  data.y = data.x * model.beta + std::sqrt(model.noise_var) * eps;
  data.seed = seed;
  return data;
}

/// omega I + (1 - omega) 1 1^T
inline Matrix make_equicorrelation(std::size_t d, double omega) {
  const auto n = static_cast<Eigen::Index>(d);
  return omega * Matrix::Identity(n, n) + (1.0 - omega) * Matrix::Ones(n, n);
}

/// Diagonal of the LDL factor of the equicorrelation matrix via the scalar recurrence
/// A_1 = 0, A_{k+1} = A_k + ((1 - omega) - A_k)^2 / (1 - A_k), D_k = 1 - A_k.
inline std::vector<double> ldl_min_diag_recurrence(double omega, std::size_t d) {
  std::vector<double> out;
  out.reserve(d);
  double a = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    out.push_back(1.0 - a);
    const double gap = (1.0 - omega) - a;
    a += gap * gap / (1.0 - a);
  }
  return out;
}

struct ModelPair {
  SemSpec spec;
  LinearModel model;
};

/// Two layers: roots [0, s) with unit noise, every other node a child of all roots
/// with weight beta_max; beta = beta_min on the roots and unit target noise.
inline ModelPair make_motivating_example(std::size_t d, std::size_t s, double beta_min, double beta_max) {
  if (s < 1 || d < 2 * s) throw DimensionMismatch("motivating example needs 1 <= s and d >= 2s");
  std::vector<Edge> edges;
  for (std::size_t k = s; k < d; ++k)
    for (std::size_t j = 0; j < s; ++j) edges.emplace_back(j, k);
  ModelPair out;
  out.spec.dag = Dag(d, edges);
  for (const auto& e : out.spec.dag.edges()) out.spec.coeffs[e] = beta_max;
  out.spec.noise_vars.assign(d, 1.0);
  out.spec.sigma_min_sq = 1.0;
  out.model = attach_target(out.spec, IndexSet::range(s), Vector::Constant(static_cast<Eigen::Index>(s), beta_min), 1.0);
  return out;
}

struct GpcExample {
  SemSpec spec;
  LinearModel model;
  IndexSet alt_support;
  Vector alpha_star;  // full d-vector supported on alt_support
};

/// Generalized path cancellation model. Roots [0, s) feed the collider s with weight b;
/// support {0..s/2-1} U {s} U A against the alternative {s/2..s-1} U {s} U A. Every
/// node has noise variance sigma_min^2; nodes in A (and any others) are roots.
/// d = 0 picks the smallest node count that holds A.
inline GpcExample make_gpc_example(std::size_t s, double b, double beta_min, double sigma_min,
                                   const IndexSet& a_choice, std::size_t d = 0, double noise_var = 1.0) {
  if (s < 2 || s % 2 != 0) throw DimensionMismatch("gpc example needs an even s >= 2");
  if (b == 0.0) throw DimensionMismatch("gpc example needs b != 0");
  if (a_choice.size() != s / 2 - 1) throw DimensionMismatch("a_choice must have s/2 - 1 members");
  if (!a_choice.empty() && a_choice[0] <= s) throw DimensionMismatch("a_choice members must exceed the collider index s");
  const std::size_t need = std::max(s + 1, a_choice.empty() ? 0 : a_choice.members().back() + 1);
  if (d == 0) d = need;
  if (d < need) throw DimensionMismatch("d too small for a_choice");

  std::vector<Edge> edges;
  for (std::size_t k = 0; k < s; ++k) edges.emplace_back(k, s);
  GpcExample out;
  out.spec.dag = Dag(d, edges);
  for (const auto& e : out.spec.dag.edges()) out.spec.coeffs[e] = b;
  out.spec.noise_vars.assign(d, sigma_min * sigma_min);
  out.spec.sigma_min_sq = sigma_min * sigma_min;

  std::vector<std::size_t> first_half, second_half;
  for (std::size_t k = 0; k < s / 2; ++k) first_half.push_back(k);
  for (std::size_t k = s / 2; k < s; ++k) second_half.push_back(k);
  const IndexSet support = IndexSet(first_half).set_union(IndexSet{s}).set_union(a_choice);
  out.alt_support = IndexSet(second_half).set_union(IndexSet{s}).set_union(a_choice);

  Vector values(static_cast<Eigen::Index>(support.size()));
  for (std::size_t i = 0; i < support.size(); ++i) {
    const std::size_t j = support[i];
    values(static_cast<Eigen::Index>(i)) = j < s / 2 ? -beta_min : j == s ? 100.0 * beta_min + beta_min / b : beta_min;
  }
  out.model = attach_target(out.spec, support, values, noise_var);
  out.alpha_star = Vector::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t j : out.alt_support) out.alpha_star(j) = j == s ? 100.0 * beta_min : beta_min;
  return out;
}

struct IndistinguishablePair {
  SemSpec spec;
  LinearModel first;   // support {S, W} U U
  LinearModel second;  // support {T, W} U U
  std::size_t s_node = 0, t_node = 0, w_node = 0;
};

/// Two models sharing one covariance whose supports differ in exactly two
/// coordinates and whose KL divergence is O(delta^2). The collider W is the first
/// node in topological order with two parents; S and T are its two smallest parents.
/// Weights b_SW = b_TW = -beta_S / delta, every other edge weight and noise is 1.
inline IndistinguishablePair make_indistinguishable_pair(const Dag& dag, double delta, std::size_t s = 2,
                                                         double beta_s = 1.0, double alpha_w = 1.0) {
  if (!(delta > 0.0)) throw DimensionMismatch("delta must be positive");
  if (s < 2) throw DimensionMismatch("support size must be at least 2");
  std::optional<std::size_t> collider;
  for (std::size_t k : dag.topological_order()) {
    if (dag.in_degree(k) >= 2) {
      collider = k;
      break;
    }
  }
  if (!collider) throw NoCollider("no node has two parents");
  IndistinguishablePair out;
  out.w_node = *collider;
  const IndexSet pa = dag.parents(out.w_node);
  out.s_node = pa[0];
  out.t_node = pa[1];

  out.spec.dag = dag;
  for (const auto& e : dag.edges()) out.spec.coeffs[e] = 1.0;
  out.spec.coeffs[{out.s_node, out.w_node}] = -beta_s / delta;
  out.spec.coeffs[{out.t_node, out.w_node}] = -beta_s / delta;
  out.spec.noise_vars.assign(dag.size(), 1.0);

  std::vector<std::size_t> extra;
  for (std::size_t k = 0; k < dag.size() && extra.size() < s - 2; ++k)
    if (k != out.s_node && k != out.t_node && k != out.w_node) extra.push_back(k);
  if (extra.size() != s - 2) throw DimensionMismatch("graph too small for the requested support size");
  const IndexSet shared(extra);

  const Matrix sigma = sem_covariance(out.spec);
  const auto d = static_cast<Eigen::Index>(dag.size());
  out.first.sigma = out.second.sigma = sigma;
  out.first.noise_var = out.second.noise_var = 1.0;
  out.first.beta = Vector::Zero(d);
  out.second.beta = Vector::Zero(d);
  out.first.beta(out.s_node) = beta_s;
  out.first.beta(out.w_node) = alpha_w + delta;
  out.second.beta(out.t_node) = -beta_s;
  out.second.beta(out.w_node) = alpha_w;
  for (std::size_t j : shared) out.first.beta(j) = out.second.beta(j) = 1.0;
  return out;
}

enum class ModelClass { MB, MBbar, MBprime };

struct ClassParams {
  double beta_min = 0.0;
  double sigma_min_sq = 0.0;
  std::size_t s = 0;  // in-degree bound and sparsity; 0 means |support|
};

struct Membership {
  bool member = true;
  std::vector<std::string> violations;

  explicit operator bool() const noexcept { return member; }
};

/// Checks a model against the bipartite classes. MBbar: two-layer graph with
/// 1 <= |pa(k)| <= s on V2, noise floor, ||beta||_0 = s and beta-min. MB adds
/// |V1| <= s and a support inside one layer; MBprime keeps only the layer rule.
inline Membership class_membership(const LinearModel& model, const SemSpec& spec, ModelClass cls,
                                   const ClassParams& params) {
  const Matrix sigma = sem_covariance(spec);
  if (sigma.rows() != model.sigma.rows()) throw CovarianceMismatch("dimension differs");
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - model.sigma).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw CovarianceMismatch("model covariance is not generated by the SEM");

  Membership out;
  auto fail = [&](std::string why) {
    out.member = false;
    out.violations.push_back(std::move(why));
  };
  const IndexSet support = model.support();
  const std::size_t s = params.s == 0 ? support.size() : params.s;

  const auto layers = spec.dag.bipartite_layers();
  if (!layers) {
    fail("graph is not two-layer");
  } else {
    for (std::size_t k : layers->second)
      if (spec.dag.in_degree(k) > s) fail("node " + std::to_string(k) + " has more than s parents");
  }
  for (std::size_t k = 0; k < spec.size(); ++k)
    if (spec.noise_vars[k] < params.sigma_min_sq * (1.0 - 1e-12)) fail("noise variance of node " + std::to_string(k) + " below floor");
  if (support.size() != s) fail("support size differs from s");
  for (std::size_t j : support)
    if (std::abs(model.beta(j)) < params.beta_min * (1.0 - 1e-12)) fail("coefficient " + std::to_string(j) + " below beta_min");

  if (cls != ModelClass::MBbar && layers) {
    if (!support.subset_of(layers->first) && !support.subset_of(layers->second)) fail("support spans both layers");
    if (cls == ModelClass::MB && layers->first.size() > s) fail("first layer larger than s");
  }
  return out;
}

/// Every edge weight bounded by m in magnitude.
inline bool check_condition_52(const SemSpec& spec, double m) {
  for (const auto& [e, b] : spec.coeffs)
    if (std::abs(b) > m) return false;
  return true;
}

/// Every parent of S2 = support within V2 has at most `c` children inside S2.
inline bool check_condition_53(const SemSpec& spec, const IndexSet& support, std::size_t c = 3) {
  const auto layers = spec.dag.bipartite_layers();
  if (!layers) throw NotBipartite("condition needs a two-layer graph");
  const IndexSet s2 = support.set_intersection(layers->second);
  IndexSet parents;
  for (std::size_t k : s2) parents = parents.set_union(spec.dag.parents(k));
  for (std::size_t j : parents)
    if (spec.dag.children(j).set_intersection(s2).size() > c) return false;
  return true;
}

}  // namespace klbss
