#include <gtest/gtest.h>

#include "klbss/estimators.hpp"
#include "klbss/semgen.hpp"
#include "oracles.hpp"

using namespace klbss;

namespace {

ThetaSpec theta_for(std::size_t d, std::size_t s, double beta_min) {
  ThetaSpec t;
  t.d = d;
  t.sparsity = s;
  t.beta_min = beta_min;
  return t;
}

Dataset bipartite_data(std::size_t d, std::size_t s, std::size_t n, double beta_min, std::uint64_t seed) {
  const SemSpec spec = gen_bipartite(d, s, SemParams{}, seed);
  const LinearModel m = attach_target(spec, IndexSet::range(s), Vector::Constant(static_cast<Eigen::Index>(s), beta_min), 1.0);
  return sample_dataset(m, n, seed + 7);
}

Dataset motivating_data(std::size_t n, double beta_min, std::uint64_t seed) {
  const auto mp = make_motivating_example(6, 3, beta_min, 5.0);
  return sample_dataset(mp.model, n, seed);
}

IndexSet exhaustive_bss(const Dataset& data, std::size_t s) {
  IndexSet best;
  double best_rss = std::numeric_limits<double>::infinity();
  const std::size_t d = data.d();
  for (unsigned mask = 0; mask < (1u << d); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != s) continue;
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < d; ++j)
      if (mask >> j & 1u) cols.push_back(j);
    const double r = oracle::rss(data.x, data.y, cols);
    const IndexSet cand(cols);
    if (r < best_rss || (r == best_rss && cand < best)) {
      best_rss = r;
      best = cand;
    }
  }
  return best;
}

}  // namespace

TEST(Bss, NoiselessSingleColumn) {
  Rng rng(1);
  Dataset data;
  data.x = Matrix(40, 3);
  for (auto& v : data.x.reshaped()) v = rng.normal();
  data.y = data.x.col(1);
  EXPECT_EQ(bss(data, 1), IndexSet{1});
}

TEST(Bss, ExhaustiveOracle) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const auto m = oracle::random_model(rng, 3, 1, 0.5);
    const Dataset data = sample_dataset(m, 6, seed);
    EXPECT_EQ(bss(data, 1), exhaustive_bss(data, 1));
    const Dataset bigger = bipartite_data(6, 2, 60, 0.3, seed);
    EXPECT_EQ(bss(bigger, 2), exhaustive_bss(bigger, 2));
  }
}

TEST(Compare, ZeroFloorIsResidualComparison) {
  const Dataset data = motivating_data(300, 0.1, 3);
  DesignCache cache(data);
  for (const auto& [s, t] : std::vector<std::pair<IndexSet, IndexSet>>{{{0, 1, 2}, {3, 4, 5}}, {{0, 1, 3}, {0, 4, 5}}}) {
    const auto res = compare(cache, s, t, theta_for(6, 3, 0.0));
    EXPECT_EQ(res.winner, cache.rss(s) <= cache.rss(t) ? s : t);
  }
}

TEST(Compare, StraightLineOracle) {
  const Dataset data = motivating_data(2000, 0.3, 2024);
  const ThetaSpec theta = theta_for(6, 3, 0.3);
  const IndexSet truth{0, 1, 2};
  for (const IndexSet& t : {IndexSet{3, 4, 5}, IndexSet{0, 1, 4}, IndexSet{1, 3, 5}}) {
    const auto res = compare(data, truth, t, theta);
    EXPECT_EQ(res.winner, truth) << t;
    EXPECT_NEAR(res.first.total, oracle::compare_score(data.x, data.y, truth, t, 0.3), 1e-8);
    EXPECT_NEAR(res.second.total, oracle::compare_score(data.x, data.y, t, truth, 0.3), 1e-8);
  }
}

TEST(Compare, PartiallingOracle) {
  // with W nonempty, the violation term equals the one computed on data residualized on X_W
  const Dataset data = bipartite_data(7, 3, 400, 0.2, 11);
  const IndexSet s{0, 1, 2}, t{0, 4, 5};
  const auto res = compare(data, s, t, theta_for(7, 3, 0.2));
  const double n = static_cast<double>(data.n());
  const Matrix xw = oracle::cols_of(data.x, {0});
  const auto qr = xw.colPivHouseholderQr();
  Dataset partial = data;
  for (Eigen::Index j = 0; j < partial.x.cols(); ++j) partial.x.col(j) -= xw * qr.solve(Vector(data.x.col(j)));
  partial.y -= xw * qr.solve(data.y);
  const Matrix xr = oracle::cols_of(partial.x, {1, 2});
  const Vector g = xr.colPivHouseholderQr().solve(partial.y);
  const double viol = oracle::face_qp(g, xr.transpose() * xr / (n - 1.0), 0.2);
  EXPECT_NEAR(res.first.violation_term, viol, 1e-9);
  EXPECT_NEAR(res.first.residual_term, oracle::rss(data.x, data.y, {0, 1, 2}) / (n - 3.0), 1e-9);
}

TEST(Compare, RejectsBadInput) {
  const Dataset data = motivating_data(50, 0.1, 1);
  EXPECT_THROW(compare(data, {0, 1, 2}, {0, 1, 2}, theta_for(6, 3, 0.1)), DimensionMismatch);
  EXPECT_THROW(compare(data, {0, 1, 2}, {0, 1}, theta_for(6, 3, 0.1)), DimensionMismatch);
  EXPECT_THROW(compare(data, {0, 1, 2}, {0, 1, 9}, theta_for(6, 3, 0.1)), DimensionMismatch);
}

TEST(Compare, CollinearColumnsRaise) {
  Dataset data = motivating_data(50, 0.1, 1);
  data.x.col(1) = 2.0 * data.x.col(0);
  EXPECT_THROW(compare(data, {0, 1, 2}, {3, 4, 5}, theta_for(6, 3, 0.1)), RankDeficient);
}

TEST(SimpleKlbss, TwoCandidatesAndDeterminism) {
  Rng rng(5);
  const auto m = oracle::random_model(rng, 2, 1, 0.3);
  const Dataset data = sample_dataset(m, 80, 5);
  const ThetaSpec theta = theta_for(2, 1, 0.3);
  EXPECT_EQ(simple_klbss(data, 1, theta, 9), compare(data, {0}, {1}, theta).winner);
  const Dataset big = bipartite_data(8, 3, 500, 0.1, 3);
  EXPECT_EQ(simple_klbss(big, 3, theta_for(8, 3, 0.1), 77), simple_klbss(big, 3, theta_for(8, 3, 0.1), 77));
}

TEST(Estimators, ZeroFloorCollapsesToBss) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Dataset data = bipartite_data(6, 2, 200, 0.1, 500 + seed);
    DesignCache cache(data);
    const ThetaSpec theta = theta_for(6, 2, 0.0);
    const IndexSet b = bss(cache, 2);
    ASSERT_EQ(simple_klbss(cache, 2, theta, seed), b) << seed;
    ASSERT_EQ(full_klbss(cache, 2, theta), b) << seed;
    ASSERT_EQ(vanilla_klbss(cache, 2, theta), b) << seed;
  }
}

TEST(FullKlbss, DoubleLoopOracle) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Dataset data = bipartite_data(5, 2, 150, 0.15, 40 + seed);
    const double floor = 0.15;
    const auto family = all_supports(5, 2, 100);
    std::vector<int> votes(family.size(), 0);
    for (std::size_t i = 0; i < family.size(); ++i) {
      for (std::size_t j = 0; j < family.size(); ++j) {
        if (i == j) continue;
        const double si = oracle::compare_score(data.x, data.y, family[i], family[j], floor);
        const double sj = oracle::compare_score(data.x, data.y, family[j], family[i], floor);
        if (si <= sj) ++votes[i];
      }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < family.size(); ++i) {
      const double ri = oracle::rss(data.x, data.y, family[i].members());
      const double rb = oracle::rss(data.x, data.y, family[best].members());
      if (votes[i] > votes[best] || (votes[i] == votes[best] && ri < rb)) best = i;
    }
    EXPECT_EQ(full_klbss(data, 2, theta_for(5, 2, floor)), family[best]) << seed;
  }
}

TEST(FullKlbss, GuardOnCandidateCount) {
  const Dataset data = bipartite_data(14, 7, 40, 0.1, 1);
  EXPECT_THROW(full_klbss(data, 7, theta_for(14, 7, 0.1)), TooManyCandidates);
}

TEST(VanillaKlbss, DisjointPairScoreRelation) {
  // disjoint candidates: W is empty, so both scores reduce to the vanilla one
  const Dataset data = motivating_data(400, 0.2, 8);
  DesignCache cache(data);
  const ThetaSpec theta = theta_for(6, 3, 0.2);
  const auto res = compare(cache, {0, 1, 2}, {3, 4, 5}, theta);
  EXPECT_NEAR(res.first.total, vanilla_score(cache, {0, 1, 2}, theta).total, 1e-12);
  EXPECT_NEAR(res.second.total, vanilla_score(cache, {3, 4, 5}, theta).total, 1e-12);
}

TEST(CompareUnknown, PenaltyCancelsAtEqualSize) {
  const Dataset data = motivating_data(300, 0.2, 4);
  const ThetaSpec theta = theta_for(6, 3, 0.2);
  for (double tau : {0.0, 0.01, 10.0})
    EXPECT_EQ(compare_unknown(data, {0, 1, 2}, {0, 3, 4}, theta, tau).winner, compare(data, {0, 1, 2}, {0, 3, 4}, theta).winner);
}

TEST(CompareUnknown, NoiselessSupersetLoses) {
  auto mp = make_motivating_example(6, 3, 0.2, 5.0);
  mp.model.noise_var = 0.0;
  const Dataset data = sample_dataset(mp.model, 100, 3);
  ThetaSpec theta = theta_for(6, 3, 0.2);
  theta.mode = ThetaSpec::Sparsity::upper_bound;
  for (double tau : {1e-6, 1e-3, 0.01}) {
    EXPECT_EQ(compare_unknown(data, {0, 1, 2}, {0, 1, 2, 4}, theta, tau).winner, (IndexSet{0, 1, 2}));
    EXPECT_EQ(klbss_unknown(data, 4, theta, tau, TournamentMode::full), (IndexSet{0, 1, 2}));
  }
}

TEST(CompareUnknown, StraightLineOracle) {
  const Dataset data = bipartite_data(6, 2, 300, 0.2, 17);
  ThetaSpec theta = theta_for(6, 3, 0.2);
  const double tau = 0.004;
  const IndexSet s{0, 1}, t{0, 2, 3};
  const auto res = compare_unknown(data, s, t, theta, tau);
  const double a = oracle::compare_score(data.x, data.y, s, t, 0.2) + 2 * tau;
  const double b = oracle::compare_score(data.x, data.y, t, s, 0.2) + 3 * tau;
  EXPECT_EQ(res.winner, a <= b ? s : t);
  EXPECT_NEAR(res.first.total, a - 2 * tau, 1e-9);
  EXPECT_NEAR(res.second.total, b - 3 * tau, 1e-9);
}

TEST(Bssu, LimitsAndOracle) {
  const Dataset data = bipartite_data(6, 2, 120, 0.3, 21);
  EXPECT_TRUE(bssu(data, 2, 1e9).empty());

  auto noiseless = make_motivating_example(4, 2, 0.3, 5.0);
  noiseless.model.noise_var = 0.0;
  const Dataset clean = sample_dataset(noiseless.model, 50, 4);
  EXPECT_EQ(bssu(clean, 3, 1e-6), (IndexSet{0, 1}));

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Dataset d = bipartite_data(6, 2, 100, 0.2, 60 + seed);
    const double tau = 0.002;
    IndexSet best;
    double best_score = std::numeric_limits<double>::infinity();
    for (unsigned size = 0; size <= 2; ++size) {
      for (unsigned mask = 0; mask < 64u; ++mask) {
        if (static_cast<unsigned>(__builtin_popcount(mask)) != size) continue;
        std::vector<std::size_t> cols;
        for (std::size_t j = 0; j < 6; ++j)
          if (mask >> j & 1u) cols.push_back(j);
        const double v = oracle::rss(d.x, d.y, cols) / (100.0 - size) + tau * size;
        const IndexSet c(cols);
        if (v < best_score || (v == best_score && c < best)) {
          best_score = v;
          best = c;
        }
      }
    }
    EXPECT_EQ(bssu(d, 2, tau), best) << seed;
  }
}

TEST(Lasso, MaxLambdaIsEmpty) {
  const Dataset data = bipartite_data(6, 2, 200, 0.3, 2);
  const auto path = lasso_path(data, 50);
  ASSERT_EQ(path.size(), 50u);
  EXPECT_TRUE(path.front().empty());
}

TEST(Lasso, OrthonormalSoftThreshold) {
  // columns with X^T X / n = I: the solution is soft-thresholding of X^T y / n
  const std::size_t n = 64, d = 4;
  Matrix h = Matrix::Ones(1, 1);
  while (h.rows() < static_cast<Eigen::Index>(n)) {
    const Eigen::Index k = h.rows();
    Matrix next(2 * k, 2 * k);
    next << h, h, h, -h;
    h = next;
  }
  Dataset data;
  data.x = h.leftCols(d);
  Vector coef(d);
  coef << 1.0, -0.6, 0.3, 0.0;
  Rng rng(3);
  data.y = data.x * coef;
  for (auto& v : data.y) v += 0.01 * rng.normal();
  const std::size_t nl = 30;
  const auto path = lasso_path(data, nl);
  const Vector c = data.x.transpose() * data.y / static_cast<double>(n);
  const double lmax = c.cwiseAbs().maxCoeff();
  for (std::size_t step = 0; step < nl; ++step) {
    const double lambda = lmax * std::pow(1e-3, static_cast<double>(step) / (nl - 1));
    std::vector<std::size_t> expected;
    for (std::size_t j = 0; j < d; ++j)
      if (std::abs(c(j)) > lambda * (1.0 + 1e-9)) expected.push_back(j);
    EXPECT_EQ(path[step], IndexSet(expected)) << step;
  }
}

TEST(Lasso, IrrepresentabilityFailure) {
  // gamma > 1 on the motivating example: exact recovery along the path is rare
  int hits = 0;
  const int reps = 50;
  for (int rep = 0; rep < reps; ++rep)
    hits += recovery_success(lasso_path(motivating_data(5000, 0.1, 900 + rep), 100), IndexSet{0, 1, 2});
  EXPECT_LE(static_cast<double>(hits) / reps, 0.1);
}

TEST(RecoverySuccess, Basics) {
  EXPECT_TRUE(recovery_success(IndexSet{1, 2}, IndexSet{1, 2}));
  EXPECT_FALSE(recovery_success(IndexSet{1, 2, 3}, IndexSet{1, 2}));
  EXPECT_TRUE(recovery_success(std::vector<IndexSet>{{}, {1}, {1, 2}, {1, 2, 3}}, IndexSet{1, 2}));
  EXPECT_FALSE(recovery_success(std::vector<IndexSet>{{}, {1}}, IndexSet{1, 2}));
}

TEST(Estimators, PermutationEquivariance) {
  const Dataset data = bipartite_data(6, 2, 300, 0.2, 5);
  const std::vector<std::size_t> perm{4, 2, 0, 5, 1, 3};
  Dataset p = data;
  for (std::size_t j = 0; j < 6; ++j) p.x.col(perm[j]) = data.x.col(j);
  auto map = [&](const IndexSet& s) {
    std::vector<std::size_t> out;
    for (std::size_t j : s) out.push_back(perm[j]);
    return IndexSet(out);
  };
  const ThetaSpec theta = theta_for(6, 2, 0.2);
  EXPECT_EQ(map(bss(data, 2)), bss(p, 2));
  EXPECT_EQ(map(full_klbss(data, 2, theta)), full_klbss(p, 2, theta));
  EXPECT_EQ(map(vanilla_klbss(data, 2, theta)), vanilla_klbss(p, 2, theta));
}

TEST(Estimators, NoiseScalingInvariance) {
  // scaling y by c and the floor by c leaves every decision unchanged
  const Dataset data = bipartite_data(6, 2, 300, 0.2, 6);
  Dataset scaled = data;
  scaled.y *= 3.0;
  EXPECT_EQ(full_klbss(data, 2, theta_for(6, 2, 0.2)), full_klbss(scaled, 2, theta_for(6, 2, 0.6)));
  EXPECT_EQ(simple_klbss(data, 2, theta_for(6, 2, 0.2), 4), simple_klbss(scaled, 2, theta_for(6, 2, 0.6), 4));
}
