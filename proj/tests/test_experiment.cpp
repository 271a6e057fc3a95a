#include <gtest/gtest.h>

#include <sstream>

#include "klbss/experiment.hpp"
#include "oracles.hpp"

using namespace klbss;

namespace {

ExperimentConfig parse_text(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

ExperimentConfig small_config() {
  return parse_text(
      "d = 6\n"
      "s = 2\n"
      "n_grid = 100, 300\n"
      "reps = 6\n"
      "methods = bss, simple_klbss, full_klbss, vanilla_klbss, bssu, klbss_unknown, lasso\n"
      "nlambda = 40\n");
}

std::string csv_of(const RunResult& r) {
  std::ostringstream os;
  r.write_csv(os);
  return os.str();
}

}  // namespace

TEST(Config, EmptyGivesDefaults) {
  const ExperimentConfig c = parse_text("# nothing\n\n");
  const ExperimentConfig def;
  EXPECT_EQ(serialize_config(c), serialize_config(def));
  EXPECT_EQ(c.d, 8u);
  EXPECT_EQ(c.s, 3u);
  EXPECT_EQ(c.reps, 200u);
  EXPECT_DOUBLE_EQ(c.effective_tau(), 0.1 * 0.1 * 0.25 / 4.0);
  EXPECT_DOUBLE_EQ(c.effective_theta_beta_min(), 0.1);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_text("d = 6\ns = 4\n"), ConfigError);
  EXPECT_THROW(parse_text("d = 6\nd = 7\n"), ConfigError);
  EXPECT_THROW(parse_text("colour = red\n"), ConfigError);
  EXPECT_THROW(parse_text("d\n"), ConfigError);
  EXPECT_THROW(parse_text("n_grid = 500, 400\n"), ConfigError);
  EXPECT_THROW(parse_text("reps = -3\n"), ConfigError);
  EXPECT_THROW(parse_text("methods = bss, magic\n"), ConfigError);
  EXPECT_THROW(parse_text("graph_kind = lattice\n"), ConfigError);
  try {
    parse_text("d = 6\n\nfoo = 1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Config, RoundTrip) {
  const ExperimentConfig c = parse_text(
      "graph_kind = sf\ngraph_param = 2\nd = 7\ns = 3\nn_grid = 500, 1200\nreps = 10\n"
      "methods = bss, full_klbss@0.03\ntau = 0.002\nfixed_graph = true\nbase_seed = 42\n");
  const std::string text = serialize_config(c);
  EXPECT_EQ(serialize_config(parse_text(text)), text);
  EXPECT_NE(text.find("full_klbss@0.03"), std::string::npos);
}

TEST(MethodSpecParse, Forms) {
  EXPECT_EQ(MethodSpec::parse("lasso").method, Method::lasso);
  const MethodSpec m = MethodSpec::parse("full_klbss@0.05");
  EXPECT_EQ(m.method, Method::full_klbss);
  ASSERT_TRUE(m.beta_min.has_value());
  EXPECT_DOUBLE_EQ(*m.beta_min, 0.05);
  EXPECT_EQ(m.label(), "full_klbss@0.05");
  EXPECT_THROW(MethodSpec::parse("full_klbss@x"), ConfigError);
  EXPECT_THROW(MethodSpec::parse("full_klbss@-1"), ConfigError);
  EXPECT_THROW(MethodSpec::parse("nope"), ConfigError);
}

TEST(FormatReal, ShortestRoundTrip) {
  EXPECT_EQ(format_real(0.03), "0.03");
  EXPECT_EQ(format_real(1.0), "1");
  const double third = 1.0 / 3.0;
  EXPECT_EQ(std::stod(format_real(third)), third);
}

TEST(Seeds, Structure) {
  ExperimentConfig c;
  const auto a = replicate_seeds(c, "recover", 0);
  const auto b = replicate_seeds(c, "recover", 1);
  EXPECT_NE(a.rep_seed, b.rep_seed);
  EXPECT_NE(a.graph_seed, b.graph_seed);
  EXPECT_NE(a.data_seed(500), a.data_seed(900));
  EXPECT_NE(a.data_seed(500), a.order_seed(500));
  EXPECT_NE(replicate_seeds(c, "misspec", 0).rep_seed, a.rep_seed);
  c.fixed_graph = true;
  EXPECT_EQ(replicate_seeds(c, "recover", 0).graph_seed, replicate_seeds(c, "recover", 5).graph_seed);
}

TEST(Run, SingleReplicateSingleRow) {
  ExperimentConfig c = small_config();
  c.reps = 1;
  c.n_grid = {200};
  c.methods = {MethodSpec{Method::bss, {}}};
  const RunResult r = run_recovery(c);
  ASSERT_EQ(r.records.size(), 1u);
  const std::string csv = csv_of(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), recovery_csv_header());
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(Run, ShapeOrderingAndDeterminism) {
  const ExperimentConfig c = small_config();
  const RunResult one = run_recovery(c, 1);
  EXPECT_EQ(one.records.size(), c.n_grid.size() * c.methods.size() * c.reps);
  EXPECT_EQ(one.errors, 0u);
  // (n, method, rep) order
  std::size_t i = 0;
  for (std::size_t n : c.n_grid)
    for (const auto& m : c.methods)
      for (std::size_t rep = 0; rep < c.reps; ++rep, ++i) {
        ASSERT_EQ(one.records[i].n, n);
        ASSERT_EQ(one.records[i].method, m.label());
        ASSERT_EQ(one.records[i].rep, rep);
        ASSERT_DOUBLE_EQ(one.records[i].wall_ms, 0.0);
      }
  const std::string a = csv_of(one);
  EXPECT_EQ(a, csv_of(run_recovery(c, 1)));
  EXPECT_EQ(a, csv_of(run_recovery(c, 3)));
  ExperimentConfig other = c;
  other.base_seed += 1;
  EXPECT_NE(a, csv_of(run_recovery(other, 1)));
}

TEST(Run, AllGraphKinds) {
  for (const char* kind : {"er", "sf", "bipartite", "independent", "motivating", "gpc"}) {
    ExperimentConfig c = small_config();
    c.graph_kind = *parse_graph_kind(kind);
    c.graph_param = c.graph_kind == GraphKind::gpc ? 3.0 : 1.0;
    c.reps = 2;
    if (c.graph_kind == GraphKind::motivating) c.d = 4;
    const RunResult r = run_recovery(c);
    EXPECT_EQ(r.errors, 0u) << kind;
    EXPECT_EQ(r.records.front().graph_type, kind);
  }
}

TEST(Run, MisspecZeroFloorMatchesBss) {
  ExperimentConfig c = parse_text("graph_kind = sf\ngraph_param = 2\nd = 7\ns = 3\nn_grid = 200, 600\nreps = 10\n");
  c.misspec_grid = {0.0, 0.05};
  const RunResult r = run_misspec(c);
  for (std::size_t n : c.n_grid) {
    std::vector<bool> bss_hits, zero_hits;
    for (const auto& rec : r.records) {
      if (rec.n != n) continue;
      if (rec.method == "bss") bss_hits.push_back(rec.recovered);
      if (rec.method == "full_klbss@0") zero_hits.push_back(rec.recovered);
    }
    ASSERT_EQ(bss_hits.size(), c.reps);
    EXPECT_EQ(bss_hits, zero_hits) << n;
  }
}

TEST(Run, StrictErrorsAreRecorded) {
  ExperimentConfig c = parse_text("d = 14\ns = 7\nn_grid = 100\nreps = 2\nmethods = full_klbss, bss\n");
  const RunResult r = run_recovery(c);
  EXPECT_EQ(r.errors, 2u);
  EXPECT_NE(csv_of(r).find("TooManyCandidates"), std::string::npos);
}

TEST(SignalCurves, FirstTermMatchesInverseOracle) {
  const std::size_t s = 4;
  const auto rows = run_signal_curves(s, 0.1, 5.0);
  ASSERT_EQ(rows.size(), s);
  const auto mp = make_motivating_example(2 * s, s, 0.1, 5.0);
  for (const auto& row : rows) {
    std::vector<std::size_t> sp, t;
    for (std::size_t j = 0; j < row.r; ++j) sp.push_back(j);
    for (std::size_t j = row.r; j < s; ++j) t.push_back(j);
    for (std::size_t j = 0; j < row.r; ++j) t.push_back(s + j);
    const Matrix cond = oracle::conditional_by_inverse(mp.model.sigma, IndexSet(sp), IndexSet(t));
    const Vector b = Vector::Constant(static_cast<Eigen::Index>(row.r), 0.1);
    EXPECT_NEAR(row.delta1, b.dot(cond * b), 1e-10) << row.r;
    EXPECT_LE(row.delta2, row.delta2_tilde + 1e-12);
  }
  std::ostringstream os;
  write_signal_curves(os, rows);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "r,delta1,delta2,delta2_tilde");
}

TEST(Construct, ReportsHaveHeaders) {
  std::ostringstream a, b, c;
  report_prop43(a, 0.5, {10, 20});
  report_thm51(b, {0.1, 0.05});
  report_gpc_bound(c, 4, 0.1, 1.0, 1.0, {1.0, 2.0});
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "d,min_d,omega,gap");
  EXPECT_EQ(b.str().substr(0, b.str().find('\n')), "delta,kl,kl_over_delta2");
  EXPECT_EQ(c.str().substr(0, c.str().find('\n')), "b,signal,bound");
  const std::string rows = a.str();
  EXPECT_EQ(std::count(rows.begin(), rows.end(), '\n'), 3);
}
