#pragma once

// Monte-Carlo experiment harness: configuration, seeded replications over a
// sample-size grid, parallel evaluation with a deterministic merge, and CSV output.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "klbss/error.hpp"
#include "klbss/estimators.hpp"
#include "klbss/model_io.hpp"
#include "klbss/random.hpp"
#include "klbss/semgen.hpp"
#include "klbss/signals.hpp"
#include "klbss/theta.hpp"

namespace klbss {

enum class GraphKind { er, sf, bipartite, independent, motivating, gpc };
enum class Method { bss, simple_klbss, full_klbss, vanilla_klbss, bssu, klbss_unknown, lasso };

inline const char* graph_kind_name(GraphKind g) {
  switch (g) {
    case GraphKind::er: return "er";
    case GraphKind::sf: return "sf";
    case GraphKind::bipartite: return "bipartite";
    case GraphKind::independent: return "independent";
    case GraphKind::motivating: return "motivating";
    case GraphKind::gpc: return "gpc";
  }
  return "?";
}

inline std::optional<GraphKind> parse_graph_kind(const std::string& s) {
  for (GraphKind g : {GraphKind::er, GraphKind::sf, GraphKind::bipartite, GraphKind::independent, GraphKind::motivating,
                      GraphKind::gpc})
    if (s == graph_kind_name(g)) return g;
  return std::nullopt;
}

inline const char* method_name(Method m) {
  switch (m) {
    case Method::bss: return "bss";
    case Method::simple_klbss: return "simple_klbss";
    case Method::full_klbss: return "full_klbss";
    case Method::vanilla_klbss: return "vanilla_klbss";
    case Method::bssu: return "bssu";
    case Method::klbss_unknown: return "klbss_unknown";
    case Method::lasso: return "lasso";
  }
  return "?";
}

/// One estimator column of an experiment. `beta_min` overrides the floor of Theta
/// passed to the estimator; the label is "name" or "name@value".
struct MethodSpec {
  Method method = Method::bss;
  std::optional<double> beta_min;

  std::string label() const {
    std::string out = method_name(method);
    if (beta_min) out += "@" + format_real(*beta_min);
    return out;
  }

  /// Accepts "full_klbss" or "full_klbss@0.05".
  static MethodSpec parse(const std::string& text) {
    MethodSpec out;
    const auto at = text.find('@');
    const std::string name = text.substr(0, at);
    bool found = false;
    for (Method m : {Method::bss, Method::simple_klbss, Method::full_klbss, Method::vanilla_klbss, Method::bssu,
                     Method::klbss_unknown, Method::lasso}) {
      if (name == method_name(m)) {
        out.method = m;
        found = true;
      }
    }
    if (!found) throw ConfigError("unknown method '" + name + "'");
    if (at != std::string::npos) {
      try {
        std::size_t used = 0;
        const double v = std::stod(text.substr(at + 1), &used);
        if (used != text.size() - at - 1 || !(v >= 0.0)) throw std::invalid_argument("bad");
        out.beta_min = v;
      } catch (const std::exception&) {
        throw ConfigError("bad beta_min override in '" + text + "'");
      }
    }
    return out;
  }

  friend bool operator==(const MethodSpec&, const MethodSpec&) = default;
};

struct ExperimentConfig {
  GraphKind graph_kind = GraphKind::bipartite;
  double graph_param = 2.0;  // ER: edges per node; SF: attachments per node; GPC: weight b
  std::size_t d = 8;
  std::size_t s = 3;
  std::vector<std::size_t> n_grid{500, 900, 1300, 1700, 2100, 2500, 2900, 3200};
  std::size_t reps = 200;
  std::vector<MethodSpec> methods{{Method::bss, {}}, {Method::simple_klbss, {}}, {Method::full_klbss, {}}, {Method::lasso, {}}};
  double beta_min = 0.1;
  double b_min = 0.1;
  double b_max = 5.0;
  double sigma_min = 0.5;
  double sigma_max = 2.0;
  double noise_var = 1.0;
  bool signed_weights = true;
  std::optional<double> theta_beta_min;  // floor given to the estimators; defaults to beta_min
  std::size_t sbar = 0;                  // 0 means s
  std::optional<double> tau;             // defaults to beta_min^2 sigma_min^2 / 4
  std::size_t nlambda = 500;
  std::uint64_t base_seed = 20240601;
  bool fixed_graph = false;
  bool timing = false;
  bool strict = false;
  std::vector<double> misspec_grid{0.0, 0.01, 0.03, 0.05, 0.07, 0.09, 0.11, 0.13, 0.15, 0.17, 0.19};
  double independent_sigma_max = 1.0;
  std::string output_path;

  double effective_theta_beta_min() const { return theta_beta_min.value_or(beta_min); }
  std::size_t effective_sbar() const { return sbar == 0 ? s : sbar; }
  double effective_tau() const { return tau.value_or(beta_min * beta_min * sigma_min * sigma_min / 4.0); }
  SemParams sem_params() const { return {b_min, b_max, sigma_min, sigma_max, signed_weights}; }

  void validate() const {
    if (d < 2) throw ConfigError("d must be at least 2");
    if (s < 1) throw ConfigError("s must be at least 1");
    if (2 * s > d) throw ConfigError("s must not exceed d/2");
    if (reps < 1) throw ConfigError("reps must be at least 1");
    if (n_grid.empty()) throw ConfigError("n_grid must be nonempty");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
      if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw ConfigError("n_grid must be strictly increasing");
      if (n_grid[i] <= std::max(s, effective_sbar()) + 1) throw ConfigError("every n must exceed the support size");
    }
    if (methods.empty()) throw ConfigError("at least one method is required");
    if (!(beta_min >= 0.0)) throw ConfigError("beta_min must be nonnegative");
    if (!(b_min > 0.0) || !(b_max >= b_min)) throw ConfigError("need 0 < b_min <= b_max");
    if (!(sigma_min > 0.0) || !(sigma_max >= sigma_min)) throw ConfigError("need 0 < sigma_min <= sigma_max");
    if (!(noise_var > 0.0)) throw ConfigError("noise_var must be positive");
    if (theta_beta_min && !(*theta_beta_min >= 0.0)) throw ConfigError("theta_beta_min must be nonnegative");
    if (tau && !(*tau >= 0.0)) throw ConfigError("tau must be nonnegative");
    if (nlambda < 1) throw ConfigError("nlambda must be positive");
    if (!(graph_param >= 0.0)) throw ConfigError("graph_param must be nonnegative");
    if (graph_kind == GraphKind::sf && graph_param < 1.0) throw ConfigError("sf needs graph_param >= 1");
    if (graph_kind == GraphKind::gpc) {
      if (s % 2 != 0) throw ConfigError("gpc needs an even s");
      if (graph_param == 0.0) throw ConfigError("gpc needs a nonzero weight b");
      if (d < s + s / 2) throw ConfigError("gpc needs d >= 3s/2");
    }
    if (!(independent_sigma_max >= 1.0)) throw ConfigError("independent_sigma_max must be at least 1");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_real(const std::string& v, int line) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + v + "'", line);
  }
}

inline std::uint64_t parse_unsigned(const std::string& v, int line) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("expected a nonnegative integer, got '" + v + "'", line);
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError("integer out of range: '" + v + "'", line);
  }
}

inline bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected true or false, got '" + v + "'", line);
}

}  // namespace detail

/// Flat `key = value` text; '#' starts a comment. Missing keys keep their defaults.
inline ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig c;
  std::string raw;
  int line = 0;
  std::map<std::string, int> seen;
  while (std::getline(is, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const std::string text = detail::trim(raw);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (seen.count(key)) throw ConfigError("duplicate key '" + key + "'", line);
    seen[key] = line;
    using detail::parse_bool, detail::parse_real, detail::parse_unsigned;
    if (key == "graph_kind") {
      auto g = parse_graph_kind(value);
      if (!g) throw ConfigError("unknown graph_kind '" + value + "'", line);
      c.graph_kind = *g;
    } else if (key == "graph_param") {
      c.graph_param = parse_real(value, line);
    } else if (key == "d") {
      c.d = parse_unsigned(value, line);
    } else if (key == "s") {
      c.s = parse_unsigned(value, line);
    } else if (key == "n_grid") {
      c.n_grid.clear();
      for (const auto& item : detail::split_list(value)) c.n_grid.push_back(parse_unsigned(item, line));
    } else if (key == "reps") {
      c.reps = parse_unsigned(value, line);
    } else if (key == "methods") {
      c.methods.clear();
      try {
        for (const auto& item : detail::split_list(value)) c.methods.push_back(MethodSpec::parse(item));
      } catch (const ConfigError& e) {
        throw ConfigError(e.detail(), line);
      }
    } else if (key == "beta_min") {
      c.beta_min = parse_real(value, line);
    } else if (key == "b_min") {
      c.b_min = parse_real(value, line);
    } else if (key == "b_max") {
      c.b_max = parse_real(value, line);
    } else if (key == "sigma_min") {
      c.sigma_min = parse_real(value, line);
    } else if (key == "sigma_max") {
      c.sigma_max = parse_real(value, line);
    } else if (key == "noise_var") {
      c.noise_var = parse_real(value, line);
    } else if (key == "signed_weights") {
      c.signed_weights = parse_bool(value, line);
    } else if (key == "theta_beta_min") {
      c.theta_beta_min = parse_real(value, line);
    } else if (key == "sbar") {
      c.sbar = parse_unsigned(value, line);
    } else if (key == "tau") {
      c.tau = parse_real(value, line);
    } else if (key == "nlambda") {
      c.nlambda = parse_unsigned(value, line);
    } else if (key == "base_seed") {
      c.base_seed = parse_unsigned(value, line);
    } else if (key == "fixed_graph") {
      c.fixed_graph = parse_bool(value, line);
    } else if (key == "timing") {
      c.timing = parse_bool(value, line);
    } else if (key == "strict") {
      c.strict = parse_bool(value, line);
    } else if (key == "misspec_grid") {
      c.misspec_grid.clear();
      for (const auto& item : detail::split_list(value)) c.misspec_grid.push_back(parse_real(item, line));
    } else if (key == "independent_sigma_max") {
      c.independent_sigma_max = parse_real(value, line);
    } else if (key == "output") {
      c.output_path = value;
    } else {
      throw ConfigError("unknown key '" + key + "'", line);
    }
  }
  c.validate();
  return c;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

/// Canonical text form: every key in a fixed order.
inline std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream os;
  auto list = [](const auto& values, auto fmt) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + fmt(values[i]);
    return out;
  };
  auto real_list = [&](const std::vector<double>& v) { return list(v, [](double x) { return format_real(x); }); };
  auto opt = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string(); };
  os << "graph_kind = " << graph_kind_name(c.graph_kind) << '\n'
     << "graph_param = " << format_real(c.graph_param) << '\n'
     << "d = " << c.d << '\n'
     << "s = " << c.s << '\n'
     << "n_grid = " << list(c.n_grid, [](std::size_t n) { return std::to_string(n); }) << '\n'
     << "reps = " << c.reps << '\n'
     << "methods = " << list(c.methods, [](const MethodSpec& m) { return m.label(); }) << '\n'
     << "beta_min = " << format_real(c.beta_min) << '\n'
     << "b_min = " << format_real(c.b_min) << '\n'
     << "b_max = " << format_real(c.b_max) << '\n'
     << "sigma_min = " << format_real(c.sigma_min) << '\n'
     << "sigma_max = " << format_real(c.sigma_max) << '\n'
     << "noise_var = " << format_real(c.noise_var) << '\n'
     << "signed_weights = " << (c.signed_weights ? "true" : "false") << '\n';
  if (c.theta_beta_min) os << "theta_beta_min = " << opt(c.theta_beta_min) << '\n';
  os << "sbar = " << c.sbar << '\n';
  if (c.tau) os << "tau = " << opt(c.tau) << '\n';
  os << "nlambda = " << c.nlambda << '\n'
     << "base_seed = " << c.base_seed << '\n'
     << "fixed_graph = " << (c.fixed_graph ? "true" : "false") << '\n'
     << "timing = " << (c.timing ? "true" : "false") << '\n'
     << "strict = " << (c.strict ? "true" : "false") << '\n'
     << "misspec_grid = " << real_list(c.misspec_grid) << '\n'
     << "independent_sigma_max = " << format_real(c.independent_sigma_max) << '\n';
  if (!c.output_path.empty()) os << "output = " << c.output_path << '\n';
  return os.str();
}

struct RecoveryRecord {
  std::string graph_type;
  double k = 0.0;
  std::size_t d = 0, s = 0, n = 0;
  std::string method;
  std::size_t rep = 0;
  bool recovered = false;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
  std::string error;
};

inline std::string recovery_csv_header() { return "graph_type,k,d,s,n,method,rep,recovered,seed,wall_ms,error"; }

inline std::string recovery_csv_row(const RecoveryRecord& r) {
  std::string err = r.error;
  std::replace(err.begin(), err.end(), ',', ';');
  std::replace(err.begin(), err.end(), '\n', ' ');
  return r.graph_type + "," + format_real(r.k) + "," + std::to_string(r.d) + "," + std::to_string(r.s) + "," +
         std::to_string(r.n) + "," + r.method + "," + std::to_string(r.rep) + "," + (r.recovered ? "1" : "0") + "," +
         std::to_string(r.seed) + "," + format_real(r.wall_ms) + "," + err;
}

struct RunResult {
  std::vector<RecoveryRecord> records;
  std::size_t errors = 0;

  void write_csv(std::ostream& os) const {
    os << recovery_csv_header() << '\n';
    for (const auto& r : records) os << recovery_csv_row(r) << '\n';
  }

  /// Recovery frequency for (method label, n).
  double frequency(const std::string& method, std::size_t n) const {
    std::size_t hit = 0, total = 0;
    for (const auto& r : records) {
      if (r.method != method || r.n != n) continue;
      ++total;
      hit += r.recovered ? 1 : 0;
    }
    return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
  }
};

/// Seeds of one replication. The graph stream is shared across the n grid; the
/// data stream is specific to (replication, n).
struct ReplicateSeeds {
  std::uint64_t rep_seed = 0;
  std::uint64_t graph_seed = 0;

  std::uint64_t data_seed(std::size_t n) const { return mix_seed({rep_seed, hash_label("data"), n}); }
  std::uint64_t order_seed(std::size_t n) const { return mix_seed({rep_seed, hash_label("order"), n}); }
};

inline ReplicateSeeds replicate_seeds(const ExperimentConfig& c, const std::string& experiment, std::size_t rep) {
  ReplicateSeeds out;
  out.rep_seed = mix_seed({c.base_seed, hash_label(experiment), rep});
  out.graph_seed = c.fixed_graph ? mix_seed({c.base_seed, hash_label(experiment), hash_label("graph")})
                                 : mix_seed({out.rep_seed, hash_label("graph")});
  return out;
}

/// The SEM and target of one replication: beta = beta_min on [s] after relabeling.
inline ModelPair make_replicate_model(const ExperimentConfig& c, std::uint64_t graph_seed) {
  const SemParams p = c.sem_params();
  ModelPair out;
  switch (c.graph_kind) {
    case GraphKind::er:
      out.spec = gen_er(c.d, c.graph_param, p, graph_seed);
      break;
    case GraphKind::sf: {
      const auto attach = static_cast<std::size_t>(std::llround(c.graph_param));
      const SemSpec raw = gen_sf(c.d, attach, p, graph_seed);
      Rng relabel(mix_seed({graph_seed, hash_label("relabel")}));
      out.spec = permute_nodes(raw, relabel.permutation(c.d));
      break;
    }
    case GraphKind::bipartite:
      out.spec = gen_bipartite(c.d, c.s, p, graph_seed);
      break;
    case GraphKind::independent: {
      out.spec.dag = Dag(c.d, {});
      out.spec.noise_vars.assign(c.d, c.independent_sigma_max * c.independent_sigma_max);
      for (std::size_t j = 0; j < c.s; ++j) out.spec.noise_vars[j] = 1.0;
      break;
    }
    case GraphKind::motivating: {
      ModelPair m = make_motivating_example(c.d, c.s, c.beta_min, c.b_max);
      m.model.noise_var = c.noise_var;
      return m;
    }
    case GraphKind::gpc: {
      std::vector<std::size_t> a;
      for (std::size_t j = c.s + 1; j < c.s + c.s / 2; ++j) a.push_back(j);
      GpcExample g = make_gpc_example(c.s, c.graph_param, c.beta_min, c.sigma_min, IndexSet(a), c.d, c.noise_var);
      return {g.spec, g.model};
    }
  }
  out.model = attach_target(out.spec, IndexSet::range(c.s),
                            Vector::Constant(static_cast<Eigen::Index>(c.s), c.beta_min), c.noise_var);
  return out;
}

/// Runs one estimator and reports exact recovery of `truth`.
inline bool evaluate_method(DesignCache& cache, const MethodSpec& m, const ExperimentConfig& c, const IndexSet& truth,
                            std::uint64_t order_seed) {
  ThetaSpec theta;
  theta.d = c.d;
  theta.sparsity = c.s;
  theta.beta_min = m.beta_min.value_or(c.effective_theta_beta_min());
  switch (m.method) {
    case Method::bss:
      return recovery_success(bss(cache, c.s), truth);
    case Method::simple_klbss:
      return recovery_success(simple_klbss(cache, c.s, theta, order_seed), truth);
    case Method::full_klbss:
      return recovery_success(full_klbss(cache, c.s, theta), truth);
    case Method::vanilla_klbss:
      return recovery_success(vanilla_klbss(cache, c.s, theta), truth);
    case Method::bssu:
      return recovery_success(bssu(cache, c.effective_sbar(), c.effective_tau()), truth);
    case Method::klbss_unknown:
      theta.mode = ThetaSpec::Sparsity::upper_bound;
      theta.sparsity = c.effective_sbar();
      return recovery_success(
          klbss_unknown(cache, c.effective_sbar(), theta, c.effective_tau(), TournamentMode::full, order_seed), truth);
    case Method::lasso:
      return recovery_success(lasso_path(cache.data(), c.nlambda), truth);
  }
  return false;
}

/// Maps `task(i)` over i in [0, count) on `threads` workers; results keep index order.
template <class T, class Task>
std::vector<T> parallel_map(std::size_t count, unsigned threads, Task&& task) {
  std::vector<T> out(count);
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = task(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(count);
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        out[i] = task(i);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned used = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  pool.reserve(used);
  for (unsigned t = 0; t < used; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
  return out;
}

/// Every method sees the same dataset within a replication; rows are ordered by
/// (n, method, rep) regardless of the thread count.
inline RunResult run_methods(const ExperimentConfig& c, const std::vector<MethodSpec>& methods,
                             const std::string& experiment, unsigned threads) {
  c.validate();
  const std::size_t cells = c.n_grid.size() * methods.size();
  using RepRows = std::vector<RecoveryRecord>;  // indexed by n_index * |methods| + method_index
  auto run_rep = [&](std::size_t rep) {
    RepRows rows(cells);
    const ReplicateSeeds seeds = replicate_seeds(c, experiment, rep);
    const ModelPair mp = make_replicate_model(c, seeds.graph_seed);
    const IndexSet truth = mp.model.support();
    for (std::size_t ni = 0; ni < c.n_grid.size(); ++ni) {
      const std::size_t n = c.n_grid[ni];
      const Dataset data = sample_dataset(mp.model, n, seeds.data_seed(n));
      DesignCache cache(data);
      for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        RecoveryRecord& r = rows[ni * methods.size() + mi];
        r.graph_type = graph_kind_name(c.graph_kind);
        r.k = c.graph_param;
        r.d = c.d;
        r.s = c.s;
        r.n = n;
        r.method = methods[mi].label();
        r.rep = rep;
        r.seed = seeds.rep_seed;
        const auto start = std::chrono::steady_clock::now();
        try {
          r.recovered = evaluate_method(cache, methods[mi], c, truth, seeds.order_seed(n));
        } catch (const error& e) {
          r.recovered = false;
          r.error = e.what();
        }
        if (c.timing)
          r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      }
    }
    return rows;
  };
  const auto per_rep = parallel_map<RepRows>(c.reps, threads, run_rep);

  RunResult out;
  out.records.reserve(cells * c.reps);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    for (std::size_t rep = 0; rep < c.reps; ++rep) {
      const RecoveryRecord& r = per_rep[rep][cell];
      if (!r.error.empty()) ++out.errors;
      out.records.push_back(r);
    }
  }
  return out;
}

inline RunResult run_recovery(const ExperimentConfig& c, unsigned threads = 1) {
  return run_methods(c, c.methods, "recover", threads);
}

/// BSS, correctly specified Full klBSS, and Full klBSS at every misspecified floor.
inline RunResult run_misspec(const ExperimentConfig& c, unsigned threads = 1) {
  if (c.misspec_grid.empty()) throw ConfigError("misspec_grid must be nonempty");
  std::vector<MethodSpec> methods{{Method::bss, {}}, {Method::full_klbss, {}}};
  for (double b : c.misspec_grid) methods.push_back({Method::full_klbss, b});
  return run_methods(c, methods, "misspec", threads);
}

/// Empty graph: unit variance on [s], independent_sigma_max^2 elsewhere.
inline RunResult run_independent(ExperimentConfig c, unsigned threads = 1) {
  c.graph_kind = GraphKind::independent;
  return run_methods(c, c.methods, "independent", threads);
}

struct SignalCurveRow {
  std::size_t r = 0;
  double delta1 = 0.0, delta2 = 0.0, delta2_tilde = 0.0;
};

/// Signals on the motivating example with d = 2s, S* = [s], against the
/// alternative that swaps the first r members of S* for the first r second-layer nodes.
inline std::vector<SignalCurveRow> run_signal_curves(std::size_t s, double beta_min, double beta_max) {
  const ModelPair mp = make_motivating_example(2 * s, s, beta_min, beta_max);
  ThetaSpec theta;
  theta.d = 2 * s;
  theta.sparsity = s;
  theta.beta_min = beta_min;
  const IndexSet truth = IndexSet::range(s);
  std::vector<SignalCurveRow> out;
  for (std::size_t r = 1; r <= s; ++r) {
    std::vector<std::size_t> t;
    for (std::size_t j = r; j < s; ++j) t.push_back(j);
    for (std::size_t j = 0; j < r; ++j) t.push_back(s + j);
    const SignalReport rep = signal_report(mp.model, truth, IndexSet(t), theta);
    out.push_back({r, rep.delta1, rep.delta2, rep.delta2_tilde});
  }
  return out;
}

inline void write_signal_curves(std::ostream& os, const std::vector<SignalCurveRow>& rows) {
  os << "r,delta1,delta2,delta2_tilde\n";
  for (const auto& row : rows)
    os << row.r << ',' << format_real(row.delta1) << ',' << format_real(row.delta2) << ','
       << format_real(row.delta2_tilde) << '\n';
}

enum class Construction { prop43, thm51, gpc_bound };

inline std::optional<Construction> parse_construction(const std::string& s) {
  if (s == "prop43") return Construction::prop43;
  if (s == "thm51") return Construction::thm51;
  if (s == "gpc_bound") return Construction::gpc_bound;
  return std::nullopt;
}

/// Smallest LDL pivot of the equicorrelation matrix at each d.
inline void report_prop43(std::ostream& os, double omega, const std::vector<std::size_t>& dims) {
  os << "d,min_d,omega,gap\n";
  for (std::size_t d : dims) {
    const double m = ldl_decompose(make_equicorrelation(d, omega)).diag.minCoeff();
    os << d << ',' << format_real(m) << ',' << format_real(omega) << ',' << format_real(m - omega) << '\n';
  }
}

/// KL between the two collider models for a range of delta on S -> W <- T.
inline void report_thm51(std::ostream& os, const std::vector<double>& deltas) {
  const Dag dag(3, {{0, 2}, {1, 2}});
  os << "delta,kl,kl_over_delta2\n";
  for (double delta : deltas) {
    const auto pair = make_indistinguishable_pair(dag, delta);
    const double kl = kl_linear_models(pair.first.beta, pair.second.beta, pair.first.sigma, pair.first.noise_var);
    os << format_real(delta) << ',' << format_real(kl) << ',' << format_real(kl / (delta * delta)) << '\n';
  }
}

/// Signal of the path-cancellation model against its displayed alternative, and the bound.
inline void report_gpc_bound(std::ostream& os, std::size_t s, double beta_min, double sigma_min, double noise_var,
                             const std::vector<double>& weights) {
  os << "b,signal,bound\n";
  std::vector<std::size_t> a;
  for (std::size_t j = s + 1; j < s + s / 2; ++j) a.push_back(j);
  for (double b : weights) {
    const GpcExample g = make_gpc_example(s, b, beta_min, sigma_min, IndexSet(a), 0, noise_var);
    ThetaSpec theta;
    theta.beta_min = beta_min;
    const SignalReport rep = signal_report(g.model, g.model.support(), g.alt_support, theta);
    const double bound = beta_min * beta_min * sigma_min * sigma_min / (b * b * noise_var);
    os << format_real(b) << ',' << format_real(rep.signal()) << ',' << format_real(bound) << '\n';
  }
}

}  // namespace klbss
