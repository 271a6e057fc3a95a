#pragma once

// Line-oriented text format for SEMs with an optional attached target:
//
//   d s
//   j k b_jk          (one line per edge)
//   sigma2 v_1 ... v_d
//   beta v_1 ... v_d
//   noise sigma2
//
// Reals are written in the shortest form that round-trips exactly.

#include <cstdio>
#include <cstdlib>
#include <map>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "klbss/error.hpp"
#include "klbss/semgen.hpp"

namespace klbss {

// Shortest %g form that reads back to the same double.
inline std::string format_real(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

struct ModelFile {
  SemSpec spec;
  std::optional<LinearModel> model;
};

inline void write_model(std::ostream& os, const SemSpec& spec, const LinearModel* model = nullptr) {
  const std::size_t d = spec.size();
  os << d << ' ' << (model ? model->support().size() : 0) << '\n';
  for (const auto& [e, b] : spec.coeffs) os << e.first << ' ' << e.second << ' ' << format_real(b) << '\n';
  os << "sigma2";
  for (double v : spec.noise_vars) os << ' ' << format_real(v);
  os << '\n';
  if (model) {
    os << "beta";
    for (Eigen::Index j = 0; j < model->beta.size(); ++j) os << ' ' << format_real(model->beta(j));
    os << "\nnoise " << format_real(model->noise_var) << '\n';
  }
}

inline ModelFile read_model(std::istream& is) {
  std::string line;
  int line_no = 0;
  auto next_line = [&](std::string& out) {
    while (std::getline(is, out)) {
      ++line_no;
      const auto first = out.find_first_not_of(" \t\r");
      if (first == std::string::npos || out[first] == '#') continue;
      return true;
    }
    return false;
  };
  auto bad = [&](const std::string& why) { return ParseError("line " + std::to_string(line_no) + ": " + why); };

  if (!next_line(line)) throw ParseError("empty model file");
  std::size_t d = 0, s = 0;
  {
    std::istringstream hs(line);
    if (!(hs >> d >> s)) throw bad("header must be 'd s'");
  }
  std::vector<Edge> edges;
  std::map<Edge, double> coeffs;
  std::vector<double> noise;
  std::optional<Vector> beta;
  std::optional<double> target_noise;

  auto read_vector = [&](std::istringstream& ls) {
    std::vector<double> v;
    double x;
    while (ls >> x) v.push_back(x);
    if (v.size() != d) throw bad("expected " + std::to_string(d) + " values");
    return v;
  };

  while (next_line(line)) {
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "sigma2") {
      noise = read_vector(ls);
    } else if (head == "beta") {
      const auto v = read_vector(ls);
      beta = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    } else if (head == "noise") {
      double v;
      if (!(ls >> v)) throw bad("noise line needs a value");
      target_noise = v;
    } else {
      std::istringstream es(line);
      std::size_t j, k;
      double b;
      if (!(es >> j >> k >> b)) throw bad("expected 'j k b_jk'");
      edges.emplace_back(j, k);
      coeffs[{j, k}] = b;
    }
  }
  if (noise.empty() && d > 0) throw ParseError("missing sigma2 line");

  ModelFile out;
  try {
    out.spec.dag = Dag(d, std::move(edges));
  } catch (const error& e) {
    throw ParseError(e.what());
  }
  out.spec.coeffs = std::move(coeffs);
  out.spec.noise_vars = std::move(noise);
  out.spec.validate();
  if (beta) {
    LinearModel m;
    m.beta = *beta;
    m.sigma = sem_covariance(out.spec);
    m.noise_var = target_noise.value_or(1.0);
    if (m.support().size() != s) throw ParseError("header sparsity differs from the beta line");
    out.model = std::move(m);
  }
  return out;
}

}  // namespace klbss
