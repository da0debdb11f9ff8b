#pragma once

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fbz/space.hpp"

namespace fbz {

namespace detail {

inline std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& tok) {
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str()) throw std::runtime_error("bad number: " + tok);
  return v;
}

}  // namespace detail

// Columnar space format:
//   fbz-space v1 N=<n> dim=<d> metric=<mode>
//   <id> <x> [y [z]] <weight>            (17 significant digits, round-trips bit-exactly)
// For geodesic-graph spaces an `edges <E>` section follows the points; for
// precomputed metrics a `dists` section holds the row-major matrix.
inline void save_space(const DiscreteSpace& s, std::ostream& os) {
  os << "fbz-space v1 N=" << s.size() << " dim=" << s.dim()
     << " metric=" << to_string(s.metric_mode()) << "\n";
  for (int i = 0; i < s.size(); ++i) {
    os << i;
    for (int k = 0; k < s.dim(); ++k) os << ' ' << detail::fmt17(s.coord(i)[k]);
    os << ' ' << detail::fmt17(s.weight(i)) << "\n";
  }
  if (s.metric_mode() == MetricMode::geodesic_graph) {
    os << "edges " << s.graph_edges().size() << "\n";
    for (auto& e : s.graph_edges()) os << e.first << ' ' << e.second << "\n";
  } else if (s.metric_mode() == MetricMode::precomputed) {
    os << "dists\n";
    for (int i = 0; i < s.size(); ++i) {
      for (int j = 0; j < s.size(); ++j) os << (j ? " " : "") << detail::fmt17(s.dist(i, j));
      os << "\n";
    }
  }
}

inline void save_space(const DiscreteSpace& s, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  save_space(s, os);
}

inline DiscreteSpace load_space(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("empty space file");
  std::istringstream hs(header);
  std::string magic, ver, kv;
  hs >> magic >> ver;
  if (magic != "fbz-space" || ver != "v1")
    throw std::runtime_error("not a fbz-space v1 file");
  int n = -1, dim = -1;
  MetricMode mode = MetricMode::euclidean;
  while (hs >> kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    if (key == "N") n = std::stoi(val);
    else if (key == "dim") dim = std::stoi(val);
    else if (key == "metric") mode = metric_mode_from(val);
  }
  if (n < 0 || dim < 1) throw std::runtime_error("bad fbz-space header");
  std::vector<DiscreteSpace::Point> coords(n, {0, 0, 0});
  std::vector<double> weights(n, 0.0);
  for (int i = 0; i < n; ++i) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("truncated fbz-space file");
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    int id = std::stoi(tok);
    if (id < 0 || id >= n) throw std::runtime_error("point id out of range");
    for (int k = 0; k < dim; ++k) {
      ls >> tok;
      coords[id][k] = detail::parse_double(tok);
    }
    ls >> tok;
    weights[id] = detail::parse_double(tok);
  }
  auto s = DiscreteSpace::make(std::move(coords), dim, std::move(weights), mode);
  std::string section;
  if (is >> section) {
    if (section == "edges") {
      std::size_t e;
      is >> e;
      std::vector<std::pair<int, int>> edges(e);
      for (auto& ed : edges) is >> ed.first >> ed.second;
      s.set_graph(std::move(edges));
    } else if (section == "dists") {
      std::vector<double> d((std::size_t)n * n);
      for (auto& x : d) {
        std::string tok;
        is >> tok;
        x = detail::parse_double(tok);
      }
      s.set_precomputed(std::move(d));
    }
  }
  return s;
}

inline DiscreteSpace load_space_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return load_space(is);
}

}  // namespace fbz

#include "fbz/energy.hpp"

namespace fbz {

// Edge-list form format:
//   fbz-form v1 p=<p> E=<count>
//   <i> <j> <w>
// The vertex count is the largest index plus one.
inline void save_form(const EnergyForm& form, std::ostream& os) {
  os << "fbz-form v1 p=" << detail::fmt17(form.p()) << " E=" << form.edges().size() << "\n";
  for (const auto& e : form.edges())
    os << e.i << ' ' << e.j << ' ' << detail::fmt17(e.w) << "\n";
}

inline void save_form(const EnergyForm& form, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  save_form(form, os);
}

inline EnergyForm load_form(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw std::runtime_error("empty form file");
  std::istringstream hs(header);
  std::string magic, ver, kv;
  hs >> magic >> ver;
  if (magic != "fbz-form" || ver != "v1") throw std::runtime_error("not a fbz-form v1 file");
  double p = 0.0;
  std::size_t count = 0;
  while (hs >> kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    if (key == "p") p = detail::parse_double(val);
    else if (key == "E") count = std::stoul(val);
  }
  std::vector<EnergyForm::Edge> edges(count);
  int n = 0;
  for (auto& e : edges) {
    std::string tok;
    is >> e.i >> e.j >> tok;
    e.w = detail::parse_double(tok);
    n = std::max({n, e.i + 1, e.j + 1});
  }
  return EnergyForm(p, n, std::move(edges));
}

inline EnergyForm load_form_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return load_form(is);
}

}  // namespace fbz
