#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fbz/space.hpp"

namespace fbz {

enum class FractalKind { interval, square, vicsek, gasket, carpet };

inline const char* to_string(FractalKind k) {
  switch (k) {
    case FractalKind::interval: return "interval";
    case FractalKind::square: return "square";
    case FractalKind::vicsek: return "vicsek";
    case FractalKind::gasket: return "gasket";
    case FractalKind::carpet: return "carpet";
  }
  return "interval";
}

inline FractalKind fractal_kind_from(const std::string& s) {
  if (s == "interval") return FractalKind::interval;
  if (s == "square") return FractalKind::square;
  if (s == "vicsek") return FractalKind::vicsek;
  if (s == "gasket") return FractalKind::gasket;
  if (s == "carpet") return FractalKind::carpet;
  throw std::invalid_argument("unknown fractal kind: " + s);
}

inline int contraction_count(FractalKind k) {
  switch (k) {
    case FractalKind::interval: return 2;
    case FractalKind::square: return 4;
    case FractalKind::vicsek: return 5;
    case FractalKind::gasket: return 3;
    case FractalKind::carpet: return 8;
  }
  return 2;
}

inline int length_base(FractalKind k) {
  switch (k) {
    case FractalKind::vicsek:
    case FractalKind::carpet: return 3;
    default: return 2;
  }
}

// A level-n pre-fractal: the space, its cells (vertex id lists) and the
// lattice graph (intra-cell cliques for gasket/vicsek, cell sides for
// square/carpet, the chain for the interval).
struct Prefractal {
  DiscreteSpace space;
  FractalKind kind = FractalKind::interval;
  int level = 0;
  int maps = 2;             // number of contraction maps M
  double cell_size = 1.0;   // side of a level-n cell
  double lattice_h = 1.0;   // nearest-neighbour spacing
  std::vector<std::vector<int>> cells;
  std::vector<std::pair<int, int>> lattice_edges;
};

namespace detail {

// Keeps base-b digit pairs of (a, b) inside the allowed pattern.
inline bool cell_alive(FractalKind kind, long a, long b, int level, int base) {
  for (int k = 0; k < level; ++k) {
    int da = a % base, db = b % base;
    a /= base;
    b /= base;
    if (kind == FractalKind::carpet) {
      if (da == 1 && db == 1) return false;
    } else {  // vicsek
      bool ok = (da == 1 && db == 1) || ((da == 0 || da == 2) && (db == 0 || db == 2));
      if (!ok) return false;
    }
  }
  return true;
}

struct VertexInterner {
  std::map<std::pair<long, long>, int> ids;
  std::vector<std::pair<long, long>> keys;
  int intern(long a, long b) {
    auto it = ids.find({a, b});
    if (it != ids.end()) return it->second;
    int id = (int)keys.size();
    ids.emplace(std::make_pair(a, b), id);
    keys.push_back({a, b});
    return id;
  }
};

inline void add_clique(std::vector<std::pair<int, int>>& edges, const std::vector<int>& vs) {
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      int a = std::min(vs[i], vs[j]), b = std::max(vs[i], vs[j]);
      edges.push_back({a, b});
    }
}

inline void dedupe_edges(std::vector<std::pair<int, int>>& edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

}  // namespace detail

inline std::size_t default_point_cap() { return 3'000'000; }

// Level-`level` pre-fractal with the self-similar measure: each cell carries
// mass M^-level split equally over its vertices.
inline Prefractal build_fractal(FractalKind kind, int level,
                                MetricMode mode = MetricMode::euclidean,
                                std::size_t point_cap = default_point_cap()) {
  using detail::VertexInterner;
  if (level < 0) throw std::invalid_argument("build_fractal: negative level");
  Prefractal f;
  f.kind = kind;
  f.level = level;
  f.maps = contraction_count(kind);
  const int base = length_base(kind);
  double denom = 1.0;
  for (int k = 0; k < level; ++k) denom *= base;
  f.cell_size = 1.0 / denom;

  // size precheck against the cap
  double cells_est = 1.0;
  for (int k = 0; k < level; ++k) cells_est *= f.maps;
  double pts_est = cells_est * 4.0 + 4.0;
  if (kind == FractalKind::interval) pts_est = cells_est + 1;
  if (kind == FractalKind::square) pts_est = (denom + 1) * (denom + 1);
  if (pts_est > (double)point_cap)
    throw std::length_error("build_fractal: level " + std::to_string(level) + " needs ~" +
                            std::to_string((std::size_t)pts_est) + " points, cap " +
                            std::to_string(point_cap));

  std::vector<DiscreteSpace::Point> coords;
  std::vector<double> mass;
  double cell_mass = 1.0 / cells_est;
  int dim = (kind == FractalKind::interval) ? 1 : 2;

  auto finish_cell = [&](std::vector<int>& vs) {
    double share = cell_mass / vs.size();
    for (int v : vs) mass[v] += share;
    f.cells.push_back(vs);
  };

  if (kind == FractalKind::interval) {
    long n = (long)denom;
    coords.resize(n + 1);
    mass.assign(n + 1, 0.0);
    for (long i = 0; i <= n; ++i) coords[i] = {double(i) / denom, 0.0, 0.0};
    for (long i = 0; i < n; ++i) {
      std::vector<int> vs = {(int)i, (int)(i + 1)};
      finish_cell(vs);
      f.lattice_edges.push_back({(int)i, (int)(i + 1)});
    }
    f.lattice_h = f.cell_size;
  } else if (kind == FractalKind::square) {
    long n = (long)denom;
    long side = n + 1;
    coords.resize(side * side);
    mass.assign(side * side, 0.0);
    for (long b = 0; b < side; ++b)
      for (long a = 0; a < side; ++a)
        coords[b * side + a] = {double(a) / denom, double(b) / denom, 0.0};
    for (long b = 0; b < n; ++b)
      for (long a = 0; a < n; ++a) {
        int v00 = (int)(b * side + a), v10 = v00 + 1;
        int v01 = (int)((b + 1) * side + a), v11 = v01 + 1;
        std::vector<int> vs = {v00, v10, v01, v11};
        finish_cell(vs);
        f.lattice_edges.push_back({v00, v10});
        f.lattice_edges.push_back({v00, v01});
        f.lattice_edges.push_back({v10, v11});
        f.lattice_edges.push_back({v01, v11});
      }
    f.lattice_h = f.cell_size;
  } else if (kind == FractalKind::vicsek || kind == FractalKind::carpet) {
    long n = (long)denom;
    VertexInterner vi;
    std::vector<std::vector<int>> cell_list;
    for (long b = 0; b < n; ++b)
      for (long a = 0; a < n; ++a) {
        if (!detail::cell_alive(kind, a, b, level, base)) continue;
        int v00 = vi.intern(a, b), v10 = vi.intern(a + 1, b);
        int v01 = vi.intern(a, b + 1), v11 = vi.intern(a + 1, b + 1);
        cell_list.push_back({v00, v10, v01, v11});
      }
    coords.resize(vi.keys.size());
    mass.assign(vi.keys.size(), 0.0);
    for (std::size_t i = 0; i < vi.keys.size(); ++i)
      coords[i] = {double(vi.keys[i].first) / denom, double(vi.keys[i].second) / denom, 0.0};
    for (auto& vs : cell_list) {
      std::vector<int> cp = vs;
      finish_cell(cp);
      if (kind == FractalKind::vicsek) {
        detail::add_clique(f.lattice_edges, vs);
      } else {
        f.lattice_edges.push_back({std::min(vs[0], vs[1]), std::max(vs[0], vs[1])});
        f.lattice_edges.push_back({std::min(vs[0], vs[2]), std::max(vs[0], vs[2])});
        f.lattice_edges.push_back({std::min(vs[1], vs[3]), std::max(vs[1], vs[3])});
        f.lattice_edges.push_back({std::min(vs[2], vs[3]), std::max(vs[2], vs[3])});
      }
    }
    f.lattice_h = f.cell_size;
  } else {  // gasket
    // Integer lattice (a, b): x = h (a + b/2), y = h b sqrt(3)/2, h = 2^-level.
    VertexInterner vi;
    struct Tri { long a0, b0, a1, b1, a2, b2; };
    std::vector<Tri> tris = {{0, 0, (long)denom, 0, 0, (long)denom}};
    for (int k = 0; k < level; ++k) {
      std::vector<Tri> next;
      next.reserve(tris.size() * 3);
      for (const Tri& t : tris) {
        long ma = (t.a0 + t.a1) / 2, mb = (t.b0 + t.b1) / 2;
        long na = (t.a1 + t.a2) / 2, nb = (t.b1 + t.b2) / 2;
        long pa = (t.a0 + t.a2) / 2, pb = (t.b0 + t.b2) / 2;
        next.push_back({t.a0, t.b0, ma, mb, pa, pb});
        next.push_back({ma, mb, t.a1, t.b1, na, nb});
        next.push_back({pa, pb, na, nb, t.a2, t.b2});
      }
      tris.swap(next);
    }
    std::vector<std::vector<int>> cell_list;
    for (const Tri& t : tris) {
      int v0 = vi.intern(t.a0, t.b0);
      int v1 = vi.intern(t.a1, t.b1);
      int v2 = vi.intern(t.a2, t.b2);
      cell_list.push_back({v0, v1, v2});
    }
    const double s3h = 0.5 * std::sqrt(3.0);
    coords.resize(vi.keys.size());
    mass.assign(vi.keys.size(), 0.0);
    for (std::size_t i = 0; i < vi.keys.size(); ++i) {
      double a = (double)vi.keys[i].first, b = (double)vi.keys[i].second;
      coords[i] = {(a + 0.5 * b) / denom, (b * s3h) / denom, 0.0};
    }
    for (auto& vs : cell_list) {
      std::vector<int> cp = vs;
      finish_cell(cp);
      detail::add_clique(f.lattice_edges, vs);
    }
    f.lattice_h = f.cell_size;
  }

  detail::dedupe_edges(f.lattice_edges);
  f.space = DiscreteSpace::make(std::move(coords), dim, std::move(mass), mode);
  if (mode == MetricMode::geodesic_graph) f.space.set_graph(f.lattice_edges);
  // exact Euclidean diameters; geodesic mode keeps the double-sweep estimate
  // already cached by set_graph
  if (mode != MetricMode::geodesic_graph) {
    switch (kind) {
      case FractalKind::interval:
      case FractalKind::gasket: f.space.set_diameter(1.0); break;
      default: f.space.set_diameter(std::sqrt(2.0)); break;
    }
  }
  f.space.set_min_spacing(kind == FractalKind::gasket ? f.cell_size : f.lattice_h);
  return f;
}

}  // namespace fbz
