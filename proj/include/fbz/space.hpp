#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

#include "fbz/common.hpp"

namespace fbz {

enum class MetricMode { euclidean, geodesic_graph, precomputed };

inline const char* to_string(MetricMode m) {
  switch (m) {
    case MetricMode::euclidean: return "euclidean";
    case MetricMode::geodesic_graph: return "geodesic-graph";
    case MetricMode::precomputed: return "precomputed";
  }
  return "euclidean";
}

inline MetricMode metric_mode_from(const std::string& s) {
  if (s == "euclidean") return MetricMode::euclidean;
  if (s == "geodesic-graph") return MetricMode::geodesic_graph;
  if (s == "precomputed") return MetricMode::precomputed;
  throw std::invalid_argument("unknown metric mode: " + s);
}

// Finite metric measure space: a point cloud with positive weights, a metric
// (Euclidean, graph-geodesic, or a stored matrix) and a bin index for range
// queries. Immutable after construction; all queries are const.
class DiscreteSpace {
 public:
  using Point = std::array<double, 3>;

  DiscreteSpace() = default;

  static DiscreteSpace make(std::vector<Point> coords, int dim,
                            std::vector<double> weights,
                            MetricMode mode = MetricMode::euclidean) {
    if (coords.size() != weights.size())
      throw std::invalid_argument("coords/weights size mismatch");
    if (dim < 1 || dim > 3) throw std::invalid_argument("dim must be 1..3");
    DiscreteSpace s;
    s.coords_ = std::move(coords);
    s.weights_ = std::move(weights);
    s.dim_ = dim;
    s.mode_ = mode;
    KahanSum tot;
    for (double w : s.weights_) {
      if (!(w > 0.0)) throw std::invalid_argument("weights must be positive");
      tot.add(w);
    }
    s.total_mass_ = tot.value();
    s.build_index();
    // cache the metric summaries now; concurrent readers never mutate
    if (mode == MetricMode::euclidean && s.size() > 1) {
      s.diameter();
      s.min_spacing();
    }
    return s;
  }

  // Edges for the geodesic metric; lengths are Euclidean by default.
  void set_graph(std::vector<std::pair<int, int>> edges) {
    graph_edges_ = std::move(edges);
    adj_head_.assign(size() + 1, 0);
    for (auto& e : graph_edges_) {
      adj_head_[e.first + 1]++;
      adj_head_[e.second + 1]++;
    }
    for (std::size_t i = 1; i < adj_head_.size(); ++i) adj_head_[i] += adj_head_[i - 1];
    adj_.resize(2 * graph_edges_.size());
    std::vector<int> fill(adj_head_.begin(), adj_head_.end() - 1);
    for (auto& e : graph_edges_) {
      double len = euclid(e.first, e.second);
      adj_[fill[e.first]++] = {e.second, len};
      adj_[fill[e.second]++] = {e.first, len};
    }
    if (mode_ == MetricMode::geodesic_graph && size() > 1) {
      diam_ = -1.0;
      spacing_ = -1.0;
      diameter();
      min_spacing();
    }
  }

  void set_precomputed(std::vector<double> dist_matrix) {
    if (dist_matrix.size() != std::size_t(size()) * size())
      throw std::invalid_argument("distance matrix size mismatch");
    dist_ = std::move(dist_matrix);
    if (mode_ == MetricMode::precomputed && size() > 1) {
      diam_ = -1.0;
      spacing_ = -1.0;
      diameter();
      min_spacing();
    }
  }

  int size() const { return static_cast<int>(coords_.size()); }
  int dim() const { return dim_; }
  MetricMode metric_mode() const { return mode_; }
  const Point& coord(int i) const { return coords_[i]; }
  const std::vector<Point>& coords() const { return coords_; }
  double weight(int i) const { return weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }
  double total_mass() const { return total_mass_; }
  const std::vector<std::pair<int, int>>& graph_edges() const { return graph_edges_; }

  double dist(int i, int j) const {
    switch (mode_) {
      case MetricMode::euclidean: return euclid(i, j);
      case MetricMode::precomputed: return dist_[std::size_t(i) * size() + j];
      case MetricMode::geodesic_graph: return geodesic(i, j);
    }
    return euclid(i, j);
  }

  // Exact strict ball { y : d(x,y) < r }, center included.
  std::vector<int> ball(int center, double r) const {
    if (center < 0 || center >= size()) throw std::invalid_argument("ball: bad center");
    std::vector<int> out;
    if (!(r > 0.0)) return out;
    switch (mode_) {
      case MetricMode::euclidean: ball_euclid(center, r, out); break;
      case MetricMode::precomputed: {
        const double* row = &dist_[std::size_t(center) * size()];
        for (int j = 0; j < size(); ++j)
          if (row[j] < r) out.push_back(j);
        break;
      }
      case MetricMode::geodesic_graph: ball_geodesic(center, r, out); break;
    }
    return out;
  }

  double ball_mass(int center, double r) const {
    double m = 0.0;
    for (int j : ball(center, r)) m += weights_[j];
    return m;
  }

  // Greedy maximal delta-separated set over ascending ids.
  std::vector<int> net(double delta) const {
    if (!(delta > 0.0)) throw std::invalid_argument("net: delta must be > 0");
    std::vector<int> sel;
    std::vector<char> selected(size(), 0);
    for (int i = 0; i < size(); ++i) {
      bool ok = true;
      for (int j : ball(i, delta)) {
        if (selected[j]) { ok = false; break; }
      }
      if (ok) {
        sel.push_back(i);
        selected[i] = 1;
      }
    }
    return sel;
  }

  // Exact diameter when set by a builder, otherwise a double-sweep estimate.
  double diameter() const {
    if (diam_ > 0.0) return diam_;
    if (size() < 2) return 0.0;
    int a = 0;
    for (int pass = 0; pass < 2; ++pass) {
      int far = a;
      double best = -1.0;
      for (int j = 0; j < size(); ++j) {
        double d = dist(a, j);
        if (d > best) { best = d; far = j; }
      }
      a = far;
      diam_ = std::max(diam_, best);
    }
    return diam_;
  }
  void set_diameter(double d) { diam_ = d; }

  // Smallest nearest-neighbour distance; the lattice resolution.
  double min_spacing() const {
    if (spacing_ > 0.0) return spacing_;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < size(); ++i) {
      double d = nearest_other(i);
      if (d < best) best = d;
    }
    spacing_ = best;
    return spacing_;
  }
  void set_min_spacing(double h) { spacing_ = h; }

  double nearest_other(int i) const {
    double r = initial_probe_radius();
    for (;;) {
      double best = std::numeric_limits<double>::infinity();
      for (int j : ball(i, r))
        if (j != i) best = std::min(best, dist(i, j));
      if (best < std::numeric_limits<double>::infinity()) return best;
      if (r > 2.0 * diameter() + 1.0) return best;
      r *= 2.0;
    }
  }

  // Minimum distance from each point to the set `mask == 0`; used for
  // delta_U(z) = d(z, X \ U) with mask = indicator of U.
  std::vector<double> dist_to_complement(const std::vector<char>& mask) const {
    if (mask.size() != std::size_t(size()))
      throw std::invalid_argument("dist_to_complement: mask size");
    std::vector<double> out(size(), std::numeric_limits<double>::infinity());
    double r0 = initial_probe_radius();
    for (int i = 0; i < size(); ++i) {
      if (!mask[i]) { out[i] = 0.0; continue; }
      double r = r0;
      for (;;) {
        double best = std::numeric_limits<double>::infinity();
        for (int j : ball(i, r))
          if (!mask[j]) best = std::min(best, dist(i, j));
        if (best < std::numeric_limits<double>::infinity()) { out[i] = best; break; }
        if (r > 2.0 * diameter() + 1.0) break;
        r *= 2.0;
      }
    }
    return out;
  }

 private:
  std::vector<Point> coords_;
  std::vector<double> weights_;
  double total_mass_ = 0.0;
  int dim_ = 1;
  MetricMode mode_ = MetricMode::euclidean;
  mutable double diam_ = -1.0;
  mutable double spacing_ = -1.0;

  // bin index
  std::array<double, 3> lo_{}, hi_{};
  std::array<int, 3> bins_{};
  std::array<double, 3> inv_w_{};
  std::vector<std::vector<int>> bin_points_;

  // geodesic adjacency (CSR)
  std::vector<std::pair<int, int>> graph_edges_;
  std::vector<int> adj_head_;
  std::vector<std::pair<int, double>> adj_;

  std::vector<double> dist_;  // precomputed, row-major

  double euclid(int i, int j) const {
    const Point& a = coords_[i];
    const Point& b = coords_[j];
    double s = 0.0;
    for (int k = 0; k < dim_; ++k) {
      double d = a[k] - b[k];
      s += d * d;
    }
    return std::sqrt(s);
  }

  double initial_probe_radius() const {
    double span = 0.0;
    for (int k = 0; k < dim_; ++k) span = std::max(span, hi_[k] - lo_[k]);
    double per_axis = std::max(1, bins_[0]);
    return std::max(span / per_axis, 1e-300) * 1.5;
  }

  void build_index() {
    for (int k = 0; k < 3; ++k) { lo_[k] = 0.0; hi_[k] = 0.0; bins_[k] = 1; inv_w_[k] = 0.0; }
    if (coords_.empty()) return;
    for (int k = 0; k < dim_; ++k) {
      lo_[k] = hi_[k] = coords_[0][k];
      for (const auto& p : coords_) {
        lo_[k] = std::min(lo_[k], p[k]);
        hi_[k] = std::max(hi_[k], p[k]);
      }
    }
    int per_axis = std::max(1, (int)std::floor(std::pow(double(size()), 1.0 / dim_)));
    per_axis = std::min(per_axis, 2048);
    int nbins = 1;
    for (int k = 0; k < dim_; ++k) {
      bins_[k] = per_axis;
      double w = hi_[k] - lo_[k];
      inv_w_[k] = w > 0 ? bins_[k] / (w * (1.0 + 1e-12)) : 0.0;
      nbins *= bins_[k];
    }
    bin_points_.assign(nbins, {});
    for (int i = 0; i < size(); ++i) bin_points_[bin_of(coords_[i])].push_back(i);
  }

  int bin_coord(double x, int k) const {
    if (inv_w_[k] == 0.0) return 0;
    int b = (int)((x - lo_[k]) * inv_w_[k]);
    return std::clamp(b, 0, bins_[k] - 1);
  }
  int bin_of(const Point& p) const {
    int b = 0;
    for (int k = dim_ - 1; k >= 0; --k) b = b * bins_[k] + bin_coord(p[k], k);
    return b;
  }

  void ball_euclid(int center, double r, std::vector<int>& out) const {
    const Point& c = coords_[center];
    std::array<int, 3> b0{}, b1{};
    for (int k = 0; k < dim_; ++k) {
      b0[k] = bin_coord(c[k] - r, k);
      b1[k] = bin_coord(c[k] + r, k);
    }
    double r2 = r * r;
    auto scan_bin = [&](int flat) {
      for (int j : bin_points_[flat]) {
        double s = 0.0;
        for (int k = 0; k < dim_; ++k) {
          double d = coords_[j][k] - c[k];
          s += d * d;
        }
        if (s < r2) out.push_back(j);
      }
    };
    if (dim_ == 1) {
      for (int x = b0[0]; x <= b1[0]; ++x) scan_bin(x);
    } else if (dim_ == 2) {
      for (int y = b0[1]; y <= b1[1]; ++y)
        for (int x = b0[0]; x <= b1[0]; ++x) scan_bin(y * bins_[0] + x);
    } else {
      for (int z = b0[2]; z <= b1[2]; ++z)
        for (int y = b0[1]; y <= b1[1]; ++y)
          for (int x = b0[0]; x <= b1[0]; ++x)
            scan_bin((z * bins_[1] + y) * bins_[0] + x);
    }
    std::sort(out.begin(), out.end());
  }

  void ball_geodesic(int center, double r, std::vector<int>& out) const {
    std::vector<double> d(size(), std::numeric_limits<double>::infinity());
    using QE = std::pair<double, int>;
    std::priority_queue<QE, std::vector<QE>, std::greater<>> q;
    d[center] = 0.0;
    q.push({0.0, center});
    while (!q.empty()) {
      auto [dc, v] = q.top();
      q.pop();
      if (dc > d[v]) continue;
      if (dc >= r) break;
      out.push_back(v);
      for (int e = adj_head_[v]; e < adj_head_[v + 1]; ++e) {
        auto [w, len] = adj_[e];
        double nd = dc + len;
        if (nd < d[w] && nd < r) {
          d[w] = nd;
          q.push({nd, w});
        }
      }
    }
    std::sort(out.begin(), out.end());
  }

  double geodesic(int i, int j) const {
    if (i == j) return 0.0;
    std::vector<double> d(size(), std::numeric_limits<double>::infinity());
    using QE = std::pair<double, int>;
    std::priority_queue<QE, std::vector<QE>, std::greater<>> q;
    d[i] = 0.0;
    q.push({0.0, i});
    while (!q.empty()) {
      auto [dc, v] = q.top();
      q.pop();
      if (dc > d[v]) continue;
      if (v == j) return dc;
      for (int e = adj_head_[v]; e < adj_head_[v + 1]; ++e) {
        auto [w, len] = adj_[e];
        if (dc + len < d[w]) {
          d[w] = dc + len;
          q.push({d[w], w});
        }
      }
    }
    return d[j];
  }
};

}  // namespace fbz
