#pragma once

#include <cstdint>
#include <limits>
#include <queue>
#include <random>
#include <vector>

#include "fbz/fractal.hpp"
#include "fbz/space.hpp"

namespace fbz {

struct AhlforsFit {
  double Q = 0.0;
  double C_AR = 1.0;
  double residual = 0.0;  // max log-deviation from the fitted corridor centre
};

struct SpaceDiagnostics {
  double doubling_const = 1.0;
  AhlforsFit ahlfors;
  double rvd_Q = 0.0;
  double rvd_c1 = 1.0;
  double chain_const = 0.0;
  double uniform_perfect_sigma = 0.0;
  int samples_used = 0;
};

namespace detail {

// Shortest path (by length) between s and t on the given adjacency; returns
// the vertex sequence, empty if unreachable.
inline std::vector<int> shortest_path(const DiscreteSpace& s,
                                      const std::vector<std::vector<int>>& adj,
                                      int a, int b) {
  int n = s.size();
  std::vector<double> d(n, std::numeric_limits<double>::infinity());
  std::vector<int> pred(n, -1);
  using QE = std::pair<double, int>;
  std::priority_queue<QE, std::vector<QE>, std::greater<>> q;
  d[a] = 0.0;
  q.push({0.0, a});
  while (!q.empty()) {
    auto [dc, v] = q.top();
    q.pop();
    if (dc > d[v]) continue;
    if (v == b) break;
    for (int w : adj[v]) {
      double nd = dc + s.dist(v, w);
      if (nd < d[w]) {
        d[w] = nd;
        pred[w] = v;
        q.push({nd, w});
      }
    }
  }
  std::vector<int> path;
  if (d[b] == std::numeric_limits<double>::infinity()) return path;
  for (int v = b; v != -1; v = pred[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

inline std::vector<std::vector<int>> adjacency_lists(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<int>> adj(n);
  for (auto& e : edges) {
    adj[e.first].push_back(e.second);
    adj[e.second].push_back(e.first);
  }
  return adj;
}

}  // namespace detail

// Measured geometry: doubling constant, Ahlfors fit, reverse doubling, chain
// condition and uniform perfectness, all over seeded samples. Pure: a fixed
// seed reproduces the output bit for bit.
inline SpaceDiagnostics diagnostics(const DiscreteSpace& s,
                                    const std::vector<std::pair<int, int>>& graph_edges,
                                    int n_samples, std::uint64_t seed) {
  if (s.size() < 2) throw std::invalid_argument("diagnostics: need at least 2 points");
  if (n_samples < 32) throw std::invalid_argument("diagnostics: n_samples >= 32 required");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, s.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double diam = s.diameter();
  const double h = s.min_spacing();
  const double r_lo = 2.0 * h;
  // top octave below diam/2 still saturates m(B) on bounded spaces and drags
  // the fitted slope; cut at diam/4
  const double r_hi = diam / 4.0;
  SpaceDiagnostics out;
  out.samples_used = n_samples;

  // volume doubling and Ahlfors corridor
  std::vector<std::pair<double, double>> loglog;  // (log r, log m(B(x,r)))
  double cd = 1.0;
  for (int it = 0; it < n_samples; ++it) {
    int x = pick(rng);
    double u = unit(rng);
    double r = r_lo * std::pow(std::max(r_hi / r_lo, 1.0), u);
    double m1 = s.ball_mass(x, r);
    double m2 = s.ball_mass(x, 2.0 * r);
    if (m1 > 0.0) cd = std::max(cd, m2 / m1);
    loglog.push_back({std::log(r), std::log(m1)});
  }
  out.doubling_const = cd;

  {  // least squares log m = Q log r + a
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto& p : loglog) {
      sx += p.first;
      sy += p.second;
      sxx += p.first * p.first;
      sxy += p.first * p.second;
    }
    double n = (double)loglog.size();
    double det = n * sxx - sx * sx;
    double Q = det != 0.0 ? (n * sxy - sx * sy) / det : 0.0;
    double a = (sy - Q * sx) / n;
    double res = 0.0;
    for (auto& p : loglog) res = std::max(res, std::abs(p.second - Q * p.first - a));
    out.ahlfors = {Q, std::exp(std::abs(a) + res), res};
  }

  {  // reverse doubling: m(B(y,r))/m(B(y,R)) <= c1 (r/R)^Q
    double sxx = 0, sxy = 0;
    std::vector<std::array<double, 2>> pts;
    for (int it = 0; it < n_samples; ++it) {
      int y = pick(rng);
      double R = r_lo * std::pow(std::max((diam * 0.99) / r_lo, 1.0), unit(rng));
      double r = R * std::pow(0.5, 1.0 + 2.0 * unit(rng));
      if (r < h / 2) continue;
      double mr = s.ball_mass(y, r), mR = s.ball_mass(y, R);
      if (!(mr > 0) || !(mR > 0) || mr >= mR) continue;
      double lx = std::log(r / R), ly = std::log(mr / mR);
      sxx += lx * lx;
      sxy += lx * ly;
      pts.push_back({lx, ly});
    }
    double Q = sxx > 0 ? sxy / sxx : 0.0;
    double c1 = 1.0;
    for (auto& p : pts) c1 = std::max(c1, std::exp(p[1] - Q * p[0]));
    out.rvd_Q = Q;
    out.rvd_c1 = c1;
  }

  {  // chain condition via graph paths resampled to n-point chains
    auto adj = detail::adjacency_lists(s.size(), graph_edges);
    double worst = 0.0;
    int pairs = std::max(8, n_samples / 8);
    for (int it = 0; it < pairs; ++it) {
      int a = pick(rng), b = pick(rng);
      if (a == b) continue;
      auto path = detail::shortest_path(s, adj, a, b);
      if (path.size() < 2) continue;
      std::vector<double> cum(path.size(), 0.0);
      for (std::size_t i = 1; i < path.size(); ++i)
        cum[i] = cum[i - 1] + s.dist(path[i - 1], path[i]);
      double len = cum.back();
      double dab = s.dist(a, b);
      for (int n_chain : {4, 16}) {
        // below n ~ d/h the lattice cannot refine further; stay above it
        if (n_chain > dab / (2.0 * h)) continue;
        // place n_chain+1 anchors at equal arc-length targets
        std::vector<int> anchors;
        std::size_t j = 0;
        for (int k = 0; k <= n_chain; ++k) {
          double target = len * k / n_chain;
          while (j + 1 < cum.size() && cum[j + 1] <= target) ++j;
          std::size_t at = j;
          if (j + 1 < cum.size() && std::abs(cum[j + 1] - target) < std::abs(cum[j] - target))
            at = j + 1;
          anchors.push_back(path[at]);
        }
        anchors.front() = a;
        anchors.back() = b;
        double gap = 0.0;
        for (int k = 1; k <= n_chain; ++k)
          gap = std::max(gap, s.dist(anchors[k - 1], anchors[k]));
        worst = std::max(worst, gap * n_chain / dab);
      }
    }
    out.chain_const = worst;
  }

  {  // uniform perfectness: largest sigma valid on all samples
    double sigma = 1.0;
    bool any = false;
    for (int it = 0; it < n_samples; ++it) {
      int x = pick(rng);
      double r = r_lo * std::pow(std::max(diam / r_lo, 1.0), unit(rng));
      auto b = s.ball(x, r);
      if ((int)b.size() == s.size()) continue;  // B(x,r) == X, exempt
      double dmax = 0.0;
      for (int j : b)
        if (j != x) dmax = std::max(dmax, s.dist(x, j));
      sigma = std::min(sigma, dmax / r);
      any = true;
    }
    out.uniform_perfect_sigma = any ? sigma : 0.5;
  }
  return out;
}

inline SpaceDiagnostics diagnostics(const Prefractal& f, int n_samples, std::uint64_t seed) {
  return diagnostics(f.space, f.lattice_edges, n_samples, seed);
}

}  // namespace fbz
