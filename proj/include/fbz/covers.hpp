#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <random>
#include <vector>

#include "fbz/common.hpp"
#include "fbz/space.hpp"

namespace fbz {

// Vertex subset playing the role of an open set, with delta_U(z) = d(z, X\U).
struct USet {
  std::vector<char> mask;
  std::vector<double> delta;
  int count = 0;
};

inline USet make_uset(const DiscreteSpace& s, std::vector<char> mask) {
  if (mask.size() != (std::size_t)s.size()) throw std::invalid_argument("make_uset: mask size");
  USet u;
  u.mask = std::move(mask);
  bool any_out = false;
  for (char c : u.mask) {
    if (c) u.count++;
    else any_out = true;
  }
  if (u.count == 0) throw std::invalid_argument("make_uset: U empty");
  if (!any_out) throw std::invalid_argument("make_uset: U must differ from X");
  u.delta = s.dist_to_complement(u.mask);
  return u;
}

inline USet uset_from_box(const DiscreteSpace& s, const std::vector<double>& lo,
                          const std::vector<double>& hi, bool open = true) {
  std::vector<char> mask(s.size(), 0);
  for (int v = 0; v < s.size(); ++v) {
    bool in = true;
    for (int k = 0; k < s.dim(); ++k) {
      double c = s.coord(v)[k];
      if (open ? (c <= lo[k] || c >= hi[k]) : (c < lo[k] || c > hi[k])) in = false;
    }
    mask[v] = in;
  }
  return make_uset(s, std::move(mask));
}

struct CoverBall {
  int center;
  double r;
};

inline double diam_of(const DiscreteSpace& s, const USet& u) {
  // diameter of the subset; double sweep inside U
  int a = -1;
  for (int v = 0; v < s.size(); ++v)
    if (u.mask[v]) { a = v; break; }
  double best = 0.0;
  for (int pass = 0; pass < 2; ++pass) {
    int far = a;
    for (int v = 0; v < s.size(); ++v) {
      if (!u.mask[v]) continue;
      double d = s.dist(a, v);
      if (d > best) { best = d; far = v; }
    }
    a = far;
  }
  return best;
}

// ---------------------------------------------------------------------------
// epsilon-Whitney cover

struct WhitneyCert {
  bool disjoint = false;
  double radius_rule_max_err = 0.0;
  bool coverage_ok = false;
  int overlap_max = 0;  // at the r_i/eps dilate
  std::vector<int> uncovered;
};

struct WhitneyCover {
  double eps = 0.0;
  double K_eps = 0.0;  // 2(1+eps)
  std::vector<CoverBall> balls;
  WhitneyCert cert;
};

namespace detail {

// vertices of B(x, r) that lie inside U
inline std::vector<int> ball_in(const DiscreteSpace& s, const USet& u, int x, double r) {
  std::vector<int> out;
  for (int v : s.ball(x, r))
    if (u.mask[v]) out.push_back(v);
  return out;
}

}  // namespace detail

// Greedy construction over descending delta_U (ties by ascending id) with
// exact vertex-set disjointness; the K_eps-coverage then follows from
// maximality and the 1-Lipschitz property of delta_U, and is re-checked.
inline WhitneyCover whitney_cover(const DiscreteSpace& s, const USet& u, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw std::invalid_argument("whitney_cover: eps in (0, 1/2)");
  WhitneyCover cov;
  cov.eps = eps;
  cov.K_eps = 2.0 * (1.0 + eps);
  const double c_eps = eps / (1.0 + eps);

  std::vector<int> order;
  order.reserve(u.count);
  for (int v = 0; v < s.size(); ++v)
    if (u.mask[v]) order.push_back(v);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return u.delta[a] > u.delta[b]; });

  std::vector<char> claimed(s.size(), 0);
  for (int x : order) {
    double r = c_eps * u.delta[x];
    auto bx = detail::ball_in(s, u, x, r);
    bool free = true;
    for (int v : bx)
      if (claimed[v]) { free = false; break; }
    if (!free) continue;
    for (int v : bx) claimed[v] = 1;
    cov.balls.push_back({x, r});
  }

  // certificate: disjointness, radius rule, K_eps coverage, 1/eps overlap
  std::vector<char> seen(s.size(), 0);
  cov.cert.disjoint = true;
  for (auto& b : cov.balls) {
    for (int v : detail::ball_in(s, u, b.center, b.r)) {
      if (seen[v]) cov.cert.disjoint = false;
      seen[v] = 1;
    }
    double want = c_eps * u.delta[b.center];
    cov.cert.radius_rule_max_err =
        std::max(cov.cert.radius_rule_max_err, relative_gap(b.r, want));
  }
  std::vector<char> covered(s.size(), 0);
  std::vector<int> overlap(s.size(), 0);
  for (auto& b : cov.balls) {
    for (int v : detail::ball_in(s, u, b.center, cov.K_eps * b.r)) covered[v] = 1;
    for (int v : detail::ball_in(s, u, b.center, b.r / eps)) overlap[v]++;
  }
  cov.cert.coverage_ok = true;
  for (int v = 0; v < s.size(); ++v) {
    if (u.mask[v] && !covered[v]) {
      cov.cert.coverage_ok = false;
      cov.cert.uncovered.push_back(v);
    }
    cov.cert.overlap_max = std::max(cov.cert.overlap_max, overlap[v]);
  }
  return cov;
}

struct WhitneyVerifyReport {
  double lambda = 0.0;
  bool radius_comparison_ok = false;
  double radius_comparison_worst = 0.0;  // max of r_i / (bound * r_j); <= 1 when ok
  int overlap_max = 0;
  bool central_ball_ok = true;   // only meaningful when eps < 1/14 and A given
  int central_samples = 0;
  std::vector<std::pair<int, int>> violating_pairs;
  std::vector<int> central_witnesses;  // sample indices that failed
};

// Checks (rad.comparison) exactly on all intersecting lambda-dilate pairs, the
// 1/eps-dilate overlap, and (for eps < 1/14, A-uniform U) the central-ball
// radius corridor with the nearball sandwich.
inline WhitneyVerifyReport verify_whitney(const DiscreteSpace& s, const USet& u,
                                          const WhitneyCover& cov, double lambda, double A = 4.0,
                                          int n_central_samples = 32, std::uint64_t seed = 0) {
  if (!(lambda > 1.0) || (lambda - 1.0) * cov.eps >= 1.0)
    throw std::invalid_argument("verify_whitney: need lambda > 1 with (lambda-1) eps < 1");
  WhitneyVerifyReport rep;
  rep.lambda = lambda;
  const auto& balls = cov.balls;
  const double eps = cov.eps;
  const double lo_factor = (1.0 - (lambda - 1.0) * eps) / (1.0 + (lambda + 1.0) * eps);

  // (a) radius comparison on pairs whose lambda-dilates meet inside U
  rep.radius_comparison_ok = true;
  std::vector<std::vector<int>> dilate(balls.size());
  for (std::size_t i = 0; i < balls.size(); ++i)
    dilate[i] = detail::ball_in(s, u, balls[i].center, lambda * balls[i].r);
  std::vector<char> member(s.size(), 0);
  for (std::size_t i = 0; i < balls.size(); ++i) {
    for (int v : dilate[i]) member[v] = 1;
    for (std::size_t j = i + 1; j < balls.size(); ++j) {
      if (s.dist(balls[i].center, balls[j].center) >=
          lambda * (balls[i].r + balls[j].r))
        continue;
      bool meet = false;
      for (int v : dilate[j])
        if (member[v]) { meet = true; break; }
      if (!meet) continue;
      double ri = balls[i].r, rj = balls[j].r;
      double lo = lo_factor * rj, hi = rj / lo_factor;
      rep.radius_comparison_worst =
          std::max({rep.radius_comparison_worst, lo / ri, ri / hi});
      if (!(ri >= lo * (1 - 1e-12) && ri <= hi * (1 + 1e-12))) {
        rep.radius_comparison_ok = false;
        rep.violating_pairs.push_back({(int)i, (int)j});
      }
    }
    for (int v : dilate[i]) member[v] = 0;
  }

  // (b) bounded overlap at the 1/eps dilate
  {
    std::vector<int> overlap(s.size(), 0);
    for (auto& b : balls)
      for (int v : detail::ball_in(s, u, b.center, b.r / eps)) overlap[v]++;
    for (int v = 0; v < s.size(); ++v) rep.overlap_max = std::max(rep.overlap_max, overlap[v]);
  }

  // (c) central ball, hypothesis eps < 1/14
  if (eps < 1.0 / 14.0 && n_central_samples > 0) {
    std::mt19937_64 rng(seed);
    std::vector<int> uverts;
    for (int v = 0; v < s.size(); ++v)
      if (u.mask[v]) uverts.push_back(v);
    std::uniform_int_distribution<std::size_t> pick(0, uverts.size() - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double diamU = diam_of(s, u);
    for (int it = 0; it < n_central_samples; ++it) {
      int x = uverts[pick(rng)];
      double rlo = u.delta[x], rhi = diamU / 2.0;
      if (!(rlo < rhi)) continue;
      double r = rlo * std::pow(rhi / rlo, unit(rng));
      // members of R(x,r): 3-dilate meets B_U(x,r)
      auto bx = detail::ball_in(s, u, x, r);
      std::vector<char> in_bx(s.size(), 0);
      for (int v : bx) in_bx[v] = 1;
      bool sandwich_ok = true, corridor_ok = false;
      std::vector<char> in_union(s.size(), 0);
      for (auto& b : balls) {
        auto d3 = detail::ball_in(s, u, b.center, 3.0 * b.r);
        bool meet = false;
        for (int v : d3)
          if (in_bx[v]) { meet = true; break; }
        if (!meet) continue;
        for (int v : d3) {
          in_union[v] = 1;
          if (!(s.dist(v, x) < 2.0 * r)) sandwich_ok = false;  // union inside B_U(x,2r)
        }
        double lo = eps / (3.0 * A * (4.0 + eps)) * r;
        double hi = 2.0 * eps / (1.0 - 2.0 * eps) * r;
        if (b.r >= lo * (1 - 1e-12) && b.r <= hi * (1 + 1e-12)) corridor_ok = true;
      }
      for (int v : bx)
        if (!in_union[v]) sandwich_ok = false;  // B_U(x,r) inside the union
      rep.central_samples++;
      if (!sandwich_ok || !corridor_ok) {
        rep.central_ball_ok = false;
        rep.central_witnesses.push_back(it);
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// (lambda, A)-good cover

struct GoodCover {
  double lambda = 1.0, A = 1.0;
  std::vector<CoverBall> balls;
  double kappa1 = 1.0;  // measured radius-comparison constant
  int N1 = 0;           // measured 3A-dilate overlap
  bool disjoint = false;
  bool dilates_inside = false;  // lambda-dilates stay in U
  bool cover3_ok = false;       // 3-dilates cover U
};

namespace detail {

inline void good_cover_certify(const DiscreteSpace& s, const USet& u, GoodCover& g) {
  std::vector<char> seen(s.size(), 0), covered(s.size(), 0);
  std::vector<int> overlap(s.size(), 0);
  g.disjoint = true;
  g.dilates_inside = true;
  for (auto& b : g.balls) {
    for (int v : ball_in(s, u, b.center, b.r)) {
      if (seen[v]) g.disjoint = false;
      seen[v] = 1;
    }
    for (int v : s.ball(b.center, g.lambda * b.r))
      if (!u.mask[v]) g.dilates_inside = false;
    for (int v : ball_in(s, u, b.center, 3.0 * b.r)) covered[v] = 1;
    for (int v : ball_in(s, u, b.center, 3.0 * g.A * b.r)) overlap[v]++;
  }
  g.cover3_ok = true;
  for (int v = 0; v < s.size(); ++v) {
    if (u.mask[v] && !covered[v]) g.cover3_ok = false;
    g.N1 = std::max(g.N1, overlap[v]);
  }
  g.kappa1 = 1.0;
  for (std::size_t i = 0; i < g.balls.size(); ++i) {
    std::vector<char> di(s.size(), 0);
    for (int v : ball_in(s, u, g.balls[i].center, 3.0 * g.A * g.balls[i].r)) di[v] = 1;
    for (std::size_t j = i + 1; j < g.balls.size(); ++j) {
      if (s.dist(g.balls[i].center, g.balls[j].center) >=
          3.0 * g.A * (g.balls[i].r + g.balls[j].r))
        continue;
      bool meet = false;
      for (int v : ball_in(s, u, g.balls[j].center, 3.0 * g.A * g.balls[j].r))
        if (di[v]) { meet = true; break; }
      if (!meet) continue;
      double a = std::max(g.balls[i].r, g.balls[j].r);
      double b = std::min(g.balls[i].r, g.balls[j].r);
      g.kappa1 = std::max(g.kappa1, a / b);
    }
  }
}

}  // namespace detail

// U = X: balls of radius delta over a 2delta-net. U proper: an eps-Whitney
// cover with eps small enough that (1+eps)/eps >= lambda and 1/(3 eps) >= A.
inline GoodCover good_cover(const DiscreteSpace& s, const USet* u_or_null, double lambda, double A,
                            double delta = 0.0) {
  if (!(lambda >= 1.0) || !(A >= 1.0)) throw std::invalid_argument("good_cover: lambda, A >= 1");
  GoodCover g;
  g.lambda = lambda;
  g.A = A;
  if (u_or_null == nullptr) {
    if (!(delta > 0.0)) throw std::invalid_argument("good_cover: U = X needs a scale delta");
    for (int v : s.net(2.0 * delta)) g.balls.push_back({v, delta});
    USet full;
    full.mask.assign(s.size(), 1);
    full.delta.assign(s.size(), std::numeric_limits<double>::infinity());
    full.count = s.size();
    detail::good_cover_certify(s, full, g);
    g.dilates_inside = true;  // U = X
    return g;
  }
  double eps = std::min(1.0 / std::max(lambda - 1.0, 1e-9), 1.0 / (3.0 * A));
  eps = std::min(eps, 0.49);
  auto w = whitney_cover(s, *u_or_null, eps);
  g.balls = w.balls;
  detail::good_cover_certify(s, *u_or_null, g);
  return g;
}

// ---------------------------------------------------------------------------
// uniform domains

struct UniformDomainCert {
  double A = 1.0;
  int sampled_pairs = 0;
  double worst_diam_ratio = 0.0;
  double worst_cigar_ratio = 0.0;  // smallest A' that admitted the found curves
  bool corkscrew_ok = true;
  bool pass = false;
  std::pair<int, int> witness{-1, -1};
};

// For sampled pairs, searches the lattice graph restricted to
// { z : delta_U(z) >= min(d(x,z), d(y,z)) / A } for a connecting path and
// checks diam(path) <= A d(x,y); the existential over curves reduces to this
// maximin formulation on a finite graph. Corkscrew checked on sampled balls.
inline UniformDomainCert check_uniform_domain(const DiscreteSpace& s,
                                              const std::vector<std::pair<int, int>>& edges,
                                              const USet& u, double A, int n_pairs,
                                              std::uint64_t seed) {
  UniformDomainCert cert;
  cert.A = A;
  std::vector<std::vector<int>> adj(s.size());
  for (auto& e : edges) {
    if (u.mask[e.first] && u.mask[e.second]) {
      adj[e.first].push_back(e.second);
      adj[e.second].push_back(e.first);
    }
  }
  std::vector<int> uverts;
  for (int v = 0; v < s.size(); ++v)
    if (u.mask[v]) uverts.push_back(v);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, uverts.size() - 1);
  cert.pass = true;

  auto bfs_path = [&](int a, int b, const std::vector<char>& allowed) {
    std::vector<int> pred(s.size(), -2);
    std::queue<int> q;
    q.push(a);
    pred[a] = -1;
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      if (v == b) break;
      for (int w : adj[v])
        if (pred[w] == -2 && allowed[w]) {
          pred[w] = v;
          q.push(w);
        }
    }
    std::vector<int> path;
    if (pred[b] == -2) return path;
    for (int v = b; v != -1; v = pred[v]) path.push_back(v);
    return path;
  };

  for (int it = 0; it < n_pairs; ++it) {
    int x = uverts[pick(rng)], y = uverts[pick(rng)];
    if (x == y) continue;
    double dxy = s.dist(x, y);
    std::vector<char> allowed(s.size(), 0);
    for (int z : uverts) {
      double m = std::min(s.dist(x, z), s.dist(y, z));
      // lattice floor: within one spacing of an endpoint everything qualifies
      allowed[z] = u.delta[z] * A >= m - 1e-12 || m <= s.min_spacing() * 1.5;
    }
    allowed[x] = allowed[y] = 1;
    auto path = bfs_path(x, y, allowed);
    cert.sampled_pairs++;
    if (path.empty()) {
      cert.pass = false;
      cert.witness = {x, y};
      continue;
    }
    double diam = 0.0;
    for (std::size_t i = 0; i < path.size(); ++i)
      for (std::size_t j = i + 1; j < path.size(); ++j)
        diam = std::max(diam, s.dist(path[i], path[j]));
    cert.worst_diam_ratio = std::max(cert.worst_diam_ratio, diam / dxy);
    double cigar = 1.0;
    for (int z : path) {
      if (z == x || z == y) continue;
      double m = std::min(s.dist(x, z), s.dist(y, z));
      if (m <= s.min_spacing() * 1.5) continue;
      if (u.delta[z] > 0) cigar = std::max(cigar, m / u.delta[z]);
    }
    cert.worst_cigar_ratio = std::max(cert.worst_cigar_ratio, cigar);
    if (diam > A * dxy * (1 + 1e-9)) {
      cert.pass = false;
      cert.witness = {x, y};
    }
  }

  // corkscrew on sampled balls: some y with B(y, r/(3A)) inside B_U(x,r)
  double diamU = diam_of(s, u);
  for (int it = 0; it < std::max(8, n_pairs / 4); ++it) {
    int x = uverts[pick(rng)];
    double r = diamU * std::pow(2.0, -1.0 - (double)(rng() % 4));
    if (r / (3.0 * A) < s.min_spacing()) continue;  // below resolution
    bool found = false;
    for (int y : detail::ball_in(s, u, x, r)) {
      bool inside = true;
      for (int z : s.ball(y, r / (3.0 * A)))
        if (!u.mask[z] || !(s.dist(z, x) < r)) { inside = false; break; }
      if (inside) { found = true; break; }
    }
    if (!found) cert.corkscrew_ok = false;
  }
  return cert;
}

// ---------------------------------------------------------------------------
// chains of balls along a curve

struct BallChain {
  std::vector<int> ball_indices;  // indices into the cover
  bool links_ok = false;          // 3B_{j-1} meets 3B_j, and 3B_j meets gamma
  double max_radius = 0.0;
  double worst_center_const = 0.0;  // measured C1 in D subset B(x_j, C1 r_j)
  std::optional<int> gap_at;        // gamma index where no next ball was found
};

// Follows gamma from B0 to D, switching to a covering ball whenever the path
// leaves the current 3-dilate. Links use the metric condition
// d(x_i, x_j) < 3(r_i + r_j) plus the vertex-level gamma membership.
inline BallChain chain_of_balls(const DiscreteSpace& s, const USet& u, const WhitneyCover& cov,
                                int b0_idx, int d_idx, const std::vector<int>& gamma) {
  BallChain chain;
  if (gamma.empty()) throw std::invalid_argument("chain_of_balls: empty gamma");
  for (int v : gamma)
    if (!u.mask[v]) throw std::invalid_argument("chain_of_balls: gamma exits U");
  const auto& balls = cov.balls;
  auto in3 = [&](int ball, int v) {
    return u.mask[v] && s.dist(balls[ball].center, v) < 3.0 * balls[ball].r;
  };
  chain.ball_indices.push_back(b0_idx);
  if (b0_idx == d_idx) {
    chain.links_ok = true;
    chain.max_radius = balls[b0_idx].r;
    return chain;
  }
  std::size_t pos = 0;
  int cur = b0_idx;
  int guard = 0;
  while (true) {
    if (++guard > (int)balls.size() + (int)gamma.size() + 4) {
      chain.gap_at = (int)pos;
      return chain;
    }
    // furthest gamma vertex still inside the current 3-dilate
    std::size_t k = pos;
    while (k + 1 < gamma.size() && in3(cur, gamma[k + 1])) ++k;
    if (k + 1 == gamma.size()) {
      if (cur != d_idx) chain.ball_indices.push_back(d_idx);
      break;
    }
    // next ball: covers gamma[k+1] and meets the current 3-dilate
    int next = -1;
    for (std::size_t bi = 0; bi < balls.size(); ++bi) {
      if ((int)bi == cur) continue;
      if (!in3((int)bi, gamma[k + 1])) continue;
      if (s.dist(balls[bi].center, balls[cur].center) < 3.0 * (balls[bi].r + balls[cur].r)) {
        next = (int)bi;
        break;
      }
    }
    if (next < 0) {
      chain.gap_at = (int)(k + 1);
      return chain;
    }
    chain.ball_indices.push_back(next);
    cur = next;
    pos = k;
  }
  // link and membership certificates
  chain.links_ok = true;
  for (std::size_t j = 1; j < chain.ball_indices.size(); ++j) {
    int a = chain.ball_indices[j - 1], b = chain.ball_indices[j];
    if (!(s.dist(balls[a].center, balls[b].center) < 3.0 * (balls[a].r + balls[b].r)))
      chain.links_ok = false;
  }
  for (int bi : chain.ball_indices) {
    bool touches = false;
    for (int v : gamma)
      if (in3(bi, v)) { touches = true; break; }
    if (!touches && bi != d_idx) chain.links_ok = false;
    chain.max_radius = std::max(chain.max_radius, balls[bi].r);
    double far = 0.0;
    for (int v : detail::ball_in(s, u, balls[d_idx].center, balls[d_idx].r))
      far = std::max(far, s.dist(balls[bi].center, v));
    if (balls[bi].r > 0) chain.worst_center_const = std::max(chain.worst_center_const, far / balls[bi].r);
  }
  return chain;
}

// ---------------------------------------------------------------------------
// Bojarski-type overlap bound: ratio of the lambda-dilated L^q mass to the
// undilated one for nonnegative coefficients.
inline double bojarski_ratio(const DiscreteSpace& s, const std::vector<CoverBall>& balls,
                             const std::vector<double>& a, double q, double lambda) {
  if (a.size() != balls.size()) throw std::invalid_argument("bojarski_ratio: coefficient count");
  std::vector<double> f1(s.size(), 0.0), fl(s.size(), 0.0);
  for (std::size_t i = 0; i < balls.size(); ++i) {
    for (int v : s.ball(balls[i].center, balls[i].r)) f1[v] += a[i];
    for (int v : s.ball(balls[i].center, lambda * balls[i].r)) fl[v] += a[i];
  }
  KahanSum i1, il;
  for (int v = 0; v < s.size(); ++v) {
    i1.add(s.weight(v) * std::pow(f1[v], q));
    il.add(s.weight(v) * std::pow(fl[v], q));
  }
  double base = i1.value();
  return base > 0.0 ? il.value() / base : std::numeric_limits<double>::infinity();
}

}  // namespace fbz
