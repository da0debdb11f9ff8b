#pragma once

#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "fbz/covers.hpp"
#include "fbz/energy.hpp"
#include "fbz/partition.hpp"
#include "fbz/scale.hpp"
#include "fbz/space.hpp"

namespace fbz {

// Complement interior U^# = int(X \ U) in the lattice sense: vertices outside
// U all of whose graph neighbours are outside U. The remaining vertices form
// the boundary layer (neither U nor U^#).
inline USet complement_interior(const DiscreteSpace& s,
                                const std::vector<std::pair<int, int>>& edges, const USet& u) {
  std::vector<char> mask(s.size(), 0);
  for (int v = 0; v < s.size(); ++v) mask[v] = !u.mask[v];
  for (auto& e : edges) {
    if (u.mask[e.first] && !u.mask[e.second]) mask[e.second] = 0;
    if (u.mask[e.second] && !u.mask[e.first]) mask[e.first] = 0;
  }
  return make_uset(s, std::move(mask));
}

// Reflection of small complement-Whitney balls onto comparable domain-Whitney
// balls: Q(B(y,s)) is the domain ball whose centre is nearest to y among those
// with radius inside ((1+eps)/(1+4eps) s, (1+eps)/(1-2eps) s).
struct ReflectionMap {
  double eps = 0.0;
  double A = 1.0;
  double diam_U = 0.0;
  double small_cutoff = 0.0;            // eps/(6A(1+eps)) diam(U)
  std::vector<int> target;              // per complement ball: domain ball or -1
  std::vector<char> small;              // member of the small family
  std::vector<int> multiplicity;        // per domain ball
  int K = 0;                            // max multiplicity
  bool corridor_ok = true;              // radius corridor on every mapped pair
  double dist_worst = 0.0;              // measured d(x,y)/s against the bound
  double dist_bound = 0.0;              // (2 + 3A/2)(1+eps)/eps
  bool chain_ok = true;                 // chains for 6-dilate-meeting pairs
  int chain_max_len = 0;
  double preball_rad_worst = 1.0;       // measured against (e:ref.preball.rad)
  bool preball_rad_ok = true;
};

inline ReflectionMap build_reflection(const DiscreteSpace& s, const USet& u, const USet& usharp,
                                      const WhitneyCover& cov_u, const WhitneyCover& cov_sharp,
                                      double A) {
  if (cov_u.eps != cov_sharp.eps)
    throw std::invalid_argument("build_reflection: covers must share eps");
  for (auto& b : cov_sharp.balls)
    if (!usharp.mask[b.center])
      throw std::invalid_argument("build_reflection: complement cover does not live on U^#");
  for (auto& b : cov_u.balls)
    if (!u.mask[b.center])
      throw std::invalid_argument("build_reflection: domain cover does not live on U");
  double eps = cov_u.eps;
  if (!(eps > 0.0 && eps < 1.0 / 14.0))
    throw std::invalid_argument("build_reflection: eps in (0, 1/14) required");
  ReflectionMap refl;
  refl.eps = eps;
  refl.A = A;
  refl.diam_U = diam_of(s, u);
  refl.small_cutoff = eps / (6.0 * A * (1.0 + eps)) * refl.diam_U;
  refl.dist_bound = (2.0 + 1.5 * A) * (1.0 + eps) / eps;
  refl.target.assign(cov_sharp.balls.size(), -1);
  refl.small.assign(cov_sharp.balls.size(), 0);
  refl.multiplicity.assign(cov_u.balls.size(), 0);

  const double rlo_f = (1.0 + eps) / (1.0 + 4.0 * eps);
  const double rhi_f = (1.0 + eps) / (1.0 - 2.0 * eps);
  for (std::size_t bi = 0; bi < cov_sharp.balls.size(); ++bi) {
    double sball = cov_sharp.balls[bi].r;
    if (!(sball < refl.small_cutoff)) continue;
    refl.small[bi] = 1;
    int y = cov_sharp.balls[bi].center;
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t di = 0; di < cov_u.balls.size(); ++di) {
      double r = cov_u.balls[di].r;
      if (!(r > rlo_f * sball && r < rhi_f * sball)) continue;
      double d = s.dist(cov_u.balls[di].center, y);
      if (d < best_d) {
        best_d = d;
        best = (int)di;
      }
    }
    if (best < 0)
      throw std::runtime_error(
          "build_reflection: no domain ball in the radius corridor for complement ball " +
          std::to_string(bi) + " (U not uniform at this scale, or eps too large)");
    refl.target[bi] = best;
    refl.multiplicity[best]++;
    refl.dist_worst = std::max(refl.dist_worst, best_d / sball);
    if (!(best_d <= refl.dist_bound * sball))
      throw std::runtime_error("build_reflection: nearest corridor ball too far for ball " +
                               std::to_string(bi));
    double r = cov_u.balls[best].r;
    if (!(r > rlo_f * sball * (1 - 1e-12) && r < rhi_f * sball * (1 + 1e-12)))
      refl.corridor_ok = false;
  }
  for (int m : refl.multiplicity) refl.K = std::max(refl.K, m);

  // chain property for small pairs whose 6-dilates meet
  const double pre_lo =
      (1.0 - 2.0 * eps) * (1.0 - 5.0 * eps) / ((1.0 + 4.0 * eps) * (1.0 + 7.0 * eps));
  // 3-dilate intersection graph over the domain cover. Metric link with a
  // lattice floor: balls whose radii sit below the resolution are forced onto
  // grid points and cannot 3-intersect, so adjacency at one spacing counts.
  const double floor_link = 1.5 * s.min_spacing();
  auto linked = [&](int a, int b) {
    double d = s.dist(cov_u.balls[a].center, cov_u.balls[b].center);
    return d < std::max(3.0 * (cov_u.balls[a].r + cov_u.balls[b].r), floor_link);
  };
  auto chain_len = [&](int a, int b) {
    if (a == b) return 1;
    std::vector<int> depth(cov_u.balls.size(), -1);
    std::queue<int> q;
    q.push(a);
    depth[a] = 1;
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      if (v == b) return depth[v];
      for (std::size_t w = 0; w < cov_u.balls.size(); ++w)
        if (depth[w] < 0 && linked(v, (int)w)) {
          depth[w] = depth[v] + 1;
          q.push((int)w);
        }
    }
    return -1;
  };
  for (std::size_t b1 = 0; b1 < cov_sharp.balls.size(); ++b1) {
    if (!refl.small[b1]) continue;
    for (std::size_t b2 = b1 + 1; b2 < cov_sharp.balls.size(); ++b2) {
      if (!refl.small[b2]) continue;
      double s1 = cov_sharp.balls[b1].r, s2 = cov_sharp.balls[b2].r;
      if (s.dist(cov_sharp.balls[b1].center, cov_sharp.balls[b2].center) >= 6.0 * (s1 + s2))
        continue;
      double r1 = cov_u.balls[refl.target[b1]].r, r2 = cov_u.balls[refl.target[b2]].r;
      double ratio = r1 / r2;
      refl.preball_rad_worst = std::max({refl.preball_rad_worst, ratio * pre_lo, pre_lo / ratio});
      if (!(ratio >= pre_lo * (1 - 1e-12) && ratio <= (1 + 1e-12) / pre_lo))
        refl.preball_rad_ok = false;
      int len = chain_len(refl.target[b1], refl.target[b2]);
      if (len < 0)
        refl.chain_ok = false;
      else
        refl.chain_max_len = std::max(refl.chain_max_len, len);
    }
  }
  return refl;
}

// Ext_Q(u): u on U; the psi-weighted sum of reflected-ball averages on U^#;
// on boundary-layer vertices the closure of U wins (value of the nearest U
// vertex), keeping the extension continuous for continuous u.
struct Extension {
  std::vector<double> values;
  std::vector<char> full_sum;  // where the small-family psi mass is 1 (within 1e-12)
};

inline Extension extend(const DiscreteSpace& s, const USet& u, const USet& usharp,
                        const std::vector<double>& f, const ReflectionMap& refl,
                        const PartitionOfUnity& pou_sharp, const WhitneyCover& cov_u) {
  if (f.size() != (std::size_t)s.size()) throw std::invalid_argument("extend: vector length");
  Extension ext;
  ext.values.assign(s.size(), 0.0);
  ext.full_sum.assign(s.size(), 0);
  std::vector<double> psi_small_sum(s.size(), 0.0);

  for (std::size_t bi = 0; bi < pou_sharp.balls.size(); ++bi) {
    if (!refl.small[bi]) continue;
    int di = refl.target[bi];
    double msum = 0.0;
    KahanSum acc;
    for (int v : s.ball(cov_u.balls[di].center, 3.0 * cov_u.balls[di].r)) {
      if (!u.mask[v]) continue;
      msum += s.weight(v);
      acc.add(s.weight(v) * f[v]);
    }
    double avg = acc.value() / msum;  // nonempty: the centre lies in U
    for (auto& [v, val] : pou_sharp.psi[bi]) {
      ext.values[v] += avg * val;
      psi_small_sum[v] += val;
    }
  }
  for (int v = 0; v < s.size(); ++v)
    if (usharp.mask[v] && std::abs(psi_small_sum[v] - 1.0) <= 1e-12) ext.full_sum[v] = 1;

  // restriction is the identity, bit for bit
  for (int v = 0; v < s.size(); ++v)
    if (u.mask[v]) ext.values[v] = f[v];

  // boundary layer: nearest U vertex (ties by id), the closure rule
  for (int v = 0; v < s.size(); ++v) {
    if (u.mask[v] || usharp.mask[v]) continue;
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    double probe = 2.0 * s.min_spacing();
    while (best < 0 && probe <= 4.0 * s.diameter()) {
      for (int w : s.ball(v, probe))
        if (u.mask[w]) {
          double d = s.dist(v, w);
          if (d < bd || (d == bd && w < best)) {
            bd = d;
            best = w;
          }
        }
      probe *= 2.0;
    }
    if (best >= 0) ext.values[v] = f[best];
    ext.full_sum[v] = 0;
  }
  return ext;
}

// Measured constants for the extension bounds, plus the collar-decay table
// standing in for the vanishing boundary energy.
struct ExtensionReport {
  double ref_lp_C1 = 0.0;   // L^p bound at dilate A1 = 2
  double ext_pi_C = 0.0;    // oscillation bound at dilate K = 4
  double ext_ep_C = 0.0;    // total energy bound
  double pi_ud_C = 0.0;     // Poincare on B_U balls at dilate 2
  std::vector<double> collar_deltas;
  std::vector<double> collar_energy;
  int samples_used = 0;
  int skipped = 0;
};

inline ExtensionReport verify_extension(const DiscreteSpace& s, const USet& u,
                                        const std::vector<double>& f, const Extension& ext,
                                        const EnergyForm& form, const ScaleFn& psi,
                                        const std::vector<int>& boundary_vertices,
                                        const std::vector<double>& r_grid) {
  ExtensionReport rep;
  const double p = form.p();
  auto gamma_ext = form.energy_measure(ext.values);
  auto gamma_restr = form.energy_measure_restricted(ext.values, u.mask);

  auto lp_on = [&](const std::vector<int>& verts, const std::vector<double>& g, double shift) {
    KahanSum acc;
    for (int v : verts) acc.add(s.weight(v) * std::pow(std::abs(g[v] - shift), p));
    return acc.value();
  };
  auto min_over_shift = [&](const std::vector<int>& verts, const std::vector<double>& g) {
    // golden-section over the convex objective
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int v : verts) {
      lo = std::min(lo, g[v]);
      hi = std::max(hi, g[v]);
    }
    if (!(lo < hi)) return 0.0;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = lp_on(verts, g, c), fd = lp_on(verts, g, d);
    for (int it = 0; it < 80; ++it) {
      if (fc < fd) {
        b = d; d = c; fd = fc;
        c = b - gr * (b - a);
        fc = lp_on(verts, g, c);
      } else {
        a = c; c = d; fc = fd;
        d = a + gr * (b - a);
        fd = lp_on(verts, g, d);
      }
    }
    return std::min(fc, fd);
  };

  for (int xi : boundary_vertices) {
    for (double r : r_grid) {
      auto ball = s.ball(xi, r);
      std::vector<int> ball_u, ball_u2, ball_u4;
      for (int v : s.ball(xi, 2.0 * r))
        if (u.mask[v]) ball_u2.push_back(v);
      for (int v : ball)
        if (u.mask[v]) ball_u.push_back(v);
      // (ref.Lp): |Ext|^p mass of the full ball against |u|^p on B_U(xi, 2r)
      double num = lp_on(ball, ext.values, 0.0);
      double den = lp_on(ball_u2, f, 0.0);
      if (den > 0.0) rep.ref_lp_C1 = std::max(rep.ref_lp_C1, num / den);
      else if (num > 1e-300) rep.skipped++;
      // (ext.PI): best-shift oscillation against Gamma_{p,U} on the 4r dilate
      double osc = min_over_shift(ball, ext.values);
      double den2 = psi(r) * mass_of(gamma_restr, s.ball(xi, 4.0 * r));
      if (den2 > 0.0) rep.ext_pi_C = std::max(rep.ext_pi_C, osc / den2);
      else if (osc > 1e-300) rep.skipped++;
      rep.samples_used++;
    }
  }

  // (extEp): total energy of the extension against the domain data
  {
    KahanSum lp_u, gu;
    for (int v = 0; v < s.size(); ++v)
      if (u.mask[v]) {
        lp_u.add(s.weight(v) * std::pow(std::abs(f[v]), p));
        gu.add(gamma_restr[v]);
      }
    double diamU = diam_of(s, u);
    double den = gu.value() + lp_u.value() / psi(diamU);
    if (den > 0.0) rep.ext_ep_C = form.energy(ext.values) / den;
  }

  // collar decay: energy-measure mass of Ext within delta of the boundary set
  {
    std::vector<double> dist_to_bdry(s.size(), std::numeric_limits<double>::infinity());
    for (int v = 0; v < s.size(); ++v)
      for (int b : boundary_vertices)
        dist_to_bdry[v] = std::min(dist_to_bdry[v], s.dist(v, b));
    double d0 = 0.0;
    for (double r : r_grid) d0 = std::max(d0, r);
    for (int k = 0; k < 4; ++k) {
      double delta = d0 / std::pow(2.0, k);
      KahanSum acc;
      for (int v = 0; v < s.size(); ++v)
        if (dist_to_bdry[v] < delta) acc.add(gamma_ext[v]);
      rep.collar_deltas.push_back(delta);
      rep.collar_energy.push_back(acc.value());
    }
  }

  // Poincare on the domain's own balls B_U(x, r)
  {
    auto gamma_f = form.energy_measure_restricted(f, u.mask);
    int step = std::max(1, u.count / 24);
    int seen = 0;
    for (int v = 0; v < s.size(); ++v) {
      if (!u.mask[v]) continue;
      if (seen++ % step) continue;
      for (double r : r_grid) {
        std::vector<int> bu, bu2;
        for (int w : s.ball(v, r))
          if (u.mask[w]) bu.push_back(w);
        for (int w : s.ball(v, 2.0 * r))
          if (u.mask[w]) bu2.push_back(w);
        double mb = 0.0;
        KahanSum mean;
        for (int w : bu) {
          mb += s.weight(w);
          mean.add(s.weight(w) * f[w]);
        }
        if (mb <= 0.0) continue;
        double num = lp_on(bu, f, mean.value() / mb);
        double den = psi(r) * mass_of(gamma_f, bu2);
        if (den > 0.0) rep.pi_ud_C = std::max(rep.pi_ud_C, num / den);
      }
    }
  }
  return rep;
}

// Boundary layer of U: vertices in neither U nor U^#.
inline std::vector<int> boundary_layer(const USet& u, const USet& usharp) {
  std::vector<int> out;
  for (std::size_t v = 0; v < u.mask.size(); ++v)
    if (!u.mask[v] && !usharp.mask[v]) out.push_back((int)v);
  return out;
}

}  // namespace fbz
