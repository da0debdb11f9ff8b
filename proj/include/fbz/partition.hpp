#pragma once

#include <cmath>
#include <unordered_map>
#include <vector>

#include "fbz/covers.hpp"
#include "fbz/energy.hpp"
#include "fbz/scale.hpp"
#include "fbz/space.hpp"

namespace fbz {

enum class CutoffMethod { tent, capacity };

// Controlled partition of unity subordinate to a cover: psi_i = phi_i / sum phi_j
// with cutoffs phi_i = 1 on B(x_i, 3 r_i) and supp phi_i inside B(x_i, 3A r_i).
struct PartitionOfUnity {
  std::vector<CoverBall> balls;
  double A = 2.0;
  std::vector<std::vector<std::pair<int, double>>> psi;  // sparse (vertex, value)
  std::vector<double> energy_per_ball;
  double low_energy_max_ratio = 0.0;  // max E_p(psi_i) Psi(r_i) / m(B(x_i, r_i))
  int N1 = 0;                         // measured 3A-dilate overlap
  double sum_err_max = 0.0;           // max |sum_i psi_i(x) - 1| over U
  bool range_ok = true;
  bool support_ok = true;
  bool floor_ok = true;  // psi_i >= 1/N1 on B(x_i, 3 r_i)
};

namespace detail {

// local capacity cutoff: 1 on B(x,3r), 0 outside B(x,3Ar), minimal energy
inline std::unordered_map<int, double> capacity_cutoff(const DiscreteSpace& s,
                                                       const EnergyForm& form, int center,
                                                       double r, double A, double p) {
  auto inner = s.ball(center, 3.0 * r);
  auto support = s.ball(center, 3.0 * A * r);
  std::unordered_map<int, int> local_id;
  local_id.reserve(support.size() * 2);
  for (int v : support) local_id.emplace(v, (int)local_id.size());
  // edges touching the support; outside endpoints collapse to one grounded
  // node, with parallel edges merged by weight (same potential difference)
  int ground = (int)local_id.size();
  std::vector<EnergyForm::Edge> edges;
  std::vector<char> edge_seen(form.edges().size(), 0);
  for (int v : support) {
    auto [b, e] = form.incident(v);
    for (auto it = b; it != e; ++it) {
      if (edge_seen[*it]) continue;
      edge_seen[*it] = 1;
      const auto& ed = form.edges()[*it];
      auto ia = local_id.find(ed.i), ib = local_id.find(ed.j);
      int a = ia == local_id.end() ? ground : ia->second;
      int bb = ib == local_id.end() ? ground : ib->second;
      if (a == bb) continue;
      edges.push_back({std::min(a, bb), std::max(a, bb), ed.w});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const EnergyForm::Edge& x, const EnergyForm::Edge& y) {
    return std::tie(x.i, x.j) < std::tie(y.i, y.j);
  });
  std::vector<EnergyForm::Edge> merged;
  for (auto& ed : edges) {
    if (!merged.empty() && merged.back().i == ed.i && merged.back().j == ed.j)
      merged.back().w += ed.w;
    else
      merged.push_back(ed);
  }
  EnergyForm local(p, ground + 1, std::move(merged));
  std::vector<int> E1, E0 = {ground};
  for (int v : inner) {
    auto it = local_id.find(v);
    if (it != local_id.end()) E1.push_back(it->second);
  }
  auto sol = solve_capacity(local, E1, E0, 1e-9, 400);
  std::unordered_map<int, double> phi;
  phi.reserve(support.size() * 2);
  for (int v : support) phi[v] = sol.potential[local_id[v]];
  return phi;
}

}  // namespace detail

// Cutoffs are either capacity potentials (faithful to the cap_p(Psi) route,
// costly) or tent profiles clamp((3A r_i - d)/((3A-3) r_i), 0, 1); both equal 1
// on the 3-ball and vanish outside the 3A-dilate, and the quotient uses 0/0=0.
inline PartitionOfUnity build_partition(const DiscreteSpace& s, const USet& u,
                                        const std::vector<CoverBall>& balls, double A,
                                        const EnergyForm& form, const ScaleFn& psi_scale,
                                        CutoffMethod method = CutoffMethod::tent) {
  if (!(A > 1.0)) throw std::invalid_argument("build_partition: A > 1 required");
  PartitionOfUnity pou;
  pou.balls = balls;
  pou.A = A;
  const double p = form.p();
  const int n = s.size();

  // cutoffs, sparse
  std::vector<std::vector<std::pair<int, double>>> phi(balls.size());
  for (std::size_t i = 0; i < balls.size(); ++i) {
    double r = balls[i].r;
    int x = balls[i].center;
    if (method == CutoffMethod::tent) {
      for (int v : s.ball(x, 3.0 * A * r)) {
        double d = s.dist(x, v);
        double val = std::clamp((3.0 * A * r - d) / ((3.0 * A - 3.0) * r), 0.0, 1.0);
        if (val > 0.0) phi[i].push_back({v, val});
      }
    } else {
      for (auto& [v, val] : detail::capacity_cutoff(s, form, x, r, A, p))
        if (val > 0.0) phi[i].push_back({v, val});
    }
  }

  std::vector<double> phi_sum(n, 0.0);
  std::vector<int> overlap(n, 0);
  for (std::size_t i = 0; i < balls.size(); ++i)
    for (auto& [v, val] : phi[i]) {
      phi_sum[v] += val;
      overlap[v]++;
    }
  for (int v = 0; v < n; ++v) pou.N1 = std::max(pou.N1, overlap[v]);
  for (int v = 0; v < n; ++v)
    if (u.mask[v] && phi_sum[v] <= 0.0)
      throw std::runtime_error("build_partition: vertex " + std::to_string(v) +
                               " of U not reached by any cutoff (cover defect)");

  pou.psi.resize(balls.size());
  std::vector<double> psi_sum(n, 0.0);
  for (std::size_t i = 0; i < balls.size(); ++i) {
    pou.psi[i].reserve(phi[i].size());
    for (auto& [v, val] : phi[i]) {
      double q = val / phi_sum[v];  // 0/0 never occurs: val > 0 implies sum > 0
      pou.psi[i].push_back({v, q});
      psi_sum[v] += q;
      if (q < -1e-15 || q > 1.0 + 1e-12) pou.range_ok = false;
      if (!(s.dist(balls[i].center, v) < 3.0 * A * balls[i].r)) pou.support_ok = false;
    }
  }
  for (int v = 0; v < n; ++v)
    if (u.mask[v]) pou.sum_err_max = std::max(pou.sum_err_max, std::abs(psi_sum[v] - 1.0));

  // floor psi_i >= 1/N1 on the 3-ball
  for (std::size_t i = 0; i < balls.size(); ++i) {
    std::unordered_map<int, double> vals(pou.psi[i].begin(), pou.psi[i].end());
    for (int v : s.ball(balls[i].center, 3.0 * balls[i].r)) {
      auto it = vals.find(v);
      double q = it == vals.end() ? 0.0 : it->second;
      if (q * pou.N1 < 1.0 - 1e-9) pou.floor_ok = false;
    }
  }

  // energies and the controlled bound ratio
  pou.energy_per_ball.resize(balls.size(), 0.0);
  std::vector<char> edge_seen(form.edges().size(), 0);
  for (std::size_t i = 0; i < balls.size(); ++i) {
    std::unordered_map<int, double> vals(pou.psi[i].begin(), pou.psi[i].end());
    KahanSum acc;
    std::vector<int> touched;
    for (auto& [v, val] : pou.psi[i]) {
      auto [b, e] = form.incident(v);
      for (auto it = b; it != e; ++it) {
        if (edge_seen[*it]) continue;
        edge_seen[*it] = 1;
        touched.push_back(*it);
        const auto& ed = form.edges()[*it];
        auto ia = vals.find(ed.i);
        auto ib = vals.find(ed.j);
        double a = ia == vals.end() ? 0.0 : ia->second;
        double bb = ib == vals.end() ? 0.0 : ib->second;
        if (a != bb) acc.add(ed.w * std::pow(std::abs(a - bb), p));
      }
    }
    for (int t : touched) edge_seen[t] = 0;
    pou.energy_per_ball[i] = acc.value();
    double ratio = acc.value() * psi_scale(balls[i].r) / s.ball_mass(balls[i].center, balls[i].r);
    pou.low_energy_max_ratio = std::max(pou.low_energy_max_ratio, ratio);
  }
  return pou;
}

// Discrete convolution A_delta u = sum_i avg_{B(x_i, 3 r_i) cap U}(u) psi_i,
// defined on all of X (zero where no psi reaches).
inline std::vector<double> discrete_convolution(const DiscreteSpace& s, const USet& u,
                                                const PartitionOfUnity& pou,
                                                const std::vector<double>& f) {
  if (f.size() != (std::size_t)s.size())
    throw std::invalid_argument("discrete_convolution: vector length");
  std::vector<double> out(s.size(), 0.0);
  for (std::size_t i = 0; i < pou.balls.size(); ++i) {
    double msum = 0.0;
    KahanSum acc;
    for (int v : s.ball(pou.balls[i].center, 3.0 * pou.balls[i].r)) {
      if (!u.mask[v]) continue;
      msum += s.weight(v);
      acc.add(s.weight(v) * f[v]);
    }
    if (msum <= 0.0)
      throw std::runtime_error("discrete_convolution: empty averaging ball at index " +
                               std::to_string(i));
    double avg = acc.value() / msum;
    for (auto& [v, val] : pou.psi[i]) out[v] += avg * val;
  }
  return out;
}

// ||A_delta u - u||_{L^p(U)}
inline double lp_error_on(const DiscreteSpace& s, const USet& u, const std::vector<double>& a,
                          const std::vector<double>& b, double p) {
  KahanSum acc;
  for (int v = 0; v < s.size(); ++v)
    if (u.mask[v]) acc.add(s.weight(v) * std::pow(std::abs(a[v] - b[v]), p));
  return std::pow(acc.value(), 1.0 / p);
}

}  // namespace fbz
