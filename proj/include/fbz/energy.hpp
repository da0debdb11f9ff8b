#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fbz/common.hpp"
#include "fbz/fractal.hpp"
#include "fbz/scale.hpp"
#include "fbz/space.hpp"

namespace fbz {

// Weighted-graph p-energy form E_p(u) = sum_{(i,j,w)} w |u_i - u_j|^p with the
// per-vertex energy measure splitting each edge term half/half between its
// endpoints. Immutable after construction.
class EnergyForm {
 public:
  struct Edge {
    int i, j;
    double w;
  };

  EnergyForm() = default;

  EnergyForm(double p, int vertex_count, std::vector<Edge> edges) : p_(p), n_(vertex_count) {
    if (!(p > 1.0) || !std::isfinite(p))
      throw std::invalid_argument("EnergyForm: p must lie in (1,inf)");
    for (auto& e : edges) {
      if (e.i == e.j) throw std::invalid_argument("EnergyForm: loop edge");
      if (e.i > e.j) std::swap(e.i, e.j);
      if (e.i < 0 || e.j >= n_) throw std::invalid_argument("EnergyForm: edge out of range");
      if (!(e.w > 0.0) || !std::isfinite(e.w))
        throw std::invalid_argument("EnergyForm: edge weight must be positive and finite");
    }
    std::sort(edges.begin(), edges.end(),
              [](const Edge& a, const Edge& b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); });
    for (std::size_t k = 1; k < edges.size(); ++k)
      if (edges[k].i == edges[k - 1].i && edges[k].j == edges[k - 1].j)
        throw std::invalid_argument("EnergyForm: duplicate edge");
    edges_ = std::move(edges);
    head_.assign(n_ + 1, 0);
    for (auto& e : edges_) {
      head_[e.i + 1]++;
      head_[e.j + 1]++;
    }
    for (int v = 0; v < n_; ++v) head_[v + 1] += head_[v];
    incident_.resize(2 * edges_.size());
    std::vector<int> fill(head_.begin(), head_.end() - 1);
    for (int k = 0; k < (int)edges_.size(); ++k) {
      incident_[fill[edges_[k].i]++] = k;
      incident_[fill[edges_[k].j]++] = k;
    }
  }

  double p() const { return p_; }
  int vertex_count() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }

  // Edge indices incident to v.
  std::pair<const int*, const int*> incident(int v) const {
    return {incident_.data() + head_[v], incident_.data() + head_[v + 1]};
  }

  double energy(const std::vector<double>& u) const {
    check_len(u);
    KahanSum acc;
    for (const auto& e : edges_) acc.add(e.w * std::pow(std::abs(u[e.i] - u[e.j]), p_));
    return acc.value();
  }

  // Per-vertex energy measure; totals to energy(u).
  std::vector<double> energy_measure(const std::vector<double>& u) const {
    check_len(u);
    std::vector<double> per(n_, 0.0);
    for (const auto& e : edges_) {
      double t = 0.5 * e.w * std::pow(std::abs(u[e.i] - u[e.j]), p_);
      per[e.i] += t;
      per[e.j] += t;
    }
    return per;
  }

  // Energy measure of the subgraph induced by `mask` (Gamma_{p,U}): only edges
  // with both endpoints inside count.
  std::vector<double> energy_measure_restricted(const std::vector<double>& u,
                                                const std::vector<char>& mask) const {
    check_len(u);
    if (mask.size() != (std::size_t)n_)
      throw std::invalid_argument("energy_measure_restricted: mask size");
    std::vector<double> per(n_, 0.0);
    for (const auto& e : edges_) {
      if (!mask[e.i] || !mask[e.j]) continue;
      double t = 0.5 * e.w * std::pow(std::abs(u[e.i] - u[e.j]), p_);
      per[e.i] += t;
      per[e.j] += t;
    }
    return per;
  }

 private:
  double p_ = 2.0;
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<int> head_;
  std::vector<int> incident_;

  void check_len(const std::vector<double>& u) const {
    if (u.size() != (std::size_t)n_)
      throw std::invalid_argument("EnergyForm: vector length != vertex_count");
  }
};

inline double mass_of(const std::vector<double>& per_vertex, const std::vector<int>& verts) {
  KahanSum acc;
  for (int v : verts) acc.add(per_vertex[v]);
  return acc.value();
}

// ---------------------------------------------------------------------------
// graph construction and renormalisation

enum class WeightMode { unit, renormalized };

// Analytic capacity-ratio rho (value_{k+1}/value_k) where known; NaN otherwise.
inline double analytic_capacity_ratio(FractalKind kind, double p) {
  switch (kind) {
    case FractalKind::interval: return std::pow(2.0, 1.0 - p);
    case FractalKind::vicsek: return std::pow(3.0, 1.0 - p);  // series tree
    case FractalKind::square:
      return p == 2.0 ? 1.0 : std::numeric_limits<double>::quiet_NaN();
    case FractalKind::gasket:
      return p == 2.0 ? 3.0 / 5.0 : std::numeric_limits<double>::quiet_NaN();
    case FractalKind::carpet: return std::numeric_limits<double>::quiet_NaN();
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// Graph energy over the pre-fractal lattice. Renormalized weights are
// w = rho^-level so that capacities stay of unit order across levels.
inline EnergyForm build_form(const Prefractal& f, double p,
                             WeightMode mode = WeightMode::renormalized,
                             double rho_override = 0.0) {
  double w = 1.0;
  if (mode == WeightMode::renormalized) {
    double rho = rho_override > 0.0 ? rho_override : analytic_capacity_ratio(f.kind, p);
    if (!(rho > 0.0))
      throw std::invalid_argument(
          "build_form: no analytic renormalisation for this kind/p; pass rho_override "
          "(estimate it with estimate_capacity_ratio)");
    w = std::pow(rho, -f.level);
  }
  std::vector<EnergyForm::Edge> edges;
  edges.reserve(f.lattice_edges.size());
  for (auto& e : f.lattice_edges) edges.push_back({e.first, e.second, w});
  return EnergyForm(p, f.space.size(), std::move(edges));
}

// ---------------------------------------------------------------------------
// capacity

struct CapacitySolution {
  std::vector<double> potential;
  double value = 0.0;
  int iterations = 0;
  double kkt_residual = 0.0;
};

namespace detail {

// gradient of sum w |du|^p at free vertices (mu = 0)
inline double kkt_residual(const EnergyForm& form, const std::vector<double>& u,
                           const std::vector<char>& fixed) {
  const double p = form.p();
  std::vector<double> g(form.vertex_count(), 0.0);
  for (const auto& e : form.edges()) {
    double t = u[e.i] - u[e.j];
    double d = e.w * p * std::pow(std::abs(t), p - 1.0) * (t > 0 ? 1.0 : (t < 0 ? -1.0 : 0.0));
    g[e.i] += d;
    g[e.j] -= d;
  }
  double r = 0.0;
  for (int v = 0; v < form.vertex_count(); ++v)
    if (!fixed[v]) r = std::max(r, std::abs(g[v]));
  return r;
}

}  // namespace detail

// Minimises E_p over { u : u = 1 on E1, u = 0 on E0 }. Damped Newton on the
// smoothed energy sum w (|du|^2 + mu)^{p/2} with mu -> 0 continuation;
// gradient-descent step when the Newton direction fails. The final potential
// is clamped to [0,1] (a 1-Lipschitz map, so it cannot increase the energy).
inline CapacitySolution solve_capacity(const EnergyForm& form, const std::vector<int>& E1,
                                       const std::vector<int>& E0, double tol = 1e-10,
                                       int max_iter = 600) {
  const int n = form.vertex_count();
  const double p = form.p();
  if (E1.empty() || E0.empty()) throw std::invalid_argument("solve_capacity: empty boundary set");
  std::vector<char> fixed(n, 0);
  std::vector<double> u(n, 0.0);
  for (int v : E0) {
    fixed[v] = 1;
    u[v] = 0.0;
  }
  for (int v : E1) {
    if (fixed[v]) throw std::invalid_argument("solve_capacity: E0 and E1 intersect");
    fixed[v] = 1;
    u[v] = 1.0;
  }

  std::vector<int> free_id(n, -1);
  std::vector<int> free_list;
  for (int v = 0; v < n; ++v)
    if (!fixed[v]) {
      free_id[v] = (int)free_list.size();
      free_list.push_back(v);
    }
  const int nf = (int)free_list.size();

  CapacitySolution sol;
  if (nf > 0) {
    // p = 2 warm start: one linear solve (also the final answer when p == 2)
    auto newton_step = [&](double mu) -> bool {
      Eigen::SparseMatrix<double> H(nf, nf);
      std::vector<Eigen::Triplet<double>> trip;
      Eigen::VectorXd g = Eigen::VectorXd::Zero(nf);
      trip.reserve(form.edges().size() * 4);
      for (const auto& e : form.edges()) {
        double t = u[e.i] - u[e.j];
        double q = t * t + mu;
        double c2 = e.w * p * std::pow(q, 0.5 * p - 2.0) * ((p - 1.0) * t * t + mu);
        double c1 = e.w * p * std::pow(q, 0.5 * p - 1.0) * t;
        int a = free_id[e.i], b = free_id[e.j];
        if (a >= 0) g[a] += c1;
        if (b >= 0) g[b] -= c1;
        if (a >= 0) trip.emplace_back(a, a, c2);
        if (b >= 0) trip.emplace_back(b, b, c2);
        if (a >= 0 && b >= 0) {
          trip.emplace_back(a, b, -c2);
          trip.emplace_back(b, a, -c2);
        }
      }
      H.setFromTriplets(trip.begin(), trip.end());
      // tiny ridge keeps LDLT happy on degenerate components
      for (int k = 0; k < nf; ++k) H.coeffRef(k, k) += 1e-300 + 1e-14 * H.coeff(k, k);
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(H);
      Eigen::VectorXd dir;
      bool have_newton = ldlt.info() == Eigen::Success;
      if (have_newton) dir = ldlt.solve(-g);
      if (!have_newton || !dir.allFinite()) {
        // fall back to scaled gradient descent
        double gn = g.norm();
        if (gn == 0.0) return false;
        dir = -g / std::max(gn, 1.0);
      }
      auto smoothed = [&](const std::vector<double>& w) {
        KahanSum acc;
        for (const auto& e : form.edges()) {
          double t = w[e.i] - w[e.j];
          acc.add(e.w * std::pow(t * t + mu, 0.5 * p));
        }
        return acc.value();
      };
      double f0 = smoothed(u);
      double slope = g.dot(dir);
      if (slope >= 0.0) return false;
      double step = 1.0;
      std::vector<double> trial(u);
      for (int bt = 0; bt < 50; ++bt) {
        for (int k = 0; k < nf; ++k) trial[free_list[k]] = u[free_list[k]] + step * dir[k];
        if (smoothed(trial) <= f0 + 1e-4 * step * slope) {
          u = trial;
          return std::abs(step * slope) > 1e-18 * std::max(1.0, f0);
        }
        step *= 0.5;
      }
      return false;
    };

    // initial mu from the scale of the boundary data
    double mu0 = 1e-2;
    {
      double s = 0.0;
      int cnt = 0;
      for (const auto& e : form.edges()) {
        double t = u[e.i] - u[e.j];
        s += t * t;
        ++cnt;
      }
      if (cnt > 0 && s > 0) mu0 = 1e-2 * s / cnt;
    }
    int it = 0;
    for (double mu = mu0;; mu /= 10.0) {
      bool progress = true;
      for (int k = 0; k < 60 && progress && it < max_iter; ++k, ++it) progress = newton_step(mu);
      if (mu < 1e-12 * std::max(mu0, 1.0)) {
        double res = detail::kkt_residual(form, u, fixed);
        if (res <= tol || it >= max_iter) {
          sol.iterations = it;
          break;
        }
      }
      if (it >= max_iter) {
        sol.iterations = it;
        break;
      }
    }
  }

  for (int v = 0; v < n; ++v) u[v] = std::clamp(u[v], 0.0, 1.0);
  for (int v : E0) u[v] = 0.0;
  for (int v : E1) u[v] = 1.0;
  sol.kkt_residual = nf > 0 ? detail::kkt_residual(form, u, fixed) : 0.0;
  if (sol.kkt_residual > tol && nf > 0)
    throw SolverError("solve_capacity: did not reach tolerance", sol.kkt_residual);
  sol.potential = std::move(u);
  sol.value = form.energy(sol.potential);
  return sol;
}

// value_{level+1} / value_level for opposite-extreme-corner capacity with unit
// weights; the self-similar renormalisation ratio.
// Boundary pieces for capacity probes: extreme corners on finitely ramified
// sets (interval, gasket, vicsek), opposite sides on square and carpet where
// corner-to-corner resistance has a logarithmic correction.
inline std::pair<std::vector<int>, std::vector<int>> capacity_probe_sets(const Prefractal& f) {
  const auto& s = f.space;
  if (f.kind == FractalKind::square || f.kind == FractalKind::carpet) {
    std::vector<int> left, right;
    for (int v = 0; v < s.size(); ++v) {
      if (s.coord(v)[0] == 0.0) left.push_back(v);
      if (s.coord(v)[0] == 1.0) right.push_back(v);
    }
    return {right, left};
  }
  int lo = 0, hi = 0;
  auto score = [&](int v) {
    double t = 0;
    for (int k = 0; k < s.dim(); ++k) t += s.coord(v)[k];
    return t;
  };
  for (int v = 1; v < s.size(); ++v) {
    if (score(v) < score(lo)) lo = v;
    if (score(v) > score(hi)) hi = v;
  }
  return {{hi}, {lo}};
}

inline double estimate_capacity_ratio(FractalKind kind, double p, int level, double tol = 1e-9) {
  double prev = 0.0, ratio = 0.0;
  for (int L = level; L <= level + 1; ++L) {
    auto f = build_fractal(kind, L);
    auto form = build_form(f, p, WeightMode::unit);
    auto [e1, e0] = capacity_probe_sets(f);
    auto sol = solve_capacity(form, e1, e0, tol);
    if (L > level) ratio = sol.value / prev;
    prev = sol.value;
  }
  return ratio;
}

// ---------------------------------------------------------------------------
// property checks

struct ContractionReport {
  bool holds = true;
  double slack = 0.0;  // energy(u) - energy(phi(u))
};

// phi given as a piecewise-linear table (xs ascending, ys), 1-Lipschitz.
inline ContractionReport contraction_check(const EnergyForm& form, const std::vector<double>& u,
                                           const std::vector<double>& xs,
                                           const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("contraction_check: bad table");
  for (std::size_t k = 1; k < xs.size(); ++k) {
    if (!(xs[k] > xs[k - 1])) throw std::invalid_argument("contraction_check: xs not ascending");
    if (std::abs(ys[k] - ys[k - 1]) > (xs[k] - xs[k - 1]) * (1.0 + 1e-12))
      throw std::invalid_argument("contraction_check: slope outside [-1,1]");
  }
  auto phi = [&](double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t k = it - xs.begin();
    double t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    return ys[k - 1] + t * (ys[k] - ys[k - 1]);
  };
  std::vector<double> v(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) v[i] = phi(u[i]);
  double eu = form.energy(u), ev = form.energy(v);
  ContractionReport rep;
  rep.slack = eu - ev;
  rep.holds = ev <= eu * (1.0 + 1e-12) + 1e-300;
  return rep;
}

struct LatticeOpsReport {
  double lhs = 0.0;     // E(u ^ v) + E(u v v)
  double rhs = 0.0;     // E(u) + E(v)
  double c_min = 1.0;   // smallest admissible C on this input
};

inline LatticeOpsReport lattice_ops_check(const EnergyForm& form, const std::vector<double>& u,
                                          const std::vector<double>& v) {
  std::vector<double> lo(u.size()), hi(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    lo[i] = std::min(u[i], v[i]);
    hi[i] = std::max(u[i], v[i]);
  }
  LatticeOpsReport rep;
  rep.lhs = form.energy(lo) + form.energy(hi);
  rep.rhs = form.energy(u) + form.energy(v);
  rep.c_min = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 1.0;
  return rep;
}

// E_p(u / (u+v)) for nonnegative u, v with u+v >= delta on {u != 0}; reports
// the measured constant against E(u) + E(v).
inline LatticeOpsReport quotient_check(const EnergyForm& form, const std::vector<double>& u,
                                       const std::vector<double>& v) {
  std::vector<double> q(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    double s = u[i] + v[i];
    q[i] = s > 0.0 ? u[i] / s : 0.0;
  }
  LatticeOpsReport rep;
  rep.lhs = form.energy(q);
  rep.rhs = form.energy(u) + form.energy(v);
  rep.c_min = rep.rhs > 0.0 ? rep.lhs / rep.rhs : (rep.lhs > 0 ? std::numeric_limits<double>::infinity() : 1.0);
  return rep;
}

// ---------------------------------------------------------------------------
// Poincare measurement

struct PoincareSample {
  int center;
  double r;
};

struct PoincareReport {
  double C_P_hat_A1 = 0.0;  // dilate A_P = 1
  double C_P_hat_A2 = 0.0;  // dilate A_P = 2
  int violations = 0;       // zero denominator with nonzero numerator
  int samples_used = 0;
};

// C_P_hat = max over samples and bank of lhs / (Psi(r) * Gamma-mass of the
// dilated ball); 0/0 samples are skipped, denominator-0 with positive
// numerator counts as a violation.
inline PoincareReport measure_PI(const EnergyForm& form, const DiscreteSpace& s,
                                 const ScaleFn& psi, const std::vector<PoincareSample>& samples,
                                 const std::vector<std::vector<double>>& test_bank) {
  if (test_bank.empty()) throw std::invalid_argument("measure_PI: empty test bank");
  PoincareReport rep;
  for (const auto& u : test_bank) {
    auto gamma = form.energy_measure(u);
    for (const auto& smp : samples) {
      auto b = s.ball(smp.center, smp.r);
      double mb = 0.0;
      KahanSum mean;
      for (int v : b) {
        mb += s.weight(v);
        mean.add(s.weight(v) * u[v]);
      }
      if (mb <= 0.0) continue;
      double ubar = mean.value() / mb;
      KahanSum lhs;
      for (int v : b) lhs.add(s.weight(v) * std::pow(std::abs(u[v] - ubar), form.p()));
      double num = lhs.value();
      for (int which = 0; which < 2; ++which) {
        double ap = which == 0 ? 1.0 : 2.0;
        double den = psi(smp.r) * mass_of(gamma, s.ball(smp.center, ap * smp.r));
        double& slot = which == 0 ? rep.C_P_hat_A1 : rep.C_P_hat_A2;
        if (den > 0.0)
          slot = std::max(slot, num / den);
        else if (num > 1e-300)
          rep.violations++;
      }
      rep.samples_used++;
    }
  }
  return rep;
}

}  // namespace fbz
