#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fbz/common.hpp"
#include "fbz/kernel.hpp"
#include "fbz/scale.hpp"
#include "fbz/space.hpp"

namespace fbz {

enum class KsDenominator { psi_of_r, psi_of_d };

namespace detail {

inline std::vector<char> full_mask(int n) { return std::vector<char>(n, 1); }

inline const std::vector<char>& mask_or_full(const DiscreteSpace& s,
                                             const std::vector<char>& omega,
                                             std::vector<char>& storage) {
  if (omega.empty()) {
    storage = full_mask(s.size());
    return storage;
  }
  if (omega.size() != (std::size_t)s.size())
    throw std::invalid_argument("omega mask size mismatch");
  return omega;
}

// Distance-sorted row around y: distances ascending with prefix masses, and
// for each entry the mass of the strict ball B(y, d) (tie blocks share it).
struct SortedRow {
  std::vector<int> idx;
  std::vector<double> dist;
  std::vector<double> strict_ball_mass;

  static SortedRow build(const DiscreteSpace& s, int y) {
    SortedRow row;
    int n = s.size();
    row.idx.resize(n);
    row.dist.resize(n);
    std::vector<std::pair<double, int>> order(n);
    for (int x = 0; x < n; ++x) order[x] = {s.dist(y, x), x};
    std::sort(order.begin(), order.end());
    row.strict_ball_mass.resize(n);
    double prefix = 0.0;
    double block_mass = 0.0;
    for (int k = 0; k < n; ++k) {
      row.dist[k] = order[k].first;
      row.idx[k] = order[k].second;
      if (k > 0 && order[k].first > order[k - 1].first) {
        prefix += block_mass;
        block_mass = 0.0;
      }
      row.strict_ball_mass[k] = prefix;
      block_mass += s.weight(order[k].second);
    }
    return row;
  }
};

}  // namespace detail

// Korevaar-Schoen functional at scale r:
//   sum_{y in Omega} m(y)/m(B(y,r)) sum_{x in B(y,r) cap Omega, x != y}
//     m(x) |u(x)-u(y)|^p / D,
// D = Psi(r) or Psi(d(x,y)). The ball mass in the average is unrestricted.
inline double ks_functional(const DiscreteSpace& s, const std::vector<double>& u, double p,
                            const ScaleFn& psi, double r, KsDenominator denom,
                            const std::vector<char>& omega = {}, int n_threads = 1) {
  if (!(r > 0.0)) throw std::invalid_argument("ks_functional: r must be > 0");
  std::vector<char> storage;
  const auto& om = detail::mask_or_full(s, omega, storage);
  const double psir = psi(r);
  return parallel_sum(s.size(), n_threads, [&](std::size_t b, std::size_t e) {
    KahanSum acc;
    for (std::size_t yi = b; yi < e; ++yi) {
      int y = (int)yi;
      if (!om[y]) continue;
      auto ball = s.ball(y, r);
      double mb = 0.0;
      for (int x : ball) mb += s.weight(x);
      KahanSum inner;
      for (int x : ball) {
        if (x == y || !om[x]) continue;
        double diff = std::pow(std::abs(u[x] - u[y]), p);
        double D = denom == KsDenominator::psi_of_r ? psir : psi(s.dist(x, y));
        inner.add(s.weight(x) * diff / D);
      }
      acc.add(s.weight(y) / mb * inner.value());
    }
    return acc.value();
  });
}

// Mollified energy functional
//   sum_{x,y in Omega, x != y} m(x) m(y) |u(x)-u(y)|^p rho_eps(x,y) / Psi(d(x,y)).
inline double kernel_functional(const DiscreteSpace& s, const std::vector<double>& u, double p,
                                const ScaleFn& psi, const KernelFamily& fam, double eps,
                                const std::vector<char>& omega = {}, int n_threads = 1) {
  if (!(eps > 0.0)) throw std::invalid_argument("kernel_functional: eps must be > 0");
  std::vector<char> storage;
  const auto& om = detail::mask_or_full(s, omega, storage);
  const bool ks_like =
      fam.kind() == KernelFamily::Kind::ks || fam.kind() == KernelFamily::Kind::ks_hat;
  return parallel_sum(s.size(), n_threads, [&](std::size_t b, std::size_t e) {
    KahanSum acc;
    for (std::size_t yi = b; yi < e; ++yi) {
      int y = (int)yi;
      if (!om[y]) continue;
      KahanSum inner;
      if (ks_like) {
        double meps = s.ball_mass(y, eps);
        for (int x : s.ball(y, eps)) {
          if (x == y || !om[x]) continue;
          double d = s.dist(x, y);
          double rho = fam.eval_with_ball_mass(s, x, y, eps, meps);
          inner.add(s.weight(x) * std::pow(std::abs(u[x] - u[y]), p) * rho / psi(d));
        }
      } else if (fam.kind() == KernelFamily::Kind::bbm) {
        auto row = detail::SortedRow::build(s, y);
        double th = fam.theta(eps);
        double pref = fam.theta_p() - th;
        double expo = fam.p() * fam.theta_p();
        for (std::size_t k = 0; k < row.idx.size(); ++k) {
          int x = row.idx[k];
          if (x == y || !om[x]) continue;
          double d = row.dist[k];
          double mB = row.strict_ball_mass[k];
          double rho = pref * std::pow(d, expo - fam.p() * th) / mB;
          inner.add(s.weight(x) * std::pow(std::abs(u[x] - u[y]), p) * rho / psi(d));
        }
      } else {
        for (int x = 0; x < s.size(); ++x) {
          if (x == y || !om[x]) continue;
          double rho = fam.eval(s, x, y, eps);
          if (rho <= 0.0) continue;
          inner.add(s.weight(x) * std::pow(std::abs(u[x] - u[y]), p) * rho / psi(s.dist(x, y)));
        }
      }
      acc.add(s.weight(y) * inner.value());
    }
    return acc.value();
  });
}

// Full off-diagonal Besov (p,p) double sum
//   sum_{x != y} m(x) m(y) |u(x)-u(y)|^p / (d(x,y)^{p theta} m(B(y, d(x,y)))).
inline double besov_pp_norm(const DiscreteSpace& s, const std::vector<double>& u, double p,
                            double theta, int n_threads = 1) {
  return parallel_sum(s.size(), n_threads, [&](std::size_t b, std::size_t e) {
    KahanSum acc;
    for (std::size_t yi = b; yi < e; ++yi) {
      int y = (int)yi;
      auto row = detail::SortedRow::build(s, y);
      KahanSum inner;
      for (std::size_t k = 0; k < row.idx.size(); ++k) {
        int x = row.idx[k];
        if (x == y) continue;
        double d = row.dist[k];
        inner.add(s.weight(x) * std::pow(std::abs(u[x] - u[y]), p) /
                  (std::pow(d, p * theta) * row.strict_ball_mass[k]));
      }
      acc.add(s.weight(y) * inner.value());
    }
    return acc.value();
  });
}

struct SweepReport {
  std::string axis;  // "r" | "eps" | "theta"
  std::vector<double> grid;
  std::vector<double> values;
  std::optional<double> extrapolated_limit;
  double fit_residual = 0.0;
  double sup_value = 0.0;
  double liminf_value = 0.0;  // min over the tail half of the grid

  void finalize_stats() {
    sup_value = 0.0;
    for (double v : values) sup_value = std::max(sup_value, v);
    std::size_t tail = values.size() / 2;
    liminf_value = std::numeric_limits<double>::infinity();
    for (std::size_t i = tail; i < values.size(); ++i)
      liminf_value = std::min(liminf_value, values[i]);
    if (values.empty()) liminf_value = 0.0;
  }
};

// BBM sweep: (theta_p - theta) * besov_pp with exponent theta, over an
// ascending theta grid below theta_p. Extrapolates linearly in
// s = theta_p - theta over the last four points; refuses the limit when the
// fit residual exceeds 10% of it.
inline SweepReport bbm_sweep(const DiscreteSpace& s, const std::vector<double>& u, double p,
                             double theta_p, const std::vector<double>& theta_grid,
                             const std::vector<char>& omega = {}, int n_threads = 1) {
  for (std::size_t i = 0; i < theta_grid.size(); ++i) {
    if (!(theta_grid[i] < theta_p))
      throw std::invalid_argument("bbm_sweep: theta grid must stay below theta_p");
    if (i && !(theta_grid[i] > theta_grid[i - 1]))
      throw std::invalid_argument("bbm_sweep: theta grid must ascend");
  }
  std::vector<char> storage;
  const auto& om = detail::mask_or_full(s, omega, storage);
  SweepReport rep;
  rep.axis = "theta";
  rep.grid = theta_grid;
  rep.values.assign(theta_grid.size(), 0.0);
  for (std::size_t t = 0; t < theta_grid.size(); ++t) {
    double theta = theta_grid[t];
    rep.values[t] =
        (theta_p - theta) * parallel_sum(s.size(), n_threads, [&](std::size_t b, std::size_t e) {
          KahanSum acc;
          for (std::size_t yi = b; yi < e; ++yi) {
            int y = (int)yi;
            if (!om[y]) continue;
            auto row = detail::SortedRow::build(s, y);
            KahanSum inner;
            for (std::size_t k = 0; k < row.idx.size(); ++k) {
              int x = row.idx[k];
              if (x == y || !om[x]) continue;
              double d = row.dist[k];
              inner.add(s.weight(x) * std::pow(std::abs(u[x] - u[y]), p) /
                        (std::pow(d, p * theta) * row.strict_ball_mass[k]));
            }
            acc.add(s.weight(y) * inner.value());
          }
          return acc.value();
        });
  }
  rep.finalize_stats();

  std::size_t nfit = std::min<std::size_t>(4, rep.values.size());
  if (nfit >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = rep.values.size() - nfit; k < rep.values.size(); ++k) {
      double x = theta_p - theta_grid[k];
      sx += x;
      sy += rep.values[k];
      sxx += x * x;
      sxy += x * rep.values[k];
    }
    double n = (double)nfit;
    double det = n * sxx - sx * sx;
    if (det != 0.0) {
      double a = (n * sxy - sx * sy) / det;
      double L = (sy - a * sx) / n;
      double res = 0.0;
      for (std::size_t k = rep.values.size() - nfit; k < rep.values.size(); ++k)
        res = std::max(res, std::abs(L + a * (theta_p - theta_grid[k]) - rep.values[k]));
      rep.fit_residual = res;
      if (res <= 0.10 * std::abs(L)) rep.extrapolated_limit = L;
    }
  }
  return rep;
}

struct WeakMonotonicityReport {
  std::vector<double> eps_grid;
  std::vector<double> values;
  double sup_value = 0.0;
  double tail_min = 0.0;
  double ratio = 1.0;
  bool zero_flagged = false;  // all values zero: ratio 1 by convention
};

inline WeakMonotonicityReport weak_monotonicity(const DiscreteSpace& s,
                                                const std::vector<double>& u, double p,
                                                const ScaleFn& psi, const KernelFamily& fam,
                                                const std::vector<double>& eps_grid,
                                                const std::vector<char>& omega = {},
                                                int n_threads = 1) {
  WeakMonotonicityReport rep;
  rep.eps_grid = eps_grid;
  for (double eps : eps_grid)
    rep.values.push_back(kernel_functional(s, u, p, psi, fam, eps, omega, n_threads));
  rep.sup_value = 0.0;
  for (double v : rep.values) rep.sup_value = std::max(rep.sup_value, v);
  rep.tail_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = rep.values.size() / 2; i < rep.values.size(); ++i)
    rep.tail_min = std::min(rep.tail_min, rep.values[i]);
  if (rep.sup_value <= 0.0) {
    rep.ratio = 1.0;
    rep.zero_flagged = true;
    rep.tail_min = 0.0;
  } else {
    rep.ratio = rep.sup_value / rep.tail_min;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// critical exponent estimation

struct AlphaEstimate {
  double alpha_hat = 0.0;
  double lo = 0.0, hi = 0.0;
  std::vector<int> levels_used;
  std::string exponent_kind = "alpha_p";
  std::string method_note;
  bool monotone_ok = true;
};

// theta-free moment table: M(u, r) = int_X avg_{B(y,r)} |u(x)-u(y)|^p, so that
// E_{p,theta}(u, r) = M(u, r) / r^{p theta}.
struct AlphaLevelData {
  double lattice_h = 0.0;
  std::vector<double> r_grid;
  std::vector<std::vector<double>> moments;  // [bank][r]
};

inline AlphaLevelData alpha_level_data(const DiscreteSpace& s,
                                       const std::vector<std::vector<double>>& bank, double p,
                                       double lattice_h, int grid_base = 2, int n_threads = 1) {
  AlphaLevelData out;
  out.lattice_h = lattice_h;
  for (double r = 4.0 * lattice_h; r <= s.diameter() / 4.0 * (1 + 1e-12); r *= grid_base)
    out.r_grid.push_back(r);
  if (out.r_grid.empty()) out.r_grid.push_back(4.0 * lattice_h);
  out.moments.resize(bank.size());
  for (std::size_t b = 0; b < bank.size(); ++b)
    for (double r : out.r_grid)
      out.moments[b].push_back(
          ks_functional(s, bank[b], p, ScaleFn::power(1.0), r, KsDenominator::psi_of_r, {},
                        n_threads));
  return out;
}

// Slope of log sup_r E_{p,theta} against log (1/h) for the best (least
// growing) bank function; subcritical iff it stays below slope_thr.
inline double alpha_growth_slope(const std::vector<AlphaLevelData>& levels, double p,
                                 double theta) {
  std::size_t nbank = levels.front().moments.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < nbank; ++b) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& L : levels) {
      double sup = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < L.r_grid.size(); ++j) {
        // Psi(r) = r in the moment table; E_{p,theta} = M r / r^{p theta}
        double v = std::log(std::max(L.moments[b][j], 1e-300)) +
                   (1.0 - p * theta) * std::log(L.r_grid[j]);
        sup = std::max(sup, v);
      }
      double x = std::log(1.0 / L.lattice_h);
      sx += x;
      sy += sup;
      sxx += x * x;
      sxy += x * sup;
    }
    double n = (double)levels.size();
    double det = n * sxx - sx * sx;
    double slope = det != 0.0 ? (n * sxy - sx * sy) / det : 0.0;
    best = std::min(best, slope);
  }
  return best;
}

inline AlphaEstimate estimate_alpha(const std::vector<AlphaLevelData>& levels, double p,
                                    double theta_lo, double theta_hi, int bisection_steps = 24,
                                    double slope_thr = 0.05) {
  if (levels.size() < 3) throw std::invalid_argument("estimate_alpha: need >= 3 levels");
  AlphaEstimate est;
  auto subcritical = [&](double theta) { return alpha_growth_slope(levels, p, theta) < slope_thr; };

  double lo = theta_lo, hi = theta_hi;
  // widen if the initial bracket does not straddle
  for (int guard = 0; guard < 8 && !subcritical(lo); ++guard) {
    hi = lo;
    lo *= 0.5;
    est.monotone_ok = false;
  }
  for (int guard = 0; guard < 8 && subcritical(hi); ++guard) {
    lo = hi;
    hi *= 1.5;
    est.monotone_ok = false;
  }
  std::vector<std::pair<double, bool>> classified;
  for (int it = 0; it < bisection_steps; ++it) {
    double mid = 0.5 * (lo + hi);
    bool sub = subcritical(mid);
    classified.push_back({mid, sub});
    (sub ? lo : hi) = mid;
  }
  // monotone classification audit (Prop of inclusion between the spaces):
  // no subcritical theta may exceed a supercritical one
  for (auto& a : classified)
    for (auto& b : classified)
      if (a.second && !b.second && a.first > b.first) est.monotone_ok = false;
  est.lo = lo;
  est.hi = hi;
  est.alpha_hat = 0.5 * (lo + hi);
  est.method_note = "bisection on the sup_r growth slope, threshold " + std::to_string(slope_thr);
  return est;
}

// ---------------------------------------------------------------------------
// lemma-style inequality checks

struct LemmaCheckReport {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

// double-variance bound on a ball B(z,r) with the exact constant 2^p
inline LemmaCheckReport doublevar_check(const DiscreteSpace& s, const std::vector<double>& u,
                                        double p, int z, double r) {
  auto ball = s.ball(z, r);
  double mb = 0.0;
  KahanSum mean;
  for (int v : ball) {
    mb += s.weight(v);
    mean.add(s.weight(v) * u[v]);
  }
  double ubar = mb > 0 ? mean.value() / mb : 0.0;
  KahanSum lhs, osc;
  for (int x : ball)
    for (int y : ball) lhs.add(s.weight(x) * s.weight(y) * std::pow(std::abs(u[x] - u[y]), p));
  for (int x : ball) osc.add(s.weight(x) * std::pow(std::abs(u[x] - ubar), p));
  LemmaCheckReport rep;
  rep.lhs = lhs.value();
  rep.rhs = std::pow(2.0, p) * mb * osc.value();
  rep.holds = rep.lhs <= rep.rhs * (1 + 1e-12) + 1e-300;
  return rep;
}

// localisation of a short-range double integral with the exact doubling
// constant for this delta, c_D(delta) = max_y m(B(y,2 delta))/m(B(y,delta))
inline LemmaCheckReport triint_check(const DiscreteSpace& s,
                                     const std::function<double(int, int)>& h,
                                     const std::vector<char>& U, double delta) {
  int n = s.size();
  if (U.size() != (std::size_t)n) throw std::invalid_argument("triint_check: mask size");
  double cD = 1.0;
  for (int y = 0; y < n; ++y) {
    double m1 = s.ball_mass(y, delta);
    if (m1 > 0) cD = std::max(cD, s.ball_mass(y, 2.0 * delta) / m1);
  }
  KahanSum lhs;
  for (int y = 0; y < n; ++y) {
    if (!U[y]) continue;
    for (int x = 0; x < n; ++x) {
      double v = h(x, y);
      if (v == 0.0) continue;
      if (s.dist(x, y) >= delta)
        throw std::invalid_argument("triint_check: h must vanish for d >= delta");
      lhs.add(v * s.weight(x) * s.weight(y));
    }
  }
  // U(2 delta) = { z : d(z, U) < 2 delta }
  KahanSum rhs;
  for (int z = 0; z < n; ++z) {
    bool in_dilate = false;
    for (int w : s.ball(z, 2.0 * delta))
      if (U[w]) { in_dilate = true; break; }
    if (!in_dilate) continue;
    auto b2 = s.ball(z, 2.0 * delta);
    KahanSum inner;
    for (int x : b2)
      for (int y : b2) {
        double v = h(x, y);
        if (v != 0.0) inner.add(v * s.weight(x) * s.weight(y));
      }
    rhs.add(s.weight(z) / s.ball_mass(z, delta) * inner.value());
  }
  LemmaCheckReport rep;
  rep.lhs = lhs.value();
  rep.rhs = cD * rhs.value();
  rep.holds = rep.lhs <= rep.rhs * (1 + 1e-12) + 1e-300;
  return rep;
}

}  // namespace fbz
