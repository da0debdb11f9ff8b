#pragma once

#include <random>
#include <string>
#include <vector>

#include "fbz/besov.hpp"
#include "fbz/covers.hpp"
#include "fbz/diagnostics.hpp"
#include "fbz/energy.hpp"
#include "fbz/extension.hpp"
#include "fbz/fractal.hpp"
#include "fbz/partition.hpp"

namespace fbz {

inline USet full_uset(const DiscreteSpace& s) {
  USet u;
  u.mask.assign(s.size(), 1);
  u.delta.assign(s.size(), std::numeric_limits<double>::infinity());
  u.count = s.size();
  return u;
}

struct TestBank {
  std::vector<std::string> names;
  std::vector<std::vector<double>> fns;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seeded gaussian field constant on cells of a fixed coarse grid, so the same
// continuum function is sampled at every refinement level.
inline double coarse_noise(const DiscreteSpace::Point& c, int dim, std::uint64_t seed,
                           double cell = 1.0 / 32.0) {
  std::uint64_t h = seed;
  for (int k = 0; k < dim; ++k) {
    auto q = (std::int64_t)std::floor(c[k] / cell + 1e-12);
    h = splitmix64(h ^ (std::uint64_t)(q + 0x7fffffff));
  }
  double u1 = ((splitmix64(h) >> 11) + 0.5) * 0x1p-53;
  double u2 = ((splitmix64(h ^ 0xabcdef1234567ull) >> 11) + 0.5) * 0x1p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace detail

// The alpha/comparability bank: coordinate functions, the capacity potential
// between opposite boundary pieces, and A_delta-smoothed noise. The raw noise
// is constant on a fixed coarse grid, so the bank samples the same functions
// at every refinement level.
inline TestBank make_test_bank(const Prefractal& f, const EnergyForm& form, int n_noise = 2,
                               std::uint64_t seed = 1234, double noise_delta = 1.0 / 16.0) {
  TestBank bank;
  const auto& s = f.space;
  for (int k = 0; k < s.dim(); ++k) {
    std::vector<double> u(s.size());
    for (int v = 0; v < s.size(); ++v) u[v] = s.coord(v)[k];
    bank.names.push_back(k == 0 ? "coord_x" : (k == 1 ? "coord_y" : "coord_z"));
    bank.fns.push_back(std::move(u));
  }
  {
    auto [e1, e0] = capacity_probe_sets(f);
    auto sol = solve_capacity(form, e1, e0, 1e-8);
    bank.names.push_back("cap_potential");
    bank.fns.push_back(std::move(sol.potential));
  }
  if (n_noise > 0) {
    auto full = full_uset(s);
    auto cover = good_cover(s, nullptr, 2.0, 2.0, noise_delta);
    auto pou =
        build_partition(s, full, cover.balls, 2.0, form, ScaleFn::power(2.0), CutoffMethod::tent);
    for (int k = 0; k < n_noise; ++k) {
      std::vector<double> raw(s.size());
      for (int v = 0; v < s.size(); ++v)
        raw[v] = detail::coarse_noise(s.coord(v), s.dim(), seed + 101 * k);
      bank.names.push_back("smoothed_noise_" + std::to_string(k));
      bank.fns.push_back(discrete_convolution(s, full, pou, raw));
    }
  }
  return bank;
}

// Walk dimension and critical exponent from the capacity-scaling route:
// with M cells of side 1/L and measured capacity ratio rho,
//   beta = (log M - log rho) / log L,   alpha = beta / p.
struct CapacityScaling {
  double rho = 0.0;
  double beta = 0.0;
  double alpha = 0.0;
  std::vector<double> values;  // capacity per level
  std::vector<int> iterations;
  std::vector<double> kkt_residuals;
};

inline CapacityScaling capacity_scaling(FractalKind kind, double p, int level_lo, int level_hi,
                                        double tol = 1e-9) {
  CapacityScaling out;
  for (int L = level_lo; L <= level_hi; ++L) {
    auto f = build_fractal(kind, L);
    auto form = build_form(f, p, WeightMode::unit);
    auto [e1, e0] = capacity_probe_sets(f);
    auto sol = solve_capacity(form, e1, e0, tol);
    out.values.push_back(sol.value);
    out.iterations.push_back(sol.iterations);
    out.kkt_residuals.push_back(sol.kkt_residual);
  }
  // geometric-mean ratio over the sampled levels
  double acc = 1.0;
  int cnt = 0;
  for (std::size_t i = 1; i < out.values.size(); ++i) {
    acc *= out.values[i] / out.values[i - 1];
    ++cnt;
  }
  out.rho = cnt ? std::pow(acc, 1.0 / cnt) : 0.0;
  double M = contraction_count(kind), L = length_base(kind);
  out.beta = (std::log(M) - std::log(out.rho)) / std::log(L);
  out.alpha = out.beta / p;
  return out;
}

// Comparability probe: kernel functional (KS family, given eps) against the
// total energy-measure mass, per bank function.
struct ComparabilityRow {
  std::string name;
  double functional = 0.0;
  double gamma_mass = 0.0;
  double ratio = 0.0;
};

inline std::vector<ComparabilityRow> comparability_rows(const Prefractal& f,
                                                        const EnergyForm& form,
                                                        const ScaleFn& psi, double eps,
                                                        const TestBank& bank,
                                                        int n_threads = 1) {
  std::vector<ComparabilityRow> rows;
  auto fam = KernelFamily::ks(psi);
  for (std::size_t i = 0; i < bank.fns.size(); ++i) {
    ComparabilityRow row;
    row.name = bank.names[i];
    row.functional =
        kernel_functional(f.space, bank.fns[i], form.p(), psi, fam, eps, {}, n_threads);
    row.gamma_mass = form.energy(bank.fns[i]);
    row.ratio = row.gamma_mass > 0.0 ? row.functional / row.gamma_mass
                                     : (row.functional > 0.0
                                            ? std::numeric_limits<double>::infinity()
                                            : 1.0);
    rows.push_back(row);
  }
  return rows;
}

// Scale function matched to the graph energy of a fractal family at this p:
// Psi(r) = r^beta with beta from the analytic capacity ratio where known,
// otherwise from a measured one.
inline ScaleFn matched_scale(FractalKind kind, double p, int probe_level = 3) {
  double rho = analytic_capacity_ratio(kind, p);
  if (!(rho > 0.0)) rho = estimate_capacity_ratio(kind, p, probe_level, 1e-8);
  double M = contraction_count(kind), L = length_base(kind);
  double beta = (std::log(M) - std::log(rho)) / std::log(L);
  return ScaleFn::power(beta);
}

}  // namespace fbz
