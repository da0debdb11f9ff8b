// Acceptance suite: one pass/fail line per criterion, each at its stated
// tolerance. Exit code is the number of failed criteria.

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "fbz/fbz.hpp"

using namespace fbz;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double now_s() {
  using clk = std::chrono::steady_clock;
  static const auto t0 = clk::now();
  return std::chrono::duration<double>(clk::now() - t0).count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

std::vector<double> coordinate(const DiscreteSpace& s, int k = 0) {
  std::vector<double> u(s.size());
  for (int i = 0; i < s.size(); ++i) u[i] = s.coord(i)[k];
  return u;
}

std::vector<char> box_mask_1d(const DiscreteSpace& s, double lo, double hi) {
  std::vector<char> m(s.size(), 0);
  for (int v = 0; v < s.size(); ++v) m[v] = s.coord(v)[0] >= lo && s.coord(v)[0] <= hi;
  return m;
}

// --------------------------------------------------------------------------
// 1. KS limit in 1D at the stated grid and tolerance.
Outcome criterion1() {
  double t0 = now_s();
  auto f = build_fractal(FractalKind::interval, 12);
  auto& s = f.space;
  auto x = coordinate(s);
  auto om = box_mask_1d(s, 0.1, 0.9);
  double mOm = 0.0;
  for (int v = 0; v < s.size(); ++v)
    if (om[v]) mOm += s.weight(v);
  auto psi2 = ScaleFn::power(2.0);
  double target = mOm / 3.0;
  double last = 0.0;
  std::string vals;
  for (int k = 3; k <= 8; ++k) {
    last = ks_functional(s, x, 2.0, psi2, std::ldexp(1.0, -k), KsDenominator::psi_of_r, om, 1);
    vals += fmt(" %.5f", last);
  }
  double rel = std::abs(last - target) / target;
  double el = now_s() - t0;
  Outcome o;
  o.pass = rel <= 0.02 && el < 30.0;
  o.detail = fmt("value(2^-8)=%.6f target=%.6f rel=%.2f%% (need <=2%%), grid values:%s, %.1fs",
                 last, target, 100 * rel, vals.c_str(), el);
  return o;
}

// --------------------------------------------------------------------------
// 2. BBM limit in 1D against the continuum quadrature oracle.
//    Oracle: F(theta) = (1/2)^{3-2theta}/(3-2theta) + (1-theta) R(theta),
//    R(theta) = 2 int_0^{1/2} int_y^{1-y} t^{2-2theta}/(y+t) dt dy, with the
//    exact boundary-truncated ball mass m(B(y,t)) = min(y+t,1)-max(y-t,0)
//    already folded in analytically.
double bbm_oracle_F(double theta) {
  double first = std::pow(0.5, 3.0 - 2.0 * theta) / (3.0 - 2.0 * theta);
  auto inner = [&](double y) {
    double a = y, b = 1.0 - y;
    if (!(b > a)) return 0.0;
    int n = 2000;  // even
    double h = (b - a) / n, acc = 0.0;
    for (int i = 0; i <= n; ++i) {
      double t = a + i * h;
      double v = t > 0 ? std::pow(t, 2.0 - 2.0 * theta) / (y + t) : 0.0;
      acc += v * ((i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0));
    }
    return acc * h / 3.0;
  };
  int m = 2000;
  double hy = 0.5 / m, R = 0.0;
  for (int i = 0; i <= m; ++i) {
    double y = i * hy;
    R += inner(y) * ((i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  R = 2.0 * R * hy / 3.0;
  return first + (1.0 - theta) * R;
}

double linear_fit_limit(const std::vector<double>& theta, const std::vector<double>& F,
                        double theta_p) {
  std::size_t n = std::min<std::size_t>(4, F.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = F.size() - n; k < F.size(); ++k) {
    double sxv = theta_p - theta[k];
    sx += sxv;
    sy += F[k];
    sxx += sxv * sxv;
    sxy += sxv * F[k];
  }
  double det = n * sxx - sx * sx;
  double a = (n * sxy - sx * sy) / det;
  return (sy - a * sx) / n;
}

Outcome criterion2() {
  double t0 = now_s();
  auto f = build_fractal(FractalKind::interval, 12);
  auto x = coordinate(f.space);
  std::vector<double> grid = {0.80, 0.90, 0.95, 0.975, 0.9875};
  auto rep = bbm_sweep(f.space, x, 2.0, 1.0, grid, {}, 1);
  std::vector<double> Fo;
  for (double th : grid) Fo.push_back(bbm_oracle_F(th));
  double oracle = linear_fit_limit(grid, Fo, 1.0);
  double el = now_s() - t0;
  Outcome o;
  std::string vals, ovals;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    vals += fmt(" %.4f", rep.values[i]);
    ovals += fmt(" %.4f", Fo[i]);
  }
  if (!rep.extrapolated_limit) {
    o.pass = false;
    o.detail = fmt(
        "extrapolation refused (fit residual %.4f > 10%% of the limit); discrete values:%s, "
        "oracle values:%s, oracle limit %.4f, %.1fs",
        rep.fit_residual, vals.c_str(), ovals.c_str(), oracle, el);
    return o;
  }
  double rel = std::abs(*rep.extrapolated_limit - oracle) / oracle;
  o.pass = rel <= 0.05 && el < 120.0;
  o.detail = fmt("extrapolated %.4f vs oracle %.4f rel=%.1f%% (need <=5%%), %.1fs",
                 *rep.extrapolated_limit, oracle, 100 * rel, el);
  return o;
}

// --------------------------------------------------------------------------
// 3. Comparability of the mollified functional with the graph energy.
Outcome criterion3() {
  Outcome o;
  o.pass = true;
  const double Cmax = 20.0;
  struct Probe {
    FractalKind kind;
    int level_a, level_b;
    int n_noise;
  };
  for (auto pr : {Probe{FractalKind::interval, 11, 12, 3}, Probe{FractalKind::square, 6, 7, 2}}) {
    std::vector<std::vector<double>> ratios(2);
    for (int which = 0; which < 2; ++which) {
      int level = which == 0 ? pr.level_a : pr.level_b;
      auto f = build_fractal(pr.kind, level);
      auto form = build_form(f, 2.0, WeightMode::renormalized);
      auto psi = matched_scale(pr.kind, 2.0);
      auto bank = make_test_bank(f, form, pr.n_noise, 1234);
      double eps = 16.0 * f.lattice_h;
      for (auto& row : comparability_rows(f, form, psi, eps, bank, 8))
        ratios[which].push_back(row.ratio);
    }
    for (std::size_t i = 0; i < ratios[0].size(); ++i) {
      double a = ratios[0][i], b = ratios[1][i];
      bool in_band = a >= 1.0 / Cmax && a <= Cmax && b >= 1.0 / Cmax && b <= Cmax;
      bool stable = b <= 1.3 * a && b >= 0.7 * a;
      if (!(in_band && stable)) o.pass = false;
      o.detail += fmt(" %s[%zu]: %.3f->%.3f%s", to_string(pr.kind), i, a, b,
                      (in_band && stable) ? "" : " (VIOLATION)");
    }
  }
  o.detail = "ratios per bank fn, levels (a)->(b):" + o.detail + fmt("; band [1/20,20], +-30%%");
  return o;
}

// --------------------------------------------------------------------------
// 4. Weak monotonicity ratios over a 6-point dyadic grid.
Outcome criterion4() {
  Outcome o;
  o.pass = true;
  struct Probe {
    FractalKind kind;
    int level;
    int n_noise;
  };
  for (auto pr : {Probe{FractalKind::interval, 11, 3}, Probe{FractalKind::square, 7, 2},
                  Probe{FractalKind::gasket, 7, 2}}) {
    auto f = build_fractal(pr.kind, pr.level);
    auto form = build_form(f, 2.0, WeightMode::renormalized);
    auto psi = matched_scale(pr.kind, 2.0);
    auto fam = KernelFamily::ks(psi);
    auto bank = make_test_bank(f, form, pr.n_noise, 77);
    // six dyadic scales, bottom kept above the lattice resolution
    std::vector<double> grid;
    for (int k = 1; k <= 6; ++k) grid.push_back(f.space.diameter() * std::ldexp(1.0, -k));
    double worst = 0.0;
    for (std::size_t i = 0; i < bank.fns.size(); ++i) {
      auto wm = weak_monotonicity(f.space, bank.fns[i], 2.0, psi, fam, grid, {}, 8);
      worst = std::max(worst, wm.ratio);
      if (wm.ratio > 5.0) o.pass = false;
    }
    o.detail += fmt(" %s: worst %.2f;", to_string(pr.kind), worst);
  }
  o.detail = "sup/tail-min per space (need <= 5):" + o.detail;
  return o;
}

// --------------------------------------------------------------------------
// 5. Critical exponent on the interval.
Outcome criterion5() {
  double t0 = now_s();
  std::vector<AlphaLevelData> levels;
  for (int L : {8, 10, 12}) {
    auto f = build_fractal(FractalKind::interval, L);
    auto form = build_form(f, 2.0, WeightMode::unit);
    auto bank = make_test_bank(f, form, 1, 11);
    levels.push_back(alpha_level_data(f.space, bank.fns, 2.0, f.lattice_h, 2, 8));
  }
  auto est = estimate_alpha(levels, 2.0, 0.4, 2.5);
  double el = now_s() - t0;
  Outcome o;
  o.pass = est.alpha_hat >= 0.95 && est.alpha_hat <= 1.05 && (est.hi - est.lo) <= 0.1 &&
           el < 300.0;
  o.detail = fmt("alpha=%.4f bracket [%.4f, %.4f] width %.4f (need [0.95,1.05], width<=0.1), %.1fs",
                 est.alpha_hat, est.lo, est.hi, est.hi - est.lo, el);
  return o;
}

// --------------------------------------------------------------------------
// 6. Upper bound alpha <= (Q + p - 1)/p on chain-condition Ahlfors fits.
Outcome criterion6() {
  Outcome o;
  o.pass = true;
  struct Probe {
    FractalKind kind;
    std::vector<int> levels;
  };
  for (auto pr : {Probe{FractalKind::interval, {8, 10, 12}}, Probe{FractalKind::square, {5, 6, 7}}}) {
    auto fq = build_fractal(pr.kind, pr.levels.back());
    auto d = diagnostics(fq, 256, 42);
    for (double p : {1.5, 2.0, 3.0}) {
      std::vector<AlphaLevelData> levels;
      for (int L : pr.levels) {
        auto f = build_fractal(pr.kind, L);
        auto form = build_form(f, p, WeightMode::unit);
        auto bank = make_test_bank(f, form, 1, 11);
        levels.push_back(alpha_level_data(f.space, bank.fns, p, f.lattice_h, 2, 8));
      }
      auto est = estimate_alpha(levels, p, 0.4, 2.5);
      double bound = (d.ahlfors.Q + p - 1.0) / p + 0.05;
      if (!(est.alpha_hat <= bound)) o.pass = false;
      o.detail += fmt(" %s p=%.1f: %.3f<=%.3f%s;", to_string(pr.kind), p, est.alpha_hat, bound,
                      est.alpha_hat <= bound ? "" : " (VIOLATION)");
    }
  }
  o.detail = "alpha vs (Q+p-1)/p+0.05:" + o.detail;
  return o;
}

// --------------------------------------------------------------------------
// 7. Vicsek consistency: capacity ratios and the two alpha pipelines.
Outcome criterion7() {
  double t0 = now_s();
  Outcome o;
  o.pass = true;
  // ratios across levels 1..4 at p = 2
  std::vector<double> caps;
  for (int L = 1; L <= 4; ++L) {
    auto f = build_fractal(FractalKind::vicsek, L);
    auto form = build_form(f, 2.0, WeightMode::unit);
    auto [e1, e0] = capacity_probe_sets(f);
    caps.push_back(solve_capacity(form, e1, e0, 1e-10).value);
  }
  for (std::size_t k = 1; k < caps.size(); ++k) {
    double ratio = caps[k] / caps[k - 1];
    if (std::abs(ratio - 1.0 / 3.0) > 0.01 / 3.0) o.pass = false;
    o.detail += fmt(" ratio%zu=%.6f", k, ratio);
  }
  // two independent alpha pipelines
  const double alpha_ref = (std::log(5.0) / std::log(3.0) + 1.0) / 2.0;
  auto scal = capacity_scaling(FractalKind::vicsek, 2.0, 1, 4);
  std::vector<AlphaLevelData> levels;
  for (int L : {4, 5, 6}) {
    auto f = build_fractal(FractalKind::vicsek, L);
    auto form = build_form(f, 2.0, WeightMode::unit);
    auto bank = make_test_bank(f, form, 1, 5);
    levels.push_back(alpha_level_data(f.space, bank.fns, 2.0, f.lattice_h, 3, 8));
  }
  auto est = estimate_alpha(levels, 2.0, 0.6, 2.2);
  double el = now_s() - t0;
  bool sweep_ok = std::abs(est.alpha_hat - alpha_ref) <= 0.05 * alpha_ref;
  bool cap_ok = std::abs(scal.alpha - alpha_ref) <= 0.05 * alpha_ref;
  if (!sweep_ok || !cap_ok || el >= 600.0) o.pass = false;
  o.detail += fmt("; alpha_sweep=%.4f alpha_capacity=%.4f ref=%.4f (5%% band), %.1fs",
                  est.alpha_hat, scal.alpha, alpha_ref, el);
  return o;
}

// --------------------------------------------------------------------------
// 8. Whitney certificates on randomized configs: zero tolerance.
Outcome criterion8() {
  Outcome o;
  o.pass = true;
  std::mt19937_64 rng(20240809);
  int done = 0, failed = 0;
  for (int cfg = 0; cfg < 20; ++cfg) {
    bool carpet = cfg % 2;
    auto f = build_fractal(carpet ? FractalKind::carpet : FractalKind::square, carpet ? 4 : 6);
    // boxes snapped to the coarse cell grid to stay uniform-domain shaped
    double snap = carpet ? 1.0 / 9.0 : 1.0 / 8.0;
    int cells = (int)std::lround(1.0 / snap);
    auto draw = [&](int max_lo) { return (int)(rng() % max_lo); };
    double eps = (cfg < 10) ? 0.02 + 0.05 * (rng() % 1000) / 1000.0
                            : 0.08 + 0.37 * (rng() % 1000) / 1000.0;
    USet u;
    for (;;) {  // redraw degenerate boxes so exactly 20 configs run
      int lo1 = draw(cells - 2), lo2 = draw(cells - 2);
      int w1 = 2 + draw(cells - lo1 - 2), w2 = 2 + draw(cells - lo2 - 2);
      std::vector<double> lo = {lo1 * snap, lo2 * snap};
      std::vector<double> hi = {(lo1 + w1) * snap, (lo2 + w2) * snap};
      if (lo[0] == 0 && lo[1] == 0 && hi[0] >= 1 && hi[1] >= 1) hi[0] = 1.0 - snap;
      try {
        u = uset_from_box(f.space, lo, hi);
        break;
      } catch (const std::invalid_argument&) {
        continue;
      }
    }
    auto cov = whitney_cover(f.space, u, eps);
    auto rep = verify_whitney(f.space, u, cov, 3.0, carpet ? 8.0 : 6.0, 24, cfg);
    double overlap_cap = 8.0 * (1.0 + 1.0 / eps) * (1.0 + 1.0 / eps);
    bool ok = cov.cert.disjoint && cov.cert.coverage_ok &&
              cov.cert.radius_rule_max_err <= 1e-12 && rep.radius_comparison_ok &&
              cov.cert.overlap_max <= overlap_cap &&
              (eps >= 1.0 / 14.0 || rep.central_ball_ok);
    ++done;
    if (!ok) {
      ++failed;
      o.pass = false;
      o.detail += fmt(" cfg%d(%s eps=%.3f): disj=%d cov=%d rad=%d cmp=%d ovl=%d/%d cb=%d;", cfg,
                      carpet ? "carpet" : "square", eps, (int)cov.cert.disjoint,
                      (int)cov.cert.coverage_ok, (int)(cov.cert.radius_rule_max_err <= 1e-12),
                      (int)rep.radius_comparison_ok, cov.cert.overlap_max, (int)overlap_cap,
                      (int)rep.central_ball_ok);
    }
  }
  o.detail = fmt("%d configs checked, %d failed", done, failed) + o.detail;
  return o;
}

// --------------------------------------------------------------------------
// 9. Partition identity and convolution convergence.
Outcome criterion9() {
  Outcome o;
  o.pass = true;
  auto f = build_fractal(FractalKind::interval, 13);
  auto& s = f.space;
  auto form = build_form(f, 2.0, WeightMode::renormalized);
  auto full = full_uset(s);
  auto x = coordinate(s);
  std::vector<double> x2(s.size());
  for (int v = 0; v < s.size(); ++v) x2[v] = x[v] * x[v];
  double worst_sum_err = 0.0;
  for (auto* fn : {&x, &x2}) {
    double prev = std::numeric_limits<double>::infinity();
    std::string seq;
    bool mono = true;
    double final_err = 0.0;
    for (int k = 9; k <= 13; ++k) {
      auto cover = good_cover(s, nullptr, 2.0, 2.0, std::ldexp(1.0, -k));
      auto pou = build_partition(s, full, cover.balls, 2.0, form, ScaleFn::power(2.0),
                                 CutoffMethod::tent);
      worst_sum_err = std::max(worst_sum_err, pou.sum_err_max);
      auto out = discrete_convolution(s, full, pou, *fn);
      double err = lp_error_on(s, full, out, *fn, 2.0);
      seq += fmt(" %.2e", err);
      if (!(err < prev)) mono = false;
      prev = err;
      final_err = err;
    }
    bool ok = mono && final_err < 1e-3;
    if (!ok) o.pass = false;
    o.detail += fmt(" %s: errs%s%s;", fn == &x ? "x" : "x^2", seq.c_str(),
                    ok ? "" : " (VIOLATION)");
  }
  if (worst_sum_err > 1e-12) o.pass = false;
  o.detail = fmt("partition-sum err %.2e (need <=1e-12);", worst_sum_err) + o.detail;
  return o;
}

// --------------------------------------------------------------------------
// 10. Extension experiment on the half interval across levels 9-11.
Outcome criterion10() {
  Outcome o;
  o.pass = true;
  std::vector<double> c1s, ceps;
  for (int level : {9, 10, 11}) {
    auto f = build_fractal(FractalKind::interval, level);
    auto& s = f.space;
    std::vector<char> mask(s.size(), 0);
    for (int v = 0; v < s.size(); ++v)
      mask[v] = s.coord(v)[0] > 0.0 && s.coord(v)[0] < 0.5;
    auto u = make_uset(s, std::move(mask));
    auto usharp = complement_interior(s, f.lattice_edges, u);
    auto cov_u = whitney_cover(s, u, 0.05);
    auto cov_s = whitney_cover(s, usharp, 0.05);
    auto refl = build_reflection(s, u, usharp, cov_u, cov_s, 1.5);
    if (!refl.corridor_ok) {
      o.pass = false;
      o.detail += fmt(" L%d corridor VIOLATION;", level);
    }
    auto form = build_form(f, 2.0, WeightMode::renormalized);
    auto pou = build_partition(s, usharp, cov_s.balls, 2.0, form, ScaleFn::power(2.0),
                               CutoffMethod::tent);
    auto x = coordinate(s);
    auto ext = extend(s, u, usharp, x, refl, pou, cov_u);
    for (int v = 0; v < s.size(); ++v)
      if (u.mask[v] && ext.values[v] != x[v]) {
        o.pass = false;
        o.detail += fmt(" L%d restriction VIOLATION;", level);
        break;
      }
    auto bdry = boundary_layer(u, usharp);
    auto rep = verify_extension(s, u, x, ext, form, ScaleFn::power(2.0), bdry,
                                {0.02, 0.04, 0.08});
    for (std::size_t k = 1; k < rep.collar_energy.size(); ++k)
      if (rep.collar_energy[k] > rep.collar_energy[k - 1] * (1 + 1e-12)) {
        o.pass = false;
        o.detail += fmt(" L%d collar VIOLATION;", level);
      }
    c1s.push_back(rep.ref_lp_C1);
    ceps.push_back(rep.ext_ep_C);
  }
  for (std::size_t i = 1; i < c1s.size(); ++i) {
    if (!(c1s[i] <= 1.3 * c1s[i - 1] && c1s[i] >= 0.7 * c1s[i - 1])) o.pass = false;
    if (!(ceps[i] <= 1.3 * ceps[i - 1] && ceps[i] >= 0.7 * ceps[i - 1])) o.pass = false;
  }
  o.detail += fmt(" C1: %.3f %.3f %.3f; C_ext: %.3f %.3f %.3f (stability +-30%%)", c1s[0], c1s[1],
                  c1s[2], ceps[0], ceps[1], ceps[2]);
  return o;
}

// --------------------------------------------------------------------------
// 11. Axiom fuzz: 1000 cases per property, zero violations.
Outcome criterion11() {
  Outcome o;
  std::mt19937_64 rng(4242);
  std::normal_distribution<double> gauss(0.0, 1.0);
  int bad_contraction = 0, bad_triangle = 0, bad_total = 0, bad_dvar = 0, bad_tri = 0;

  auto g = build_fractal(FractalKind::vicsek, 2);
  std::vector<double> ps = {1.5, 2.0, 3.0};
  std::vector<EnergyForm> forms;
  for (double p : ps) forms.push_back(build_form(g, p, WeightMode::unit));
  for (int it = 0; it < 1000; ++it) {
    const auto& form = forms[it % 3];
    double p = form.p();
    std::vector<double> u(g.space.size()), v(g.space.size());
    for (auto& t : u) t = 3.0 * gauss(rng);
    for (auto& t : v) t = 3.0 * gauss(rng);
    // random 1-Lipschitz piecewise-linear map
    std::vector<double> xs = {-20.0}, ys = {gauss(rng)};
    for (int k = 0; k < 6; ++k) {
      double dx = 0.5 + 6.0 * (rng() % 1000) / 1000.0;
      double slope = -1.0 + 2.0 * (rng() % 1001) / 1000.0;
      xs.push_back(xs.back() + dx);
      ys.push_back(ys.back() + slope * dx);
    }
    if (!contraction_check(form, u, xs, ys).holds) bad_contraction++;
    double eu = form.energy(u), ev = form.energy(v);
    std::vector<double> w(u);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += v[i];
    if (std::pow(form.energy(w), 1.0 / p) >
        (std::pow(eu, 1.0 / p) + std::pow(ev, 1.0 / p)) * (1 + 1e-12))
      bad_triangle++;
    auto mm = form.energy_measure(u);
    KahanSum tot;
    for (double t : mm) tot.add(t);
    if (relative_gap(tot.value(), eu) > 1e-10) bad_total++;
  }

  auto fi = build_fractal(FractalKind::interval, 6);
  auto fg = build_fractal(FractalKind::gasket, 3);
  for (int it = 0; it < 1000; ++it) {
    const auto& s = (it % 2) ? fg.space : fi.space;
    std::vector<double> u(s.size());
    for (auto& t : u) t = gauss(rng);
    int z = (int)(rng() % s.size());
    double r = s.diameter() * (0.05 + 0.5 * (rng() % 1000) / 1000.0);
    if (!doublevar_check(s, u, ps[it % 3], z, r).holds) bad_dvar++;
  }
  {
    auto& s = fi.space;
    std::vector<char> U(s.size(), 0);
    for (int i = s.size() / 4; i < (3 * s.size()) / 4; ++i) U[i] = 1;
    for (int it = 0; it < 1000; ++it) {
      double delta = 0.07 + 0.1 * (rng() % 1000) / 1000.0;
      std::vector<std::tuple<int, int, double>> entries;
      for (int k = 0; k < 25; ++k) {
        int x = (int)(rng() % s.size());
        auto near = s.ball(x, delta);
        entries.push_back({x, (int)near[rng() % near.size()], std::abs(gauss(rng))});
      }
      auto h = [&](int a, int b) {
        double val = 0.0;
        for (auto& [aa, bb, wv] : entries)
          if (aa == a && bb == b) val += wv;
        return val;
      };
      if (!triint_check(s, h, U, delta).holds) bad_tri++;
    }
  }
  int total = bad_contraction + bad_triangle + bad_total + bad_dvar + bad_tri;
  o.pass = total == 0;
  o.detail = fmt(
      "violations: contraction %d, triangle %d, measure-total %d, double-variance %d, "
      "localisation %d (1000 cases each)",
      bad_contraction, bad_triangle, bad_total, bad_dvar, bad_tri);
  return o;
}

// --------------------------------------------------------------------------
// 12. Determinism across thread counts.
Outcome criterion12() {
  Outcome o;
  o.pass = true;
  auto f = build_fractal(FractalKind::gasket, 6);
  auto x = coordinate(f.space);
  auto psi = matched_scale(FractalKind::gasket, 2.0);
  auto fam = KernelFamily::ks(psi);
  double worst = 0.0;
  for (double scale : {0.3, 0.11, 0.04}) {
    double a = kernel_functional(f.space, x, 2.0, psi, fam, scale, {}, 1);
    double b = kernel_functional(f.space, x, 2.0, psi, fam, scale, {}, 8);
    worst = std::max(worst, relative_gap(a, b));
    double c = ks_functional(f.space, x, 2.0, psi, scale, KsDenominator::psi_of_d, {}, 1);
    double d = ks_functional(f.space, x, 2.0, psi, scale, KsDenominator::psi_of_d, {}, 8);
    worst = std::max(worst, relative_gap(c, d));
  }
  auto rep1 = bbm_sweep(f.space, x, 2.0, 1.2, {0.9, 1.0, 1.1}, {}, 1);
  auto rep8 = bbm_sweep(f.space, x, 2.0, 1.2, {0.9, 1.0, 1.1}, {}, 8);
  for (std::size_t i = 0; i < rep1.values.size(); ++i)
    worst = std::max(worst, relative_gap(rep1.values[i], rep8.values[i]));
  o.pass = worst <= 1e-12;
  o.detail = fmt("worst relative gap across 1 vs 8 threads: %.3g (need <=1e-12)", worst);
  return o;
}

}  // namespace

int main() {
  struct Entry {
    const char* name;
    Outcome (*fn)();
  };
  const Entry entries[] = {
      {"KS limit, 1D", criterion1},
      {"BBM limit, 1D vs quadrature oracle", criterion2},
      {"comparability with the graph energy", criterion3},
      {"weak monotonicity", criterion4},
      {"critical exponent, 1D", criterion5},
      {"(Q+p-1)/p upper bound", criterion6},
      {"vicsek consistency", criterion7},
      {"whitney certificates", criterion8},
      {"partition/convolution", criterion9},
      {"extension", criterion10},
      {"axiom fuzz suite", criterion11},
      {"determinism", criterion12},
  };
  int failed = 0;
  int idx = 0;
  for (const auto& e : entries) {
    ++idx;
    Outcome o;
    try {
      o = e.fn();
    } catch (const std::exception& ex) {
      o.pass = false;
      o.detail = std::string("exception: ") + ex.what();
    }
    std::printf("[%s] criterion %2d: %s - %s\n", o.pass ? "PASS" : "FAIL", idx, e.name,
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d/12 criteria passed\n", 12 - failed);
  return failed;
}
