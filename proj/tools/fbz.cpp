// Experiment driver: builds spaces and forms, runs sweeps and verifications,
// writes CSV/JSON artifacts. Exit codes: 0 success, 1 a certificate that must
// hold on every instance failed, 2 configuration error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "fbz/fbz.hpp"
#include "json.hpp"

using namespace fbz;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string kind = "interval";
  int level = 8;
  std::string metric = "euclidean";
  double p = 2.0;
  std::string psi = "matched";
  std::string family = "ks";
  double theta_p = 1.0;
  std::string omega = "full";
  std::string grid;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out = "fbz_report";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--kind", o.kind, "fractal family: interval|square|vicsek|gasket|carpet");
  cmd->add_option("--level", o.level, "pre-fractal level");
  cmd->add_option("--metric", o.metric, "euclidean|geodesic-graph");
  cmd->add_option("--p", o.p, "exponent p in (1,inf)");
  cmd->add_option("--psi", o.psi, "scale function: matched | beta=B | piecewise=b1,..:e1,e2,..");
  cmd->add_option("--family", o.family, "kernel family: ks|ks-hat|bbm");
  cmd->add_option("--theta-p", o.theta_p, "BBM limit exponent");
  cmd->add_option("--omega", o.omega, "domain: full | box(lo,hi[,lo2,hi2])");
  cmd->add_option("--grid", o.grid, "comma-separated scale grid (r, eps or theta)");
  cmd->add_option("--seed", o.seed, "RNG seed");
  cmd->add_option("--threads", o.threads, "worker threads for pair sweeps");
  cmd->add_option("--out", o.out, "output path prefix");
}

std::string canonical_config(const std::string& cmd, const CommonOpts& o) {
  std::ostringstream ss;
  ss << "cmd=" << cmd << ";kind=" << o.kind << ";level=" << o.level << ";metric=" << o.metric
     << ";p=" << o.p << ";psi=" << o.psi << ";family=" << o.family << ";theta_p=" << o.theta_p
     << ";omega=" << o.omega << ";grid=" << o.grid << ";seed=" << o.seed;
  return ss.str();
}

json report_envelope(const std::string& cmd, const CommonOpts& o) {
  json j;
  j["command"] = cmd;
  j["version"] = version();
  std::string cfg = canonical_config(cmd, o);
  j["config"] = cfg;
  j["config_hash"] = fnv1a(cfg);
  return j;
}

ScaleFn parse_psi(const std::string& spec, FractalKind kind, double p) {
  if (spec == "matched") return matched_scale(kind, p);
  if (spec.rfind("beta=", 0) == 0) return ScaleFn::power(std::stod(spec.substr(5)));
  if (spec.rfind("piecewise=", 0) == 0) {
    auto body = spec.substr(10);
    auto colon = body.find(':');
    if (colon == std::string::npos)
      throw CLI::ValidationError("--psi", "piecewise=b1,..:e1,e2,..");
    auto split = [](const std::string& s) {
      std::vector<double> out;
      std::stringstream ss(s);
      std::string tok;
      while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
      return out;
    };
    return ScaleFn::piecewise_power(split(body.substr(0, colon)), split(body.substr(colon + 1)));
  }
  throw CLI::ValidationError("--psi", "expected matched | beta=B | piecewise=..");
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
  return out;
}

std::vector<char> parse_omega(const std::string& spec, const DiscreteSpace& s) {
  if (spec == "full") return {};
  if (spec.rfind("box(", 0) == 0 && spec.back() == ')') {
    auto vals = parse_grid(spec.substr(4, spec.size() - 5));
    if (vals.size() != std::size_t(2 * s.dim()))
      throw CLI::ValidationError("--omega", "box needs lo,hi per axis");
    std::vector<char> mask(s.size(), 1);
    for (int v = 0; v < s.size(); ++v)
      for (int k = 0; k < s.dim(); ++k)
        if (s.coord(v)[k] < vals[2 * k] || s.coord(v)[k] > vals[2 * k + 1]) mask[v] = 0;
    return mask;
  }
  throw CLI::ValidationError("--omega", "expected full or box(..)");
}

KernelFamily parse_family(const std::string& name, double p, double theta_p, const ScaleFn& psi) {
  if (name == "ks") return KernelFamily::ks(psi);
  if (name == "ks-hat") return KernelFamily::ks_hat();
  if (name == "bbm") return KernelFamily::bbm(p, theta_p);
  throw CLI::ValidationError("--family", "expected ks|ks-hat|bbm");
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << j.dump(2) << "\n";
}

void write_sweep_csv(const std::string& path, const std::vector<double>& grid,
                     const std::vector<double>& values, const std::string& functional) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "axis,value,functional\n";
  char buf[96];
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%s\n", grid[i], values[i], functional.c_str());
    os << buf;
  }
}

std::vector<double> default_dyadic(double top, double bottom) {
  std::vector<double> g;
  for (double r = top; r >= bottom * (1 - 1e-12); r /= 2.0) g.push_back(r);
  if (g.empty()) g.push_back(top);
  return g;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fbz: Besov-type energy functionals on fractal point clouds"};
  app.set_config("--config", "", "flat key=value config; flags override");
  app.require_subcommand(1);
  CommonOpts o;

  auto* gen = app.add_subcommand("gen", "build a space and write it");
  auto* diag = app.add_subcommand("diag", "geometric diagnostics");
  auto* energy_sweep = app.add_subcommand("energy-sweep", "capacity scaling across levels");
  auto* bbm = app.add_subcommand("bbm", "BBM sweep in theta");
  auto* ks = app.add_subcommand("ks", "KS sweep in r plus weak monotonicity");
  auto* alpha = app.add_subcommand("alpha", "critical exponent estimate");
  auto* whitney = app.add_subcommand("whitney", "Whitney cover with certificates");
  auto* uniform = app.add_subcommand("uniform-check", "uniform-domain verdict");
  auto* extend_cmd = app.add_subcommand("extend", "reflection extension experiment");
  auto* framework = app.add_subcommand("check-framework", "energy-form axiom fuzz");
  auto* lemmas = app.add_subcommand("lemmas", "double-variance and localisation fuzz");
  for (auto* c : {gen, diag, energy_sweep, bbm, ks, alpha, whitney, uniform, extend_cmd,
                  framework, lemmas}) {
    add_common(c, o);
    c->configurable();  // config-file sections address subcommands by name
  }

  int levels_span = 1;
  energy_sweep->add_option("--span", levels_span, "number of extra levels above --level");
  alpha->add_option("--span", levels_span, "level stride; levels used: level-2*span .. level");
  double eps_whitney = 0.05;
  whitney->add_option("--eps", eps_whitney, "Whitney parameter in (0, 1/2)");
  extend_cmd->add_option("--eps", eps_whitney, "Whitney parameter in (0, 1/14)");
  double uniform_A = 4.0;
  uniform->add_option("--A", uniform_A, "uniformity constant to test");
  extend_cmd->add_option("--A", uniform_A, "uniformity constant of U");
  int n_fuzz = 1000;
  framework->add_option("--cases", n_fuzz, "fuzz cases per property");
  lemmas->add_option("--cases", n_fuzz, "fuzz cases per property");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    auto kind = fractal_kind_from(o.kind);
    auto mode = metric_mode_from(o.metric);

    if (gen->parsed()) {
      auto f = build_fractal(kind, o.level, mode);
      save_space(f.space, o.out + ".space");
      std::cout << "gen: " << o.kind << " level " << o.level << " -> " << f.space.size()
                << " points, " << f.cells.size() << " cells, file " << o.out << ".space\n";
      return 0;
    }

    auto f = build_fractal(kind, o.level, mode);
    auto psi = parse_psi(o.psi, kind, o.p);
    auto j = report_envelope(app.get_subcommands().front()->get_name(), o);

    if (diag->parsed()) {
      auto d = diagnostics(f, 256, o.seed);
      j["doubling_const"] = d.doubling_const;
      j["ahlfors"] = {{"Q", d.ahlfors.Q}, {"C_AR", d.ahlfors.C_AR}, {"residual", d.ahlfors.residual}};
      j["reverse_doubling"] = {{"Q", d.rvd_Q}, {"c1", d.rvd_c1}};
      j["chain_const"] = d.chain_const;
      j["uniform_perfect_sigma"] = d.uniform_perfect_sigma;
      j["samples_used"] = d.samples_used;
      write_json_file(o.out + ".json", j);
      std::cout << "diag: Q=" << d.ahlfors.Q << " cD=" << d.doubling_const
                << " sigma=" << d.uniform_perfect_sigma << "\n";
      return 0;
    }

    if (energy_sweep->parsed()) {
      auto scal = capacity_scaling(kind, o.p, o.level, o.level + std::max(1, levels_span));
      j["capacity_values"] = scal.values;
      j["capacity_iterations"] = scal.iterations;
      j["capacity_kkt_residuals"] = scal.kkt_residuals;
      j["rho"] = scal.rho;
      j["beta"] = scal.beta;
      j["alpha_capacity"] = scal.alpha;
      write_json_file(o.out + ".json", j);
      std::vector<double> lev;
      for (std::size_t i = 0; i < scal.values.size(); ++i) lev.push_back(o.level + (double)i);
      write_sweep_csv(o.out + ".csv", lev, scal.values, "capacity");
      std::cout << "energy-sweep: rho=" << scal.rho << " beta=" << scal.beta
                << " alpha=" << scal.alpha << "\n";
      return 0;
    }

    auto omega = parse_omega(o.omega, f.space);
    std::vector<double> x(f.space.size());
    for (int v = 0; v < f.space.size(); ++v) x[v] = f.space.coord(v)[0];

    if (bbm->parsed()) {
      std::vector<double> grid = o.grid.empty()
                                     ? std::vector<double>{0.80, 0.90, 0.95, 0.975, 0.9875}
                                     : parse_grid(o.grid);
      if (o.grid.empty())
        for (auto& t : grid) t *= o.theta_p;
      auto rep = bbm_sweep(f.space, x, o.p, o.theta_p, grid, omega, o.threads);
      j["theta_grid"] = rep.grid;
      j["values"] = rep.values;
      j["sup_value"] = rep.sup_value;
      j["liminf_surrogate"] = rep.liminf_value;
      j["fit_residual"] = rep.fit_residual;
      if (rep.extrapolated_limit)
        j["extrapolated_limit"] = *rep.extrapolated_limit;
      else
        j["extrapolated_limit"] = nullptr;
      write_json_file(o.out + ".json", j);
      write_sweep_csv(o.out + ".csv", rep.grid, rep.values, "bbm");
      std::cout << "bbm: sup=" << rep.sup_value << " extrapolated="
                << (rep.extrapolated_limit ? std::to_string(*rep.extrapolated_limit) : "none")
                << "\n";
      return 0;
    }

    if (ks->parsed()) {
      std::vector<double> grid = o.grid.empty()
                                     ? default_dyadic(f.space.diameter() / 4.0, 8.0 * f.lattice_h)
                                     : parse_grid(o.grid);
      auto fam = parse_family(o.family, o.p, o.theta_p, psi);
      SweepReport rep;
      rep.axis = "r";
      rep.grid = grid;
      for (double r : grid)
        rep.values.push_back(
            ks_functional(f.space, x, o.p, psi, r, KsDenominator::psi_of_r, omega, o.threads));
      rep.finalize_stats();
      auto wm = weak_monotonicity(f.space, x, o.p, psi, fam, grid, omega, o.threads);
      j["r_grid"] = rep.grid;
      j["values_psi_of_r"] = rep.values;
      j["sup_value"] = rep.sup_value;
      j["liminf_surrogate"] = rep.liminf_value;
      j["wm_values"] = wm.values;
      j["wm_ratio"] = wm.ratio;
      j["wm_zero_flagged"] = wm.zero_flagged;
      write_json_file(o.out + ".json", j);
      write_sweep_csv(o.out + ".csv", rep.grid, rep.values, "ks");
      std::cout << "ks: sup=" << rep.sup_value << " wm_ratio=" << wm.ratio << "\n";
      return 0;
    }

    if (alpha->parsed()) {
      std::vector<AlphaLevelData> levels;
      std::vector<int> used;
      for (int L = o.level - 2 * levels_span; L <= o.level; L += levels_span) {
        auto fl = build_fractal(kind, L, mode);
        auto form = build_form(fl, o.p, WeightMode::unit);
        auto bank = make_test_bank(fl, form, 1, o.seed);
        levels.push_back(
            alpha_level_data(fl.space, bank.fns, o.p, fl.lattice_h, length_base(kind), o.threads));
        used.push_back(L);
      }
      auto est = estimate_alpha(levels, o.p, 0.4, 2.5);
      est.levels_used = used;
      auto scal = capacity_scaling(kind, o.p, 1, 3);
      j["alpha_hat"] = est.alpha_hat;
      j["bracket"] = {est.lo, est.hi};
      j["levels_used"] = est.levels_used;
      j["monotone_ok"] = est.monotone_ok;
      j["method_note"] = est.method_note;
      j["alpha_capacity_crosscheck"] = scal.alpha;
      write_json_file(o.out + ".json", j);
      std::cout << "alpha: " << est.alpha_hat << " in [" << est.lo << ", " << est.hi
                << "], capacity route " << scal.alpha << "\n";
      return 0;
    }

    if (whitney->parsed()) {
      if (omega.empty()) throw CLI::ValidationError("--omega", "whitney needs a proper subset");
      auto u = make_uset(f.space, omega);
      auto cov = whitney_cover(f.space, u, eps_whitney);
      auto rep = verify_whitney(f.space, u, cov, 3.0, uniform_A, 32, o.seed);
      bool pass = cov.cert.disjoint && cov.cert.coverage_ok &&
                  cov.cert.radius_rule_max_err < 1e-12 && rep.radius_comparison_ok &&
                  (eps_whitney >= 1.0 / 14.0 || rep.central_ball_ok);
      j["eps"] = cov.eps;
      j["K_eps"] = cov.K_eps;
      j["n_balls"] = cov.balls.size();
      j["disjoint"] = cov.cert.disjoint;
      j["coverage_ok"] = cov.cert.coverage_ok;
      j["radius_rule_max_err"] = cov.cert.radius_rule_max_err;
      j["overlap_max"] = cov.cert.overlap_max;
      j["radius_comparison_ok"] = rep.radius_comparison_ok;
      j["central_ball_ok"] = rep.central_ball_ok;
      j["central_samples"] = rep.central_samples;
      j["uncovered_witnesses"] = cov.cert.uncovered;
      json vp = json::array();
      for (auto& pr : rep.violating_pairs) vp.push_back({pr.first, pr.second});
      j["radius_comparison_witnesses"] = vp;
      j["central_witnesses"] = rep.central_witnesses;
      json balls = json::array();
      for (auto& b : cov.balls)
        balls.push_back({{"center", b.center}, {"radius", b.r}, {"delta_U", u.delta[b.center]}});
      j["balls"] = balls;
      write_json_file(o.out + ".json", j);
      std::cout << "whitney: " << cov.balls.size() << " balls, overlap " << cov.cert.overlap_max
                << (pass ? ", all certificates pass" : ", CERTIFICATE FAILURE") << "\n";
      return pass ? 0 : 1;
    }

    if (uniform->parsed()) {
      if (omega.empty()) throw CLI::ValidationError("--omega", "uniform-check needs a subset");
      auto u = make_uset(f.space, omega);
      auto cert = check_uniform_domain(f.space, f.lattice_edges, u, uniform_A, 64, o.seed);
      j["A"] = cert.A;
      j["pass"] = cert.pass;
      j["sampled_pairs"] = cert.sampled_pairs;
      j["worst_diam_ratio"] = cert.worst_diam_ratio;
      j["worst_cigar_ratio"] = cert.worst_cigar_ratio;
      j["corkscrew_ok"] = cert.corkscrew_ok;
      j["witness"] = {cert.witness.first, cert.witness.second};
      write_json_file(o.out + ".json", j);
      std::cout << "uniform-check: " << (cert.pass ? "pass" : "fail")
                << " diam_ratio=" << cert.worst_diam_ratio << "\n";
      return 0;
    }

    if (extend_cmd->parsed()) {
      if (omega.empty()) throw CLI::ValidationError("--omega", "extend needs a proper subset U");
      auto u = make_uset(f.space, omega);
      auto usharp = complement_interior(f.space, f.lattice_edges, u);
      auto cov_u = whitney_cover(f.space, u, eps_whitney);
      auto cov_s = whitney_cover(f.space, usharp, eps_whitney);
      auto refl = build_reflection(f.space, u, usharp, cov_u, cov_s, uniform_A);
      double rho = analytic_capacity_ratio(kind, o.p);
      auto form = build_form(f, o.p, WeightMode::renormalized,
                             rho > 0.0 ? 0.0 : estimate_capacity_ratio(kind, o.p, 2));
      auto pou = build_partition(f.space, usharp, cov_s.balls, 2.0, form, psi, CutoffMethod::tent);
      auto ext = extend(f.space, u, usharp, x, refl, pou, cov_u);
      auto bdry = boundary_layer(u, usharp);
      auto rg = default_dyadic(diam_of(f.space, u) / 4.0, 8.0 * f.lattice_h);
      auto rep = verify_extension(f.space, u, x, ext, form, psi, bdry, rg);
      bool pass = refl.corridor_ok;
      j["eps"] = eps_whitney;
      j["K_multiplicity"] = refl.K;
      j["corridor_ok"] = refl.corridor_ok;
      j["chain_ok"] = refl.chain_ok;
      j["dist_worst"] = refl.dist_worst;
      j["dist_bound"] = refl.dist_bound;
      j["ref_lp_C1"] = rep.ref_lp_C1;
      j["ext_pi_C"] = rep.ext_pi_C;
      j["ext_ep_C"] = rep.ext_ep_C;
      j["pi_ud_C"] = rep.pi_ud_C;
      j["collar_deltas"] = rep.collar_deltas;
      j["collar_energy"] = rep.collar_energy;
      write_json_file(o.out + ".json", j);
      std::cout << "extend: K=" << refl.K << " C1=" << rep.ref_lp_C1 << " Cext=" << rep.ext_ep_C
                << (pass ? "" : " CORRIDOR FAILURE") << "\n";
      return pass ? 0 : 1;
    }

    if (framework->parsed()) {
      auto form = build_form(f, o.p, WeightMode::unit);
      std::mt19937_64 rng(o.seed);
      std::normal_distribution<double> gauss(0.0, 1.0);
      int bad = 0;
      double worst_lattice_c = 0.0;
      for (int it = 0; it < n_fuzz; ++it) {
        std::vector<double> uu(f.space.size()), vv(f.space.size());
        for (auto& t : uu) t = gauss(rng);
        for (auto& t : vv) t = gauss(rng);
        std::vector<double> xs = {-50.0, 0.0, 50.0}, ys = {50.0, 0.0, 50.0};
        if (!contraction_check(form, uu, xs, ys).holds) bad++;
        double eu = form.energy(uu), ev = form.energy(vv);
        std::vector<double> w(uu);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += vv[i];
        if (std::pow(form.energy(w), 1.0 / o.p) >
            (std::pow(eu, 1.0 / o.p) + std::pow(ev, 1.0 / o.p)) * (1 + 1e-12))
          bad++;
        auto mm = form.energy_measure(uu);
        KahanSum tot;
        for (double t : mm) tot.add(t);
        if (relative_gap(tot.value(), eu) > 1e-10) bad++;
        worst_lattice_c = std::max(worst_lattice_c, lattice_ops_check(form, uu, vv).c_min);
      }
      j["cases"] = n_fuzz;
      j["violations"] = bad;
      j["lattice_c_worst"] = worst_lattice_c;
      write_json_file(o.out + ".json", j);
      std::cout << "check-framework: " << bad << " violations in " << n_fuzz << " cases\n";
      return bad == 0 ? 0 : 1;
    }

    if (lemmas->parsed()) {
      std::mt19937_64 rng(o.seed);
      std::normal_distribution<double> gauss(0.0, 1.0);
      int bad = 0;
      auto& s = f.space;
      for (int it = 0; it < n_fuzz; ++it) {
        std::vector<double> uu(s.size());
        for (auto& t : uu) t = gauss(rng);
        int z = (int)(rng() % s.size());
        double r = s.diameter() * (0.05 + 0.4 * (rng() % 1000) / 1000.0);
        if (!doublevar_check(s, uu, o.p, z, r).holds) bad++;
      }
      std::vector<char> U(s.size(), 0);
      for (int i = 0; i < s.size(); ++i)
        if (i % 3 == 0) U[i] = 1;
      double delta = std::max(0.1 * s.diameter(), 4 * f.lattice_h);
      for (int it = 0; it < n_fuzz / 10; ++it) {
        std::vector<std::tuple<int, int, double>> entries;
        for (int k = 0; k < 30; ++k) {
          int xx = (int)(rng() % s.size());
          auto near = s.ball(xx, delta);
          entries.push_back({xx, (int)near[rng() % near.size()], std::abs(gauss(rng))});
        }
        auto h = [&](int a, int b) {
          double v = 0.0;
          for (auto& [aa, bb, w] : entries)
            if (aa == a && bb == b) v += w;
          return v;
        };
        if (!triint_check(s, h, U, delta).holds) bad++;
      }
      j["cases"] = n_fuzz;
      j["violations"] = bad;
      write_json_file(o.out + ".json", j);
      std::cout << "lemmas: " << bad << " violations\n";
      return bad == 0 ? 0 : 1;
    }
  } catch (const CLI::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::length_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
