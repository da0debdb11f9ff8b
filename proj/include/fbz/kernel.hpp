#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "fbz/scale.hpp"
#include "fbz/space.hpp"

namespace fbz {

// Mollifier family rho_eps(x, y).
//   bbm   : (theta_p - theta(eps)) d(x,y)^{p theta_p} / (d(x,y)^{p theta(eps)} m(B(y, d(x,y))))
//   ks    : Psi(d(x,y))/Psi(eps) * 1_{B(y,eps)}(x) / m(B(y,eps))
//   ks_hat: 1_{B(y,eps)}(x) / m(B(y,eps))
// ks and ks_hat vanish when d(x,y) >= eps.
class KernelFamily {
 public:
  enum class Kind { bbm, ks, ks_hat, custom };
  using Evaluator = std::function<double(const DiscreteSpace&, int, int, double)>;

  static KernelFamily bbm(double p, double theta_p,
                          std::function<double(double)> theta_of_eps = nullptr) {
    if (!(theta_p >= 1.0)) throw std::invalid_argument("bbm: theta_p >= 1 required");
    KernelFamily f;
    f.kind_ = Kind::bbm;
    f.p_ = p;
    f.theta_p_ = theta_p;
    // default schedule theta(eps) = theta_p - eps, increasing to theta_p
    f.theta_of_eps_ = theta_of_eps ? std::move(theta_of_eps)
                                   : [theta_p](double e) { return theta_p - e; };
    return f;
  }

  static KernelFamily ks(ScaleFn psi) {
    KernelFamily f;
    f.kind_ = Kind::ks;
    f.psi_ = std::move(psi);
    f.has_psi_ = true;
    return f;
  }

  static KernelFamily ks_hat() {
    KernelFamily f;
    f.kind_ = Kind::ks_hat;
    return f;
  }

  static KernelFamily custom(Evaluator ev) {
    KernelFamily f;
    f.kind_ = Kind::custom;
    f.custom_ = std::move(ev);
    return f;
  }

  Kind kind() const { return kind_; }
  double theta_p() const { return theta_p_; }
  double theta(double eps) const { return theta_of_eps_(eps); }
  double p() const { return p_; }
  const ScaleFn& psi() const { return psi_; }

  const char* name() const {
    switch (kind_) {
      case Kind::bbm: return "bbm";
      case Kind::ks: return "ks";
      case Kind::ks_hat: return "ks-hat";
      case Kind::custom: return "custom";
    }
    return "custom";
  }

  // Point evaluation. For sweeps prefer the batched paths in besov.hpp which
  // reuse ball masses.
  double eval(const DiscreteSpace& s, int i, int j, double eps) const {
    if (!(eps > 0.0)) throw std::invalid_argument("kernel eval: eps must be > 0");
    double d = s.dist(i, j);
    switch (kind_) {
      case Kind::bbm: {
        if (i == j) throw std::invalid_argument("bbm kernel: diagonal excluded");
        double th = theta_of_eps_(eps);
        double mb = s.ball_mass(j, d);
        return (theta_p_ - th) * std::pow(d, p_ * (theta_p_ - th)) / mb;
      }
      case Kind::ks: {
        if (d >= eps) return 0.0;
        return psi_(d) / psi_(eps) / s.ball_mass(j, eps);
      }
      case Kind::ks_hat: {
        if (d >= eps) return 0.0;
        return 1.0 / s.ball_mass(j, eps);
      }
      case Kind::custom: return custom_(s, i, j, eps);
    }
    return 0.0;
  }

  // Same, with the ball mass m(B(y,eps)) supplied by the caller.
  double eval_with_ball_mass(const DiscreteSpace& s, int i, int j, double eps,
                             double mass_ball_eps) const {
    double d = s.dist(i, j);
    switch (kind_) {
      case Kind::ks:
        return d < eps ? psi_(d) / psi_(eps) / mass_ball_eps : 0.0;
      case Kind::ks_hat:
        return d < eps ? 1.0 / mass_ball_eps : 0.0;
      default: return eval(s, i, j, eps);
    }
  }

 private:
  Kind kind_ = Kind::ks_hat;
  double p_ = 2.0;
  double theta_p_ = 1.0;
  std::function<double(double)> theta_of_eps_ = [](double) { return 1.0; };
  ScaleFn psi_ = ScaleFn::power(1.0);
  bool has_psi_ = false;
  Evaluator custom_;
};

enum class KernelAssumption { A1, A2, neither };

inline const char* to_string(KernelAssumption a) {
  switch (a) {
    case KernelAssumption::A1: return "A1";
    case KernelAssumption::A2: return "A2";
    case KernelAssumption::neither: return "neither";
  }
  return "neither";
}

// Finite-grid evidence for the kernel envelope conditions. Annulus envelopes
//   d_j(eps) = max over pairs in the j-th dyadic annulus of rho_eps(x,y) * m(B(y, 2^{-j+1} s)),
// s = 1 for the absolute-annulus variant (A1), s = eps for the eps-scaled one
// (A2); the reconstructed right-hand side then dominates the kernel at every
// scanned pair by construction. Limits (eps -> 0) are certified only as
// monotone-below-tolerance trends along the given grid.
struct EnvelopeCertificate {
  KernelAssumption which_assumption = KernelAssumption::neither;
  std::string family;
  std::vector<double> eps_grid;                // descending
  std::vector<std::vector<double>> d_table;    // [eps][j-1], envelope for the classified variant
  std::vector<double> d_sum_per_eps;
  double C_rho = 0.0;                          // max over eps of sum_j d_j(eps)
  std::vector<double> delta_list;
  std::vector<std::vector<double>> tail_table;  // [eps][delta]
  double lower_const = std::numeric_limits<double>::infinity();
  bool lower_bound_ok = false;
  bool local_support_ok = false;  // rho_eps = 0 whenever d(x,y) >= eps
  bool tail_ok = false;
  bool envelope_sound = false;

  const std::vector<double>& d_j() const {
    static const std::vector<double> empty;
    return d_table.empty() ? empty : d_table.back();
  }
};

namespace detail {

// max over y of sum_{x : d(x,y) >= delta} rho(x,y)/Psi(d) m(x)
inline double tail_value(const DiscreteSpace& s, const KernelFamily& fam, const ScaleFn& psi,
                         double eps, double delta) {
  double worst = 0.0;
  for (int y = 0; y < s.size(); ++y) {
    double acc = 0.0;
    double meps = (fam.kind() == KernelFamily::Kind::ks || fam.kind() == KernelFamily::Kind::ks_hat)
                      ? s.ball_mass(y, eps)
                      : 0.0;
    for (int x = 0; x < s.size(); ++x) {
      if (x == y) continue;
      double d = s.dist(x, y);
      if (d < delta) continue;
      double rho = (meps > 0.0) ? fam.eval_with_ball_mass(s, x, y, eps, meps)
                                : fam.eval(s, x, y, eps);
      if (rho > 0.0) acc += rho / psi(d) * s.weight(x);
    }
    worst = std::max(worst, acc);
  }
  return worst;
}

}  // namespace detail

// Full-pair scan; intended for desk-scale spaces. eps_grid must be descending.
inline EnvelopeCertificate verify_assumption(const KernelFamily& fam, const DiscreteSpace& s,
                                             std::vector<double> eps_grid, const ScaleFn& psi) {
  if (eps_grid.empty()) throw std::invalid_argument("verify_assumption: empty grid");
  for (std::size_t i = 1; i < eps_grid.size(); ++i)
    if (!(eps_grid[i] < eps_grid[i - 1]))
      throw std::invalid_argument("verify_assumption: eps grid must be descending");

  EnvelopeCertificate cert;
  cert.family = fam.name();
  cert.eps_grid = eps_grid;
  const double diam = s.diameter();
  const double h = s.min_spacing();
  const int jmax = (int)std::ceil(std::log2(std::max(2.0, diam / h))) + 1;

  // deltas for the tail table
  for (double delta = diam / 2.0; delta > 4.0 * h; delta /= 2.0) cert.delta_list.push_back(delta);
  if (cert.delta_list.empty()) cert.delta_list.push_back(diam / 2.0);

  const int n = s.size();
  const bool ks_like =
      fam.kind() == KernelFamily::Kind::ks || fam.kind() == KernelFamily::Kind::ks_hat;

  // per-(eps) scans
  std::vector<std::vector<double>> d_abs(eps_grid.size()), d_scaled(eps_grid.size());
  bool local_ok = true;
  for (std::size_t ei = 0; ei < eps_grid.size(); ++ei) {
    double eps = eps_grid[ei];
    d_abs[ei].assign(jmax, 0.0);
    d_scaled[ei].assign(jmax, 0.0);
    for (int y = 0; y < n; ++y) {
      double meps = ks_like ? s.ball_mass(y, eps) : 0.0;
      // annulus masses at absolute and eps-scaled dyadic radii, cached per y
      std::vector<double> m_abs(jmax + 1), m_sc(jmax + 1);
      for (int j = 0; j <= jmax; ++j) {
        m_abs[j] = s.ball_mass(y, std::ldexp(1.0, -j + 1));
        m_sc[j] = s.ball_mass(y, std::ldexp(eps, -j + 1));
      }
      for (int x = 0; x < n; ++x) {
        if (x == y) continue;
        double d = s.dist(x, y);
        double rho = ks_like ? fam.eval_with_ball_mass(s, x, y, eps, meps) : fam.eval(s, x, y, eps);
        if (rho <= 0.0) continue;
        if (d >= eps) local_ok = false;
        if (d < 1.0) {
          int j = (int)std::floor(-std::log2(d)) + 1;  // 2^-j <= d < 2^-j+1
          if (std::ldexp(1.0, -j) > d) ++j;            // guard rounding
          if (std::ldexp(1.0, -j + 1) <= d) --j;
          if (j >= 1 && j <= jmax) d_abs[ei][j - 1] = std::max(d_abs[ei][j - 1], rho * m_abs[j]);
        }
        if (d < eps) {
          int j = (int)std::floor(-std::log2(d / eps)) + 1;
          if (std::ldexp(eps, -j) > d) ++j;
          if (std::ldexp(eps, -j + 1) <= d) --j;
          if (j >= 1 && j <= jmax) d_scaled[ei][j - 1] = std::max(d_scaled[ei][j - 1], rho * m_sc[j]);
        }
      }
    }
    cert.tail_table.push_back({});
    for (double delta : cert.delta_list)
      cert.tail_table.back().push_back(detail::tail_value(s, fam, psi, eps, delta));
  }
  cert.local_support_ok = local_ok;

  // tail surrogate: non-increasing along the grid (10% slack) and decayed to
  // at most a quarter of its starting value (or absolutely negligible)
  cert.tail_ok = true;
  for (std::size_t di = 0; di < cert.delta_list.size(); ++di) {
    double first = cert.tail_table.front()[di];
    double last = cert.tail_table.back()[di];
    for (std::size_t ei = 1; ei < eps_grid.size(); ++ei)
      if (cert.tail_table[ei][di] > 1.1 * cert.tail_table[ei - 1][di] + 1e-300)
        cert.tail_ok = false;
    if (!(last <= std::max(1e-12, 0.25 * first))) cert.tail_ok = false;
  }

  // lower bound
  if (fam.kind() == KernelFamily::Kind::bbm) {
    // built-in nu_eps(dt) = p theta(eps) (theta_p - theta(eps)) t^{-p theta(eps)-1} dt:
    // rho_bbm equals Psi(d) nu_eps((d,inf)) / m(B(y,d)) when Psi(r) = r^{p theta_p},
    // and int_0^delta Psi dnu = theta(eps) delta^{p (theta_p - theta(eps))}.
    bool psi_matches = psi.is_power() &&
                       std::abs(psi.power_exponent() - fam.p() * fam.theta_p()) < 1e-9;
    if (psi_matches) {
      double cmin = std::numeric_limits<double>::infinity();
      for (double eps : eps_grid) {
        double th = fam.theta(eps);
        if (!(th > 0.0 && th < fam.theta_p())) { cmin = 0.0; break; }
        for (double delta : cert.delta_list)
          cmin = std::min(cmin, th * std::pow(delta, fam.p() * (fam.theta_p() - th)));
      }
      cert.lower_bound_ok = cmin > 0.0;
      cert.lower_const = cert.lower_bound_ok ? 1.0 / cmin : std::numeric_limits<double>::infinity();
    }
  } else {
    // (e:kernel.lower.1): rho >= C^-1 Psi(d)/Psi(eps) 1_B(y,eps)/m(B(y,eps))
    double cneed = 0.0;
    bool ok = true;
    for (double eps : eps_grid) {
      for (int y = 0; y < n && ok; ++y) {
        double meps = s.ball_mass(y, eps);
        for (int x : s.ball(y, eps)) {
          if (x == y) continue;
          double d = s.dist(x, y);
          if (d > 1.0) continue;
          double bound = psi(d) / psi(eps) / meps;
          double rho = fam.eval_with_ball_mass(s, x, y, eps, meps);
          if (rho <= 0.0) { ok = false; break; }
          cneed = std::max(cneed, bound / rho);
        }
      }
    }
    cert.lower_bound_ok = ok;
    cert.lower_const = ok ? std::max(cneed, 1e-300) : std::numeric_limits<double>::infinity();
  }

  // classify; A2 preferred (it implies the locality used by weak monotonicity)
  auto sum_rows = [](const std::vector<std::vector<double>>& t, std::vector<double>& sums) {
    double cmax = 0.0;
    sums.clear();
    for (auto& row : t) {
      double acc = 0.0;
      for (double v : row) acc += v;
      sums.push_back(acc);
      cmax = std::max(cmax, acc);
    }
    return cmax;
  };
  if (cert.local_support_ok && cert.lower_bound_ok) {
    cert.which_assumption = KernelAssumption::A2;
    cert.d_table = std::move(d_scaled);
    cert.C_rho = sum_rows(cert.d_table, cert.d_sum_per_eps);
  } else if (cert.lower_bound_ok && cert.tail_ok) {
    cert.which_assumption = KernelAssumption::A1;
    cert.d_table = std::move(d_abs);
    cert.C_rho = sum_rows(cert.d_table, cert.d_sum_per_eps);
  } else {
    cert.which_assumption = KernelAssumption::neither;
    cert.d_table = std::move(d_scaled);
    (void)sum_rows(cert.d_table, cert.d_sum_per_eps);
    cert.C_rho = 0.0;
  }

  // soundness re-scan on the classified variant (product-side comparison)
  if (cert.which_assumption != KernelAssumption::neither) {
    bool sound = true;
    bool scaled = cert.which_assumption == KernelAssumption::A2;
    for (std::size_t ei = 0; ei < eps_grid.size() && sound; ++ei) {
      double eps = eps_grid[ei];
      for (int y = 0; y < n && sound; ++y) {
        double meps = ks_like ? s.ball_mass(y, eps) : 0.0;
        for (int x = 0; x < n; ++x) {
          if (x == y) continue;
          double d = s.dist(x, y);
          double top = scaled ? eps : 1.0;
          if (d >= top) continue;
          double rho =
              ks_like ? fam.eval_with_ball_mass(s, x, y, eps, meps) : fam.eval(s, x, y, eps);
          if (rho <= 0.0) continue;
          int j = (int)std::floor(-std::log2(d / top)) + 1;
          if (std::ldexp(top, -j) > d) ++j;
          if (std::ldexp(top, -j + 1) <= d) --j;
          if (j < 1 || j > jmax) { sound = false; break; }
          double mref = s.ball_mass(y, std::ldexp(top, -j + 1));
          if (rho * mref > cert.d_table[ei][j - 1]) { sound = false; break; }
        }
      }
    }
    cert.envelope_sound = sound;
  }
  return cert;
}

inline nlohmann::json certificate_json(const EnvelopeCertificate& c) {
  nlohmann::json j;
  j["family"] = c.family;
  j["assumption"] = to_string(c.which_assumption);
  j["eps_grid"] = c.eps_grid;
  j["d_sum_per_eps"] = c.d_sum_per_eps;
  j["C_rho"] = c.C_rho;
  j["delta_list"] = c.delta_list;
  j["tail_table"] = c.tail_table;
  j["lower_const"] = c.lower_const;
  j["lower_bound_ok"] = c.lower_bound_ok;
  j["local_support_ok"] = c.local_support_ok;
  j["tail_ok"] = c.tail_ok;
  j["envelope_sound"] = c.envelope_sound;
  return j;
}

}  // namespace fbz
