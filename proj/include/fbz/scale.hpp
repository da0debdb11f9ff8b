#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace fbz {

// Scale function Psi: a continuous increasing bijection of (0,inf) with
// two-sided power bounds
//   C^-1 (R/r)^beta1 <= Psi(R)/Psi(r) <= C (R/r)^beta2.
// Supported kinds: pure power r^beta and continuous piecewise powers anchored
// at Psi(1) = 1. For both, the bounds hold with C = 1, beta1 = min exponent,
// beta2 = max exponent (the local exponent stays inside [beta1, beta2]).
class ScaleFn {
 public:
  static ScaleFn power(double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("ScaleFn: beta must be > 0");
    ScaleFn f;
    f.breaks_ = {};
    f.betas_ = {beta};
    f.anchor();
    return f;
  }

  // betas.size() == breaks.size() + 1; betas[k] applies on (breaks[k-1], breaks[k]).
  static ScaleFn piecewise_power(std::vector<double> breaks, std::vector<double> betas) {
    if (betas.size() != breaks.size() + 1)
      throw std::invalid_argument("ScaleFn: need one more beta than breaks");
    for (double b : betas)
      if (!(b > 0.0)) throw std::invalid_argument("ScaleFn: exponents must be > 0 (not strictly increasing otherwise)");
    for (std::size_t i = 0; i < breaks.size(); ++i) {
      if (!(breaks[i] > 0.0)) throw std::invalid_argument("ScaleFn: breaks must be positive");
      if (i && !(breaks[i] > breaks[i - 1]))
        throw std::invalid_argument("ScaleFn: breaks must be strictly increasing");
    }
    ScaleFn f;
    f.breaks_ = std::move(breaks);
    f.betas_ = std::move(betas);
    f.anchor();
    return f;
  }

  double operator()(double r) const {
    if (!(r > 0.0)) throw std::domain_error("ScaleFn: r must be > 0");
    std::size_t seg = 0;
    while (seg < breaks_.size() && r >= breaks_[seg]) ++seg;
    return scales_[seg] * std::pow(r, betas_[seg]);
  }

  double beta1() const {
    double b = betas_[0];
    for (double x : betas_) b = std::min(b, x);
    return b;
  }
  double beta2() const {
    double b = betas_[0];
    for (double x : betas_) b = std::max(b, x);
    return b;
  }
  double C_psi() const { return 1.0; }
  bool is_power() const { return breaks_.empty(); }
  double power_exponent() const {
    if (!is_power()) throw std::logic_error("ScaleFn: not a pure power");
    return betas_[0];
  }
  const std::vector<double>& breaks() const { return breaks_; }
  const std::vector<double>& betas() const { return betas_; }

 private:
  std::vector<double> breaks_;
  std::vector<double> betas_;
  std::vector<double> scales_;  // per-segment multiplier enforcing continuity

  // Continuity at every break, Psi(1) = 1.
  void anchor() {
    std::size_t nseg = betas_.size();
    scales_.assign(nseg, 1.0);
    // segment containing r = 1
    std::size_t seg1 = 0;
    while (seg1 < breaks_.size() && 1.0 >= breaks_[seg1]) ++seg1;
    scales_[seg1] = 1.0;
    for (std::size_t s = seg1; s + 1 < nseg; ++s) {
      double b = breaks_[s];  // boundary between s and s+1
      scales_[s + 1] = scales_[s] * std::pow(b, betas_[s] - betas_[s + 1]);
    }
    for (std::size_t s = seg1; s > 0; --s) {
      double b = breaks_[s - 1];
      scales_[s - 1] = scales_[s] * std::pow(b, betas_[s] - betas_[s - 1]);
    }
  }
};

}  // namespace fbz
