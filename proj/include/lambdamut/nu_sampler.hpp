#pragma once

#include <algorithm>
#include <cmath>
#include <variant>
#include <vector>

#include "lambdamut/errors.hpp"
#include "lambdamut/lambda_measure.hpp"
#include "lambdamut/random.hpp"

namespace lambdamut {

/// Draws litter sizes from ν(dx) = Λ(dx)/x² restricted to (ε, 1] and
/// normalized. All three representations are sampled exactly (no tabulated
/// inverse): atoms by cumulative search, Beta shapes and density cells by
/// rejection from a dominating piecewise power-law proposal.
class nu_sampler {
 public:
  nu_sampler(const lambda_measure& measure, double eps) : eps_(eps) {
    mass_ = nu_tail_moment(measure, eps).mass_above;
    std::visit([this](const auto& m) { setup(m); }, measure.rep());
  }

  double mass() const { return mass_; }
  double eps() const { return eps_; }

  template <class URBG>
  double operator()(URBG& rng) const {
    if (!(mass_ > 0.0)) throw precondition_error("litter intensity is zero above the truncation threshold");
    switch (kind_) {
      case kind::atomic: {
        const double u = uniform_open(rng) * cumulative_.back();
        const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        return locations_[std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), locations_.size() - 1)];
      }
      case kind::beta:
        return sample_beta(rng);
      case kind::density:
        return sample_density(rng);
    }
    return 0.0;
  }

 private:
  enum class kind { atomic, beta, density };

  static double power_integral(double a, double lo, double hi) {
    if (a == -1.0) return std::log(hi / lo);
    return (std::pow(hi, a + 1.0) - std::pow(lo, a + 1.0)) / (a + 1.0);
  }

  template <class URBG>
  static double sample_power(URBG& rng, double a, double lo, double hi) {
    const double u = uniform_open(rng);
    if (a == -1.0) return lo * std::pow(hi / lo, u);
    const double l = std::pow(lo, a + 1.0);
    const double h = std::pow(hi, a + 1.0);
    return std::pow(l + u * (h - l), 1.0 / (a + 1.0));
  }

  void setup(const atomic_measure& m) {
    kind_ = kind::atomic;
    double acc = 0.0;
    for (const atom& a : m.atoms) {
      if (a.location > eps_) {
        acc += a.weight / (a.location * a.location);
        locations_.push_back(a.location);
        cumulative_.push_back(acc);
      }
    }
  }

  void setup(const beta_shape& m) {
    kind_ = kind::beta;
    a_ = m.alpha - 3.0;
    c_ = m.beta - 1.0;
    split_ = std::max(eps_, 0.5);
    if (split_ > eps_) {
      env_left_ = c_ >= 0.0 ? std::pow(1.0 - eps_, c_) : std::pow(1.0 - split_, c_);
      w_left_ = env_left_ * power_integral(a_, eps_, split_);
    }
    env_right_ = a_ >= 0.0 ? 1.0 : std::pow(split_, a_);
    w_right_ = env_right_ * power_integral(c_, 0.0, 1.0 - split_);
  }

  void setup(const density_table& d) {
    kind_ = kind::density;
    double acc = 0.0;
    for (std::size_t i = 0; i < d.cells(); ++i) {
      const double lo = std::max(eps_, d.grid()[i]);
      const double hi = d.grid()[i + 1];
      double w = 0.0;
      if (hi > lo) w = d.integrate_power(-2.0, 0.0, lo, hi);
      cells_.push_back(i);
      acc += w;
      cumulative_.push_back(acc);
    }
    grid_ = d.grid();
    polys_.reserve(d.cells());
    for (std::size_t i = 0; i < d.cells(); ++i) polys_.push_back(d.cell(i));
  }

  template <class URBG>
  double sample_beta(URBG& rng) const {
    for (;;) {
      const bool left = uniform_open(rng) * (w_left_ + w_right_) < w_left_;
      if (left) {
        const double x = sample_power(rng, a_, eps_, split_);
        if (uniform_open(rng) * env_left_ <= std::pow(1.0 - x, c_)) return x;
      } else {
        const double x = 1.0 - sample_power(rng, c_, 0.0, 1.0 - split_);
        if (x <= split_ || x >= 1.0) continue;
        if (uniform_open(rng) * env_right_ <= std::pow(x, a_)) return x;
      }
    }
  }

  static double term(double coef, int power, double x) { return coef * std::pow(x, power); }

  template <class URBG>
  double sample_density(URBG& rng) const {
    const double u = uniform_open(rng) * cumulative_.back();
    const std::size_t idx = std::min<std::size_t>(
        static_cast<std::size_t>(std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin()),
        cells_.size() - 1);
    const auto& c = polys_[idx];
    const double lo = std::max(eps_, grid_[idx]);
    const double hi = grid_[idx + 1];
    double envelope = 0.0;
    for (int j = 0; j < 4; ++j) {
      if (c[static_cast<std::size_t>(j)] == 0.0) continue;
      const double t_lo = term(c[static_cast<std::size_t>(j)], j - 2, lo);
      const double t_hi = term(c[static_cast<std::size_t>(j)], j - 2, hi);
      envelope += std::max({0.0, t_lo, t_hi});
    }
    for (;;) {
      const double x = lo + (hi - lo) * uniform_open(rng);
      double g = 0.0;
      for (int j = 0; j < 4; ++j)
        if (c[static_cast<std::size_t>(j)] != 0.0) g += term(c[static_cast<std::size_t>(j)], j - 2, x);
      if (uniform_open(rng) * envelope <= std::max(0.0, g)) return x;
    }
  }

  double eps_;
  double mass_ = 0.0;
  kind kind_ = kind::atomic;

  std::vector<double> locations_;
  std::vector<double> cumulative_;

  double a_ = 0.0, c_ = 0.0, split_ = 0.5;
  double env_left_ = 0.0, env_right_ = 0.0, w_left_ = 0.0, w_right_ = 0.0;

  std::vector<std::size_t> cells_;
  std::vector<double> grid_;
  std::vector<density_table::cell_poly> polys_;
};

}  // namespace lambdamut
