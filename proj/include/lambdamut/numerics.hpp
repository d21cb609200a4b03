#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/binomial.hpp>

#include "lambdamut/errors.hpp"

namespace lambdamut {

/// Neumaier-compensated running sum.
class compensated_sum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  compensated_sum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return boost::math::binomial_coefficient<double>(static_cast<unsigned>(n), static_cast<unsigned>(k));
}

namespace quadrature {

inline constexpr double relative_tolerance = 1e-10;

/// Fixed splitting knots on (0,1); integrands of the form x^p (1-x)^q pile up
/// their mass against the endpoints.
inline constexpr std::array<double, 6> endpoint_knots = {1e-12, 1e-6, 1e-3, 1.0 - 1e-3, 1.0 - 1e-6,
                                                         1.0 - 1e-12};

struct segment_estimate {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;
};

/// Adaptive Gauss-Kronrod on [lo, hi] with no splitting, to relative
/// tolerance `tol` of the segment itself (`depth` 0 gives one 31-point rule).
template <class F>
segment_estimate integrate_segment(F&& f, double lo, double hi, double tol, unsigned depth = 20) {
  segment_estimate out;
  if (!(hi > lo)) return out;
  // leaf error estimates come back unscaled by leaf width; work on [0,1]
  const double w = hi - lo;
  auto unit = [&f, lo, w](double t) { return f(lo + w * t) * w; };
  out.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(unit, 0.0, 1.0, depth, tol, &out.error,
                                                                           &out.l1);
  if (!std::isfinite(out.value)) throw numerical_error("non-integrable measure");
  return out;
}

/// Integrates f over [lo, hi], split at whichever endpoint knots fall inside
/// and at any extra knots supplied by the caller. Accuracy is judged against
/// the L1 norm over the whole range.
template <class F>
double integrate(F&& f, double lo, double hi, const std::vector<double>& extra_knots = {}) {
  if (!(hi > lo)) return 0.0;
  std::vector<double> cuts{lo, hi};
  for (double k : endpoint_knots)
    if (k > lo && k < hi) cuts.push_back(k);
  for (double k : extra_knots)
    if (k > lo && k < hi) cuts.push_back(k);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const std::size_t segments = cuts.size() - 1;
  std::vector<double> rough(segments);
  double scale = 0.0;
  for (std::size_t i = 0; i < segments; ++i) {
    rough[i] = integrate_segment(f, cuts[i], cuts[i + 1], relative_tolerance, 0).l1;
    scale += rough[i];
  }
  compensated_sum total;
  double err = 0.0;
  double l1 = 0.0;
  for (std::size_t i = 0; i < segments; ++i) {
    const double share = std::max(rough[i], std::numeric_limits<double>::min());
    const double tol = std::min(1e-3, relative_tolerance * 1e-2 * scale / share);
    const segment_estimate e = integrate_segment(f, cuts[i], cuts[i + 1], tol);
    total += e.value;
    err += e.error;
    l1 += e.l1;
  }
  if (err > relative_tolerance * l1 && err > 1e-300)
    throw numerical_error("quadrature did not reach relative tolerance 1e-10");
  return total.value();
}

/// ∫_lo^hi x^a (1-x)^c dx for 0 ≤ lo < hi ≤ 1, a > -1 when lo = 0, c > -1 when
/// hi = 1. Power singularities at the endpoints are removed by substitution.
inline double power_kernel(double a, double c, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  if (lo == 0.0 && !(a > -1.0)) throw numerical_error("non-integrable measure");
  if (hi == 1.0 && !(c > -1.0)) throw numerical_error("non-integrable measure");
  compensated_sum total;
  const double mid = 0.5;
  // left piece: [lo, min(hi, 1/2)]
  if (lo < mid) {
    const double top = std::min(hi, mid);
    if (lo == 0.0 && a < 0.0) {
      // z = x^(a+1): ∫ x^a g(x) dx = ∫ g(z^(1/(a+1))) dz / (a+1)
      const double e = 1.0 / (a + 1.0);
      auto g = [&](double z) { return std::pow(1.0 - std::pow(z, e), c) * e; };
      total += integrate(g, 0.0, std::pow(top, a + 1.0));
    } else if (a < 0.0) {
      // x = e^u flattens x^a across many decades
      auto g = [&](double u) {
        const double x = std::exp(u);
        return std::exp((a + 1.0) * u) * std::pow(1.0 - x, c);
      };
      const double ulo = std::log(lo);
      const double uhi = std::log(top);
      std::vector<double> decades;
      for (double u = std::ceil(ulo); u < uhi; u += 1.0) decades.push_back(u);
      total += integrate(g, ulo, uhi, decades);
    } else {
      auto g = [&](double x) { return std::pow(x, a) * std::pow(1.0 - x, c); };
      total += integrate(g, lo, top);
    }
  }
  // right piece: [max(lo, 1/2), hi]
  if (hi > mid) {
    const double bottom = std::max(lo, mid);
    if (hi == 1.0 && c < 0.0) {
      // y = (1-x)^(c+1)
      const double e = 1.0 / (c + 1.0);
      auto g = [&](double y) { return std::pow(1.0 - std::pow(y, e), a) * e; };
      total += integrate(g, 0.0, std::pow(1.0 - bottom, c + 1.0));
    } else {
      // y = 1 - x keeps 1 - x exact near the right endpoint
      auto g = [&](double y) { return std::pow(1.0 - y, a) * std::pow(y, c); };
      total += integrate(g, 1.0 - hi, 1.0 - bottom);
    }
  }
  return total.value();
}

}  // namespace quadrature
}  // namespace lambdamut
