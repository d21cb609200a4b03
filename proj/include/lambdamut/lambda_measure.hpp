#pragma once

// Finite measures Λ on [0,1], the rates λ_{b,k} they induce, and the
// first-part law of the regenerative composition with characteristics (μ, ν)
// where ν(dx) = Λ(dx)/x².

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lambdamut/errors.hpp"
#include "lambdamut/numerics.hpp"

namespace lambdamut {

struct atom {
  double location;
  double weight;
};

/// Finite sum of weighted point masses. An empty list is the zero measure.
struct atomic_measure {
  std::vector<atom> atoms;
};

/// total_mass · Beta(alpha, beta) density on (0,1).
struct beta_shape {
  double alpha;
  double beta;
  double total_mass;
};

/// Tabulated density on a strictly increasing grid inside [0,1], interpolated
/// piecewise by local Lagrange polynomials of degree `order` (1 or 3) and
/// taken to be zero outside the grid. Negative interpolant values are clamped.
class density_table {
 public:
  using cell_poly = std::array<double, 4>;  // monomial coefficients c0..c3

  density_table(std::vector<double> x, std::vector<double> density, int order = 1)
      : x_(std::move(x)), f_(std::move(density)), order_(order) {
    if (x_.size() != f_.size() || x_.size() < 2)
      throw precondition_error("density table needs at least two (x, density) points");
    if (order_ != 1 && order_ != 3) throw precondition_error("density table order must be 1 or 3");
    for (std::size_t i = 0; i < x_.size(); ++i) {
      if (!(x_[i] >= 0.0 && x_[i] <= 1.0)) throw precondition_error("density grid must lie in [0,1]");
      if (i > 0 && !(x_[i] > x_[i - 1])) throw precondition_error("density grid must be strictly increasing");
      if (!(f_[i] >= 0.0) || !std::isfinite(f_[i])) throw precondition_error("density values must be finite and >= 0");
    }
    build_cells();
  }

  const std::vector<double>& grid() const { return x_; }
  const std::vector<double>& values() const { return f_; }
  int order() const { return order_; }
  std::size_t cells() const { return cells_.size(); }
  const cell_poly& cell(std::size_t i) const { return cells_[i]; }

  /// Number of low-order coefficients of the first cell that vanish at the
  /// origin; effectively infinite when the grid starts above 0.
  int vanishing_order_at_origin() const { return vanishing_order_; }

  double operator()(double x) const {
    if (x < x_.front() || x > x_.back()) return 0.0;
    const std::size_t i = cell_index(x);
    return std::max(0.0, horner(cells_[i], x));
  }

  /// ∫_{[lo,hi]} x^p (1-x)^q f(x) dx.
  double integrate_power(double p, double q, double lo, double hi) const {
    lo = std::max(lo, x_.front());
    hi = std::min(hi, x_.back());
    if (!(hi > lo)) return 0.0;
    if (p < 0.0 && lo == 0.0 && static_cast<double>(vanishing_order_) + p <= -1.0)
      throw numerical_error("non-integrable measure");
    compensated_sum total;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      const double a = std::max(lo, x_[i]);
      const double b = std::min(hi, x_[i + 1]);
      if (!(b > a)) continue;
      const cell_poly& c = cells_[i];
      auto integrand = [&c, p, q](double x) {
        double f = 0.0;
        double fx = 0.0;
        for (int j = 3; j >= 0; --j) fx = fx * x + c[j];
        if (fx <= 0.0) return 0.0;
        for (int j = 0; j < 4; ++j)
          if (c[j] != 0.0) f += c[j] * std::pow(x, j + p);
        return std::max(0.0, f) * std::pow(1.0 - x, q);
      };
      total += quadrature::integrate(integrand, a, b);
    }
    return total.value();
  }

  density_table scaled(double factor) const {
    std::vector<double> f = f_;
    for (double& v : f) v *= factor;
    return density_table(x_, std::move(f), order_);
  }

 private:
  static double horner(const cell_poly& c, double x) { return ((c[3] * x + c[2]) * x + c[1]) * x + c[0]; }

  std::size_t cell_index(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - x_.begin());
    if (i == 0) return 0;
    return std::min(i - 1, cells_.size() - 1);
  }

  void build_cells() {
    const std::size_t npts = x_.size();
    const std::size_t width = std::min<std::size_t>(static_cast<std::size_t>(order_) + 1, npts);
    cells_.assign(npts - 1, cell_poly{0, 0, 0, 0});
    for (std::size_t i = 0; i + 1 < npts; ++i) {
      // nodes i - (width/2 - 1) ... shifted to stay inside the grid
      std::ptrdiff_t first = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(width / 2 - 1);
      first = std::clamp<std::ptrdiff_t>(first, 0, static_cast<std::ptrdiff_t>(npts - width));
      cell_poly acc{0, 0, 0, 0};
      for (std::size_t a = 0; a < width; ++a) {
        const std::size_t ia = static_cast<std::size_t>(first) + a;
        cell_poly basis{1, 0, 0, 0};
        double denom = 1.0;
        for (std::size_t b = 0; b < width; ++b) {
          if (b == a) continue;
          const double xb = x_[static_cast<std::size_t>(first) + b];
          // basis *= (x - xb)
          cell_poly next{0, 0, 0, 0};
          for (int j = 0; j < 4; ++j) {
            if (j + 1 < 4) next[j + 1] += basis[j];
            next[j] -= xb * basis[j];
          }
          basis = next;
          denom *= x_[ia] - xb;
        }
        for (int j = 0; j < 4; ++j) acc[j] += f_[ia] * basis[j] / denom;
      }
      cells_[i] = acc;
    }
    vanishing_order_ = std::numeric_limits<int>::max() / 2;
    if (x_.front() == 0.0) {
      cell_poly& c = cells_.front();
      const double scale = std::max({std::abs(c[0]), std::abs(c[1]), std::abs(c[2]), std::abs(c[3]), 1e-300});
      int z = 0;
      while (z < 4 && std::abs(c[z]) <= 1e-12 * scale) {
        c[z] = 0.0;
        ++z;
      }
      vanishing_order_ = z;
    }
  }

  std::vector<double> x_;
  std::vector<double> f_;
  int order_;
  std::vector<cell_poly> cells_;
  int vanishing_order_ = 0;
};

/// A finite measure Λ on [0,1].
class lambda_measure {
 public:
  using representation = std::variant<atomic_measure, beta_shape, density_table>;

  explicit lambda_measure(representation r, std::string label = {})
      : rep_(std::move(r)), label_(std::move(label)) {
    validate();
    if (label_.empty()) label_ = default_label();
  }

  static lambda_measure zero() { return lambda_measure(atomic_measure{}); }
  static lambda_measure delta(double x, double weight = 1.0) {
    return lambda_measure(atomic_measure{{atom{x, weight}}});
  }
  static lambda_measure atoms(std::vector<atom> list) { return lambda_measure(atomic_measure{std::move(list)}); }
  static lambda_measure beta(double alpha, double beta, double mass = 1.0) {
    return lambda_measure(beta_shape{alpha, beta, mass});
  }
  static lambda_measure lebesgue() { return lambda_measure(beta_shape{1.0, 1.0, 1.0}, "beta:1,1,1"); }
  /// Λ(dx) = 3x² dx, so that ν = 3·Lebesgue.
  static lambda_measure poly3x2() { return lambda_measure(beta_shape{3.0, 1.0, 1.0}, "poly3x2"); }
  static lambda_measure density(std::vector<double> x, std::vector<double> f, int order = 1) {
    return lambda_measure(density_table(std::move(x), std::move(f), order));
  }

  const representation& rep() const { return rep_; }
  const std::string& label() const { return label_; }

  double total_mass() const {
    return std::visit(
        [](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, atomic_measure>) {
            compensated_sum s;
            for (const atom& a : m.atoms) s += a.weight;
            return s.value();
          } else if constexpr (std::is_same_v<T, beta_shape>) {
            return m.total_mass;
          } else {
            return m.integrate_power(0.0, 0.0, 0.0, 1.0);
          }
        },
        rep_);
  }

  bool is_zero() const {
    const auto* a = std::get_if<atomic_measure>(&rep_);
    return a != nullptr && a->atoms.empty();
  }

  double mass_at(double x) const {
    const auto* a = std::get_if<atomic_measure>(&rep_);
    if (a == nullptr) return 0.0;
    double w = 0.0;
    for (const atom& at : a->atoms)
      if (at.location == x) w += at.weight;
    return w;
  }

  /// ∫ x⁻¹ Λ(dx) < ∞.
  bool dust_condition() const { return integrable_at_origin(-1.0); }

  /// |ν| = ∫ x⁻² Λ(dx) < ∞.
  bool finite_nu() const { return integrable_at_origin(-2.0); }

  /// ∫_{[0,1]} x^p (1-x)^q Λ(dx), with 0^0 = 1.
  double moment(double p, double q) const {
    return std::visit(
        [p, q](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, atomic_measure>) {
            compensated_sum s;
            for (const atom& a : m.atoms) {
              if (a.location == 0.0 && p < 0.0) throw numerical_error("non-integrable measure");
              s += a.weight * std::pow(a.location, p) * std::pow(1.0 - a.location, q);
            }
            return s.value();
          } else if constexpr (std::is_same_v<T, beta_shape>) {
            if (!(m.alpha + p > 0.0) || !(m.beta + q > 0.0)) throw numerical_error("non-integrable measure");
            return m.total_mass * std::exp(log_beta(m.alpha + p, m.beta + q) - log_beta(m.alpha, m.beta));
          } else {
            return m.integrate_power(p, q, 0.0, 1.0);
          }
        },
        rep_);
  }

  /// ∫_{(lo,hi]} x^p (1-x)^q Λ(dx).
  double moment_between(double p, double q, double lo, double hi) const {
    if (!(hi > lo)) return 0.0;
    return std::visit(
        [p, q, lo, hi](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, atomic_measure>) {
            compensated_sum s;
            for (const atom& a : m.atoms)
              if (a.location > lo && a.location <= hi)
                s += a.weight * std::pow(a.location, p) * std::pow(1.0 - a.location, q);
            return s.value();
          } else if constexpr (std::is_same_v<T, beta_shape>) {
            const double norm = m.total_mass * std::exp(-log_beta(m.alpha, m.beta));
            return norm * quadrature::power_kernel(m.alpha - 1.0 + p, m.beta - 1.0 + q, lo, hi);
          } else {
            return m.integrate_power(p, q, lo, hi);
          }
        },
        rep_);
  }

  /// The measure c·Λ (characteristics (cμ, cν) pair with this).
  lambda_measure scaled(double c) const {
    if (!(c > 0.0)) throw precondition_error("scale factor must be positive");
    return std::visit(
        [c](const auto& m) -> lambda_measure {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, atomic_measure>) {
            atomic_measure out = m;
            for (atom& a : out.atoms) a.weight *= c;
            return lambda_measure(out);
          } else if constexpr (std::is_same_v<T, beta_shape>) {
            return lambda_measure(beta_shape{m.alpha, m.beta, m.total_mass * c});
          } else {
            return lambda_measure(m.scaled(c));
          }
        },
        rep_);
  }

 private:
  bool integrable_at_origin(double p) const {
    return std::visit(
        [p](const auto& m) -> bool {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, atomic_measure>) {
            return std::none_of(m.atoms.begin(), m.atoms.end(), [](const atom& a) { return a.location == 0.0; });
          } else if constexpr (std::is_same_v<T, beta_shape>) {
            return m.alpha + p > 0.0;
          } else {
            return static_cast<double>(m.vanishing_order_at_origin()) + p > -1.0;
          }
        },
        rep_);
  }

  void validate() const {
    if (const auto* a = std::get_if<atomic_measure>(&rep_)) {
      for (const atom& at : a->atoms) {
        if (!(at.location >= 0.0 && at.location <= 1.0)) throw precondition_error("atom location outside [0,1]");
        if (!(at.weight > 0.0) || !std::isfinite(at.weight)) throw precondition_error("atom weight must be positive");
      }
    } else if (const auto* b = std::get_if<beta_shape>(&rep_)) {
      if (!(b->alpha > 0.0) || !(b->beta > 0.0) || !(b->total_mass > 0.0) || !std::isfinite(b->total_mass))
        throw precondition_error("beta shape needs alpha > 0, beta > 0, mass > 0");
    } else {
      const auto& d = std::get<density_table>(rep_);
      if (!(d.integrate_power(0.0, 0.0, 0.0, 1.0) > 0.0)) throw precondition_error("density has zero mass");
    }
  }

  std::string default_label() const {
    std::ostringstream os;
    os.precision(17);
    if (const auto* a = std::get_if<atomic_measure>(&rep_)) {
      if (a->atoms.empty()) return "zero";
      os << "atoms:";
      for (std::size_t i = 0; i < a->atoms.size(); ++i)
        os << (i ? "," : "") << a->atoms[i].location << '=' << a->atoms[i].weight;
    } else if (const auto* b = std::get_if<beta_shape>(&rep_)) {
      os << "beta:" << b->alpha << ',' << b->beta << ',' << b->total_mass;
    } else {
      os << "density-table";
    }
    return os.str();
  }

  representation rep_;
  std::string label_;
};

/// λ_{b,k} = ∫ x^{k-2} (1-x)^{b-k} Λ(dx).
inline double lambda_rate(const lambda_measure& measure, int b, int k) {
  if (!(2 <= k && k <= b)) throw precondition_error("lambda_rate needs 2 <= k <= b");
  return measure.moment(k - 2, b - k);
}

template <class Scalar>
struct basic_rate_table {
  int n_max = 0;
  std::vector<std::vector<Scalar>> lambda;  // lambda[b][k], 2 <= k <= b <= n_max
  std::vector<Scalar> total_rate;           // Σ_k C(n,k) lambda[n][k]

  const Scalar& rate(int b, int k) const { return lambda[static_cast<std::size_t>(b)][static_cast<std::size_t>(k)]; }
  const Scalar& total(int n) const { return total_rate[static_cast<std::size_t>(n)]; }
};

using rate_table = basic_rate_table<double>;

inline rate_table build_rate_table(const lambda_measure& measure, int n_max) {
  if (n_max < 2) throw precondition_error("rate table needs nMax >= 2");
  rate_table t;
  t.n_max = n_max;
  t.lambda.assign(static_cast<std::size_t>(n_max) + 1, {});
  t.total_rate.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  for (int b = 2; b <= n_max; ++b) {
    auto& row = t.lambda[static_cast<std::size_t>(b)];
    row.assign(static_cast<std::size_t>(b) + 1, 0.0);
    compensated_sum total;
    for (int k = 2; k <= b; ++k) {
      row[static_cast<std::size_t>(k)] = lambda_rate(measure, b, k);
      total += binomial(b, k) * row[static_cast<std::size_t>(k)];
    }
    t.total_rate[static_cast<std::size_t>(b)] = total.value();
  }
  return t;
}

inline void require_dust_condition(const lambda_measure& measure) {
  if (!measure.dust_condition()) throw precondition_error("dust condition violated");
}

/// Φ(n:m) = μ n 1(m=1) + C(n,m) ∫ x^m (1-x)^{n-m} ν(dx).
inline double phi_weight(const lambda_measure& measure, double mu, int n, int m) {
  if (!(1 <= m && m <= n)) throw precondition_error("phi_weight needs 1 <= m <= n");
  if (m == 1) {
    require_dust_condition(measure);
    return mu * n + n * measure.moment(-1.0, n - 1);
  }
  return binomial(n, m) * measure.moment(m - 2, n - m);
}

/// Law of the first part of C_n, with the size-one case split into the
/// regenerative-set hit (q1prime) and the lone-litter hit (q1doubleprime).
struct first_part_law {
  int n = 0;
  double q1prime = 0.0;
  double q1doubleprime = 0.0;
  std::vector<double> q;    // q[m], 1 <= m <= n; q[0] unused
  std::vector<double> phi;  // Φ(n:m)
  double phi_total = 0.0;
};

inline first_part_law make_first_part_law(const lambda_measure& measure, double mu, int n) {
  if (n < 1) throw precondition_error("first_part_law needs n >= 1");
  if (mu < 0.0) throw precondition_error("mutation rate must be >= 0");
  require_dust_condition(measure);
  first_part_law law;
  law.n = n;
  law.phi.assign(static_cast<std::size_t>(n) + 1, 0.0);
  law.q.assign(static_cast<std::size_t>(n) + 1, 0.0);
  const double drift = mu * n;
  const double lone = n * measure.moment(-1.0, n - 1);
  law.phi[1] = drift + lone;
  compensated_sum total;
  total += law.phi[1];
  for (int m = 2; m <= n; ++m) {
    law.phi[static_cast<std::size_t>(m)] = phi_weight(measure, mu, n, m);
    total += law.phi[static_cast<std::size_t>(m)];
  }
  law.phi_total = total.value();
  if (!(law.phi_total > 0.0)) throw precondition_error("degenerate measure");
  for (int m = 1; m <= n; ++m) law.q[static_cast<std::size_t>(m)] = law.phi[static_cast<std::size_t>(m)] / law.phi_total;
  law.q1prime = drift / law.phi_total;
  law.q1doubleprime = lone / law.phi_total;
  return law;
}

struct nu_tail {
  double mass_above;      // ν((ε,1])
  double x_moment_below;  // ∫_(0,ε] x ν(dx)
};

inline nu_tail nu_tail_moment(const lambda_measure& measure, double eps) {
  if (!(eps >= 0.0 && eps < 1.0)) throw precondition_error("truncation threshold must lie in [0,1)");
  require_dust_condition(measure);
  nu_tail out{0.0, 0.0};
  if (eps == 0.0) {
    if (!measure.finite_nu()) throw precondition_error("infinite activity");
    out.mass_above = measure.moment(-2.0, 0.0);
    return out;
  }
  out.mass_above = measure.moment_between(-2.0, 0.0, eps, 1.0);
  out.x_moment_below = measure.moment_between(-1.0, 0.0, 0.0, eps);
  return out;
}

}  // namespace lambdamut
