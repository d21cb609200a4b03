#pragma once

// Multiplicative subordinators Z_s = 1 - e^{-μs} Π_{age_i <= s} (1 - X_i)
// built from a Poisson window of litters, and compositions of n sampled from
// their closed range.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lambdamut/errors.hpp"
#include "lambdamut/lambda_measure.hpp"
#include "lambdamut/nu_sampler.hpp"
#include "lambdamut/random.hpp"

namespace lambdamut {

/// A litter: birth time (<= 0, so age = -birth), size X in (0,1) and an
/// auxiliary uniform U.
struct litter_point {
  double birth;
  double size;
  double aux;

  double age() const { return -birth; }
};

/// Ordered parts of n.
class composition {
 public:
  composition() = default;
  explicit composition(std::vector<int> parts) : parts_(std::move(parts)) {
    for (int p : parts_)
      if (p < 1) throw precondition_error("composition parts must be >= 1");
  }

  static composition parse(const std::string& text) {
    std::vector<int> parts;
    std::stringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) {
      try {
        parts.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        throw precondition_error("malformed composition: " + text);
      }
    }
    return composition(std::move(parts));
  }

  const std::vector<int>& parts() const { return parts_; }
  int n() const {
    int total = 0;
    for (int p : parts_) total += p;
    return total;
  }
  int first() const { return parts_.empty() ? 0 : parts_.front(); }

  /// Parts after the first.
  composition remainder() const { return composition(std::vector<int>(parts_.begin() + (parts_.empty() ? 0 : 1), parts_.end())); }

  std::string to_string() const {
    std::string out;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(parts_[i]);
    }
    return out;
  }

  friend bool operator==(const composition&, const composition&) = default;
  friend auto operator<=>(const composition& a, const composition& b) { return a.parts_ <=> b.parts_; }

 private:
  std::vector<int> parts_;
};

struct hit_result {
  enum class kind { litter, regenerative };
  kind type;
  std::size_t index;  // litter index; meaningless for regenerative hits
  double age;         // relative to the origin the inversion was taken from

  bool is_litter() const { return type == kind::litter; }
};

inline constexpr double default_bias_target = 1e-6;
inline constexpr int default_max_doublings = 10;

/// Largest ε with window · ∫_(0,ε] x ν(dx) <= target (0 when |ν| < ∞).
inline double choose_truncation(const lambda_measure& measure, double window, double target = default_bias_target) {
  require_dust_condition(measure);
  if (measure.finite_nu()) return 0.0;
  auto bias = [&](double eps) { return window * nu_tail_moment(measure, eps).x_moment_below; };
  double lo = -300.0;  // log10 ε
  double hi = std::log10(0.5);
  if (bias(std::pow(10.0, hi)) <= target) return std::pow(10.0, hi);
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (bias(std::pow(10.0, mid)) <= target)
      lo = mid;
    else
      hi = mid;
  }
  return std::pow(10.0, lo);
}

/// Initial window T0 with n·e^{-μT0} <= 1e-6.
inline double default_window(double mu, int n) {
  if (mu > 0.0) return std::log(std::max(1, n) * 1e6) / mu;
  return 1.0;
}

/// Immutable characteristics (μ, ν restricted to (ε,1]) plus window settings;
/// shared by every window it samples.
class subordinator_model {
 public:
  subordinator_model(const lambda_measure& measure, double mu, double window, double eps = -1.0,
                     int max_doublings = default_max_doublings)
      : mu_(mu), window_(window), max_doublings_(max_doublings), label_(measure.label()) {
    if (mu < 0.0) throw precondition_error("mutation rate must be >= 0");
    if (!(window > 0.0)) throw precondition_error("window length must be positive");
    require_dust_condition(measure);
    if (measure.mass_at(1.0) > 0.0) throw precondition_error("litter sizes must be < 1: atom of Λ at 1");
    if (measure.is_zero() && mu == 0.0) throw precondition_error("degenerate measure");
    eps_ = eps < 0.0 ? choose_truncation(measure, window) : eps;
    const nu_tail tail = nu_tail_moment(measure, eps_);
    x_moment_below_ = tail.x_moment_below;
    if (!measure.is_zero()) sampler_ = std::make_shared<nu_sampler>(measure, eps_);
  }

  double mu() const { return mu_; }
  double initial_window() const { return window_; }
  double eps() const { return eps_; }
  int max_doublings() const { return max_doublings_; }
  double x_moment_below() const { return x_moment_below_; }
  double litter_rate() const { return sampler_ ? sampler_->mass() : 0.0; }
  const std::string& label() const { return label_; }

  /// Poisson litters with ages in (lo, hi], sorted by increasing age.
  template <class URBG>
  std::vector<litter_point> sample_points(double lo, double hi, URBG& rng) const {
    std::vector<litter_point> pts;
    if (!sampler_) return pts;
    const long count = poisson(rng, (hi - lo) * sampler_->mass());
    pts.reserve(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) {
      const double age = lo + (hi - lo) * uniform_open(rng);
      const double x = (*sampler_)(rng);
      const double u = uniform_open(rng);
      pts.push_back({-age, x, u});
    }
    std::sort(pts.begin(), pts.end(), [](const litter_point& a, const litter_point& b) { return a.birth > b.birth; });
    return pts;
  }

 private:
  double mu_;
  double window_;
  double eps_ = 0.0;
  int max_doublings_;
  double x_moment_below_ = 0.0;
  std::string label_;
  std::shared_ptr<const nu_sampler> sampler_;
};

/// Litters born in (-T, 0] and the distribution function F of the random
/// probability measure on ages they define.
class subordinator_window {
 public:
  /// Fixed litters; the window cannot grow.
  subordinator_window(double mu, std::vector<litter_point> points, double window)
      : mu_(mu), window_(window), initial_window_(window), points_(std::move(points)) {
    if (mu < 0.0) throw precondition_error("mutation rate must be >= 0");
    for (const litter_point& p : points_) {
      if (!(p.size > 0.0 && p.size < 1.0)) throw precondition_error("litter sizes must lie in (0,1)");
      if (!(p.age() >= 0.0 && p.age() <= window)) throw precondition_error("litter outside the window");
    }
    std::sort(points_.begin(), points_.end(), [](const litter_point& a, const litter_point& b) { return a.birth > b.birth; });
    rebuild_prefix(0);
  }

  template <class URBG>
  static subordinator_window sample(std::shared_ptr<const subordinator_model> model, URBG& rng) {
    subordinator_window w(model->mu(), {}, model->initial_window());
    w.points_ = model->sample_points(0.0, model->initial_window(), rng);
    w.rebuild_prefix(0);
    w.model_ = std::move(model);
    return w;
  }

  double mu() const { return mu_; }
  double window() const { return window_; }
  const std::vector<litter_point>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  int doublings() const { return doublings_; }
  bool extendable() const { return model_ != nullptr; }

  /// Running Σ log(1 - X_j) over the `count` youngest litters.
  double log_survival(std::size_t count) const { return log_surv_[count]; }

  /// Scalar bias bound T·∫_(0,ε] x ν(dx) from the size truncation.
  double truncation_bias() const { return model_ ? window_ * model_->x_moment_below() : 0.0; }

  double cdf(double s) const {
    if (s <= 0.0) return 0.0;
    const std::size_t c = count_up_to(s);
    return -std::expm1(-mu_ * s + log_surv_[c]);
  }

  /// F(age_i -) and F(age_i): the interval of litter i.
  double cdf_before(std::size_t i) const { return -std::expm1(-mu_ * points_[i].age() + log_surv_[i]); }
  double cdf_at(std::size_t i) const { return -std::expm1(-mu_ * points_[i].age() + log_surv_[i + 1]); }

  /// Total drift (regenerative-set) mass of F on [0, T].
  double drift_mass() const {
    compensated_sum total;
    double prev = 0.0;
    for (std::size_t j = 0; j <= points_.size(); ++j) {
      const double next = j < points_.size() ? points_[j].age() : window_;
      total += std::exp(log_surv_[j]) * (std::exp(-mu_ * prev) - std::exp(-mu_ * next));
      prev = next;
    }
    return total.value();
  }

  /// Inverts F at v, or nullopt when v >= F(T).
  std::optional<hit_result> try_invert(double v) const { return try_invert_from(0, 0.0, v); }

  hit_result invert(double v) const {
    auto hit = try_invert(v);
    if (!hit) throw precondition_error("beyond window");
    return *hit;
  }

  /// Inverts the distribution function seen from an earlier origin: ages are
  /// measured from `origin_age` and only litters with index >= start (all
  /// older than the origin) contribute.
  std::optional<hit_result> try_invert_from(std::size_t start, double origin_age, double v) const {
    if (!(v > 0.0 && v < 1.0)) throw precondition_error("inversion value must lie in (0,1)");
    const double l0 = log_surv_[start];
    const double level = std::log1p(-v);
    auto log_s = [&](std::size_t j, std::size_t after) {
      return -mu_ * (points_[j].age() - origin_age) + log_surv_[j + after] - l0;
    };
    // first litter whose post-jump survival is <= 1 - v
    std::size_t lo = start;
    std::size_t hi = points_.size();
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (log_s(mid, 1) <= level)
        hi = mid;
      else
        lo = mid + 1;
    }
    const std::size_t j = lo;
    const double prev_age = j > start ? points_[j - 1].age() - origin_age : 0.0;
    auto drift_hit = [&](double log_prefix) -> hit_result {
      double s = prev_age;
      if (mu_ > 0.0) s = std::max(prev_age, (log_prefix - l0 - level) / mu_);
      return {hit_result::kind::regenerative, 0, s};
    };
    if (j < points_.size()) {
      const double before = log_s(j, 0);
      const double after = log_s(j, 1);
      if (before > level && after < level) return hit_result{hit_result::kind::litter, j, points_[j].age() - origin_age};
      if (before > level) return hit_result{hit_result::kind::regenerative, 0, points_[j].age() - origin_age};
      return drift_hit(log_surv_[j]);
    }
    const double tail = -mu_ * (window_ - origin_age) + log_surv_[points_.size()] - l0;
    if (mu_ > 0.0 && level > tail) return drift_hit(log_surv_[points_.size()]);
    return std::nullopt;
  }

  /// Doubles T, adding Poisson litters with ages in (T, 2T].
  template <class URBG>
  void extend(URBG& rng) {
    if (!model_) throw precondition_error("beyond window");
    if (doublings_ >= model_->max_doublings()) throw window_exhausted("window exhaustion");
    const std::size_t old = points_.size();
    auto more = model_->sample_points(window_, 2.0 * window_, rng);
    points_.insert(points_.end(), more.begin(), more.end());
    window_ *= 2.0;
    ++doublings_;
    rebuild_prefix(old);
  }

  /// Grows the window until F(T) > v.
  template <class URBG>
  void cover(double v, URBG& rng) {
    while (!(v < cdf(window_))) extend(rng);
  }

 private:
  std::size_t count_up_to(double s) const {
    const auto it = std::upper_bound(points_.begin(), points_.end(), s,
                                     [](double age, const litter_point& p) { return age < p.age(); });
    return static_cast<std::size_t>(it - points_.begin());
  }

  void rebuild_prefix(std::size_t from) {
    log_surv_.resize(points_.size() + 1);
    if (from == 0) log_surv_[0] = 0.0;
    for (std::size_t i = from; i < points_.size(); ++i) log_surv_[i + 1] = log_surv_[i] + std::log1p(-points_[i].size);
  }

  double mu_;
  double window_;
  double initial_window_;
  int doublings_ = 0;
  std::vector<litter_point> points_;  // increasing age
  std::vector<double> log_surv_;
  std::shared_ptr<const subordinator_model> model_;
};

template <class URBG>
subordinator_window sample_window(const lambda_measure& measure, double mu, double window, double eps, URBG& rng) {
  if (eps == 0.0 && !measure.finite_nu()) throw precondition_error("infinite activity");
  return subordinator_window::sample(std::make_shared<const subordinator_model>(measure, mu, window, eps), rng);
}

/// Groups sorted hits into a composition: consecutive uniforms share a part
/// iff they fall inside the same litter interval.
inline composition compose_hits(std::span<const hit_result> hits) {
  std::vector<int> parts;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    const bool joins = i > 0 && hits[i].is_litter() && hits[i - 1].is_litter() && hits[i].index == hits[i - 1].index;
    if (joins)
      ++parts.back();
    else
      parts.push_back(1);
  }
  return composition(std::move(parts));
}

/// Sampling from a closed set S given as a union of closed segments: j and
/// j+1 (in sorted order) are split iff [V_j, V_{j+1}] meets S.
inline composition compose_from_closed_set(std::span<const std::pair<double, double>> segments,
                                           std::span<const double> uniforms) {
  std::vector<double> v(uniforms.begin(), uniforms.end());
  std::sort(v.begin(), v.end());
  auto meets = [&](double a, double b) {
    for (const auto& [lo, hi] : segments)
      if (lo <= b && hi >= a) return true;
    return false;
  };
  std::vector<int> parts;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0 && !meets(v[i - 1], v[i]))
      ++parts.back();
    else
      parts.push_back(1);
  }
  return composition(std::move(parts));
}

struct window_composition {
  composition parts;
  std::vector<hit_result> hits;  // in increasing order of the uniforms
};

template <class URBG>
window_composition sample_window_composition(subordinator_window& w, int n, URBG& rng) {
  if (n < 1) throw precondition_error("composition needs n >= 1");
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = uniform_open(rng);
  std::sort(v.begin(), v.end());
  w.cover(v.back(), rng);
  window_composition out;
  out.hits.reserve(v.size());
  for (double x : v) out.hits.push_back(w.invert(x));
  out.parts = compose_hits(out.hits);
  return out;
}

template <class URBG>
composition composition_from_window(subordinator_window& w, int n, URBG& rng) {
  return sample_window_composition(w, n, rng).parts;
}

/// First-part laws for sample sizes 1..n_max.
class first_part_cache {
 public:
  first_part_cache(const lambda_measure& measure, double mu, int n_max) {
    if (n_max < 1) throw precondition_error("first_part_cache needs n >= 1");
    laws_.push_back({});
    for (int n = 1; n <= n_max; ++n) laws_.push_back(make_first_part_law(measure, mu, n));
  }
  int n_max() const { return static_cast<int>(laws_.size()) - 1; }
  const first_part_law& law(int n) const {
    if (n < 1 || n > n_max()) throw precondition_error("first-part law not cached for this n");
    return laws_[static_cast<std::size_t>(n)];
  }

 private:
  std::vector<first_part_law> laws_;
};

/// Index m in [1, q.size()) drawn with probability q[m].
template <class URBG>
int draw_part(const std::vector<double>& q, URBG& rng) {
  const double u = uniform_open(rng);
  double acc = 0.0;
  int last = 1;
  for (std::size_t m = 1; m < q.size(); ++m) {
    if (q[m] <= 0.0) continue;
    last = static_cast<int>(m);
    acc += q[m];
    if (u < acc) return last;
  }
  return last;
}

/// Exact regenerative sampler: first part from the first-part law, then
/// recurse on the rest.
template <class URBG>
composition sequential_composition(const first_part_cache& laws, int n, URBG& rng) {
  if (n < 1 || n > laws.n_max()) throw precondition_error("sequential composition needs 1 <= n <= cached n");
  std::vector<int> parts;
  int left = n;
  while (left > 0) {
    const int m = draw_part(laws.law(left).q, rng);
    parts.push_back(m);
    left -= m;
  }
  return composition(std::move(parts));
}

}  // namespace lambdamut
