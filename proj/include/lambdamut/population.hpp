#pragma once

// The stationary population with mutation: litters related through the
// origination relation, roots and genotypes, the population measure ρ_0,
// family-partition samplers, and the finite-intensity forward dynamics.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "lambdamut/coalescent_sim.hpp"
#include "lambdamut/errors.hpp"
#include "lambdamut/lambda_measure.hpp"
#include "lambdamut/nu_sampler.hpp"
#include "lambdamut/partition.hpp"
#include "lambdamut/random.hpp"
#include "lambdamut/subordinator.hpp"

namespace lambdamut {

struct genotype_atom {
  double genotype;
  double size;
};

/// Σ_i size_i δ_{genotype_i} + diffuse · Lebesgue on [0,1].
struct population_measure {
  std::vector<genotype_atom> atoms;  // increasing genotype
  double diffuse = 1.0;

  double atom_mass() const {
    compensated_sum s;
    for (const auto& a : atoms) s += a.size;
    return s.value();
  }
  double total() const {
    compensated_sum s;
    for (const auto& a : atoms) s += a.size;
    s += diffuse;
    return s.value();
  }
};

inline void validate_population_measure(const population_measure& p) {
  for (std::size_t i = 0; i < p.atoms.size(); ++i) {
    if (!(p.atoms[i].size > 0.0)) throw precondition_error("population atoms must have positive size");
    if (!(p.atoms[i].genotype >= 0.0 && p.atoms[i].genotype <= 1.0)) throw precondition_error("genotype outside [0,1]");
    if (i > 0 && !(p.atoms[i].genotype > p.atoms[i - 1].genotype))
      throw precondition_error("genotypes must be distinct and sorted");
  }
  if (p.diffuse < 0.0 || std::abs(p.total() - 1.0) > 1e-12) throw precondition_error("population measure must have mass 1");
}

/// Standing assumptions of the population construction: Λ({0}) = Λ({1}) = 0,
/// ∫ x⁻¹ Λ(dx) < ∞, μ > 0.
inline void require_population_assumptions(const lambda_measure& measure, double mu) {
  if (measure.mass_at(0.0) > 0.0 || measure.mass_at(1.0) > 0.0)
    throw precondition_error("population model needs Λ without atoms at 0 or 1");
  require_dust_condition(measure);
  if (!(mu > 0.0)) throw precondition_error("population model needs mu > 0");
}

inline std::shared_ptr<const subordinator_model> make_population_model(const lambda_measure& measure, double mu, int n,
                                                                     double window = 0.0, double eps = -1.0) {
  require_population_assumptions(measure, mu);
  const double t0 = window > 0.0 ? window : default_window(mu, n);
  return std::make_shared<const subordinator_model>(measure, mu, t0, eps);
}

struct root_info {
  std::size_t root;
  int height;
  double genotype;
};

/// Litters of a window with their lazily resolved genealogy.
class litter_history {
 public:
  explicit litter_history(subordinator_window window) : window_(std::move(window)) { sync(); }

  template <class URBG>
  static litter_history sample(std::shared_ptr<const subordinator_model> model, URBG& rng) {
    return litter_history(subordinator_window::sample(std::move(model), rng));
  }

  const subordinator_window& window() const { return window_; }
  subordinator_window& window() { return window_; }
  std::size_t size() const { return window_.size(); }
  double truncation_bias() const { return window_.truncation_bias(); }

  /// X_i(t) = X_i e^{-μ(t-τ_i)} Π_{τ_i < τ_j <= t} (1 - X_j), for τ_i <= t <= 0.
  double litter_size_at(std::size_t i, double t) const {
    const auto& pts = window_.points();
    if (i >= pts.size()) throw precondition_error("no such litter");
    if (t < pts[i].birth) throw precondition_error("unborn litter");
    if (t > 0.0) throw precondition_error("litter history ends at time 0");
    // younger litters j < i born at or before t
    const auto first = std::lower_bound(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(i), -t,
                                        [](const litter_point& p, double age) { return p.age() < age; });
    const std::size_t c = static_cast<std::size_t>(first - pts.begin());
    const double log_prod = window_.log_survival(i) - window_.log_survival(c);
    return pts[i].size * std::exp(-window_.mu() * (t - pts[i].birth) + log_prod);
  }

  /// The litter i originates from, or nullopt when i is a root. Inverts the
  /// distribution function as of τ_i- at U_i.
  template <class URBG>
  std::optional<std::size_t> resolve_parent(std::size_t i, URBG& rng) {
    if (i >= size()) throw precondition_error("no such litter");
    if (parent_[i] != unresolved) return parent_[i] == root_marker ? std::nullopt : std::optional<std::size_t>(parent_[i]);
    std::optional<hit_result> hit;
    for (;;) {
      const litter_point& p = window_.points()[i];
      hit = window_.try_invert_from(i + 1, p.age(), p.aux);
      if (hit) break;
      window_.extend(rng);
      sync();
    }
    if (hit->is_litter()) {
      parent_[i] = static_cast<long>(hit->index);
      return hit->index;
    }
    parent_[i] = root_marker;
    root_[i] = static_cast<long>(i);
    height_[i] = 0;
    return std::nullopt;
  }

  /// Follows parents to the root, memoizing along the chain.
  template <class URBG>
  root_info resolve_root(std::size_t i, URBG& rng) {
    if (i >= size()) throw precondition_error("no such litter");
    std::vector<std::size_t> chain;
    std::size_t cur = i;
    while (root_[cur] == unresolved) {
      const auto parent = resolve_parent(cur, rng);
      if (!parent) break;
      chain.push_back(cur);
      cur = *parent;
    }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      const auto par = static_cast<std::size_t>(parent_[*it]);
      root_[*it] = root_[par];
      height_[*it] = height_[par] + 1;
    }
    return info(i);
  }

  /// Parent annotation without resolving: -2 unresolved, -1 root.
  long parent_of(std::size_t i) const { return parent_.at(i); }

  /// Height of a litter born at time 0 with auxiliary uniform u.
  template <class URBG>
  int fresh_litter_height(double u, URBG& rng) {
    window_.cover(u, rng);
    sync();
    const hit_result hit = window_.invert(u);
    if (!hit.is_litter()) return 0;
    return resolve_root(hit.index, rng).height + 1;
  }

  /// Family partition of n individuals sampled from ρ_0: uniforms hitting the
  /// regenerative set are singletons; litter hits are pooled by root.
  template <class URBG>
  partition_vector sample_families(int n, URBG& rng) {
    if (n < 1) throw precondition_error("sample size must be >= 1");
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) x = uniform_open(rng);
    window_.cover(*std::max_element(v.begin(), v.end()), rng);
    sync();
    std::vector<int> sizes;
    std::map<std::size_t, int> by_root;
    for (double x : v) {
      const hit_result hit = window_.invert(x);
      if (!hit.is_litter())
        sizes.push_back(1);
      else
        ++by_root[resolve_root(hit.index, rng).root];
    }
    for (const auto& [root, count] : by_root) sizes.push_back(count);
    return partition_vector::from_sizes(sizes);
  }

  /// ρ_0 over the litters currently in the window; litters sharing a root
  /// pool their mass on the root's genotype.
  template <class URBG>
  population_measure rho_state(URBG& rng) {
    const std::size_t count = size();
    std::map<double, compensated_sum> pooled;
    for (std::size_t i = 0; i < count; ++i) {
      const root_info r = resolve_root(i, rng);
      pooled[r.genotype] += litter_size_at(i, 0.0);
    }
    population_measure out;
    compensated_sum total;
    for (const auto& [g, s] : pooled) {
      out.atoms.push_back({g, s.value()});
      total += s.value();
    }
    out.diffuse = 1.0 - total.value();
    return out;
  }

 private:
  static constexpr long unresolved = -2;
  static constexpr long root_marker = -1;

  root_info info(std::size_t i) const {
    const auto r = static_cast<std::size_t>(root_[i]);
    return {r, height_[i], window_.points()[r].aux};
  }

  void sync() {
    parent_.resize(window_.size(), unresolved);
    root_.resize(window_.size(), unresolved);
    height_.resize(window_.size(), -1);
  }

  subordinator_window window_;
  std::vector<long> parent_;
  std::vector<long> root_;
  std::vector<int> height_;
};

template <class URBG>
partition_vector sample_family_partition_set(const std::shared_ptr<const subordinator_model>& model, int n, URBG& rng) {
  litter_history h = litter_history::sample(model, rng);
  return h.sample_families(n, rng);
}

template <class URBG>
partition_vector sample_family_partition_set(const lambda_measure& measure, double mu, int n, URBG& rng) {
  return sample_family_partition_set(make_population_model(measure, mu, n), n, rng);
}

/// Three-case chain on weighted lineages: freeze one with probability
/// q(b:1)', do nothing with probability q(b:1)'', merge a uniform m-subset with
/// probability q(b:m).
template <class URBG>
partition_vector sample_family_partition_chain(const first_part_cache& laws, int n, URBG& rng) {
  if (n < 1 || n > laws.n_max()) throw precondition_error("chain sampler needs 1 <= n <= cached n");
  if (!(laws.law(1).q1prime > 0.0)) throw precondition_error("degenerate measure");
  std::vector<int> lineages(static_cast<std::size_t>(n), 1);
  std::vector<int> families;
  while (!lineages.empty()) {
    const auto b = static_cast<int>(lineages.size());
    const first_part_law& law = laws.law(b);
    double u = uniform_open(rng);
    if (u < law.q1prime) {
      const std::size_t i = uniform_index(rng, lineages.size());
      families.push_back(lineages[i]);
      lineages.erase(lineages.begin() + static_cast<std::ptrdiff_t>(i));
      continue;
    }
    u -= law.q1prime;
    if (u < law.q1doubleprime) continue;
    u -= law.q1doubleprime;
    int m = 0;
    for (int k = 2; k <= b; ++k) {
      if (law.q[static_cast<std::size_t>(k)] <= 0.0) continue;
      m = k;
      if (u < law.q[static_cast<std::size_t>(k)]) break;
      u -= law.q[static_cast<std::size_t>(k)];
    }
    if (m == 0) continue;  // rounding at the very top of [0,1)
    const auto chosen = detail::draw_subset(lineages.size(), static_cast<std::size_t>(m), rng);
    int merged = 0;
    for (std::size_t r = chosen.size(); r-- > 0;) {
      merged += lineages[chosen[r]];
      lineages.erase(lineages.begin() + static_cast<std::ptrdiff_t>(chosen[r]));
    }
    lineages.push_back(merged);
  }
  return partition_vector::from_sizes(families);
}

struct forward_snapshot {
  double time;
  population_measure state;
};

/// Finite-intensity dynamics from `init` over [0, horizon]: erosion at rate μ
/// between jumps, at a jump (1-X)ρ_- + X δ_R with R drawn from ρ_- by inverse
/// transform. `observe(time, state)` sees the start, every jump and the end.
template <class URBG, class Observer>
void forward_simulate(const lambda_measure& measure, double mu, double horizon, population_measure init, URBG& rng,
                      Observer&& observe) {
  if (measure.mass_at(0.0) > 0.0 || measure.mass_at(1.0) > 0.0)
    throw precondition_error("population model needs Λ without atoms at 0 or 1");
  if (!measure.finite_nu()) throw precondition_error("infinite intensity");
  if (mu < 0.0) throw precondition_error("mutation rate must be >= 0");
  if (!(horizon >= 0.0)) throw precondition_error("horizon must be >= 0");
  validate_population_measure(init);
  std::optional<nu_sampler> sizes;
  if (!measure.is_zero()) sizes.emplace(measure, 0.0);
  const double rate = sizes ? sizes->mass() : 0.0;

  population_measure rho = std::move(init);
  auto renormalize = [&rho]() {
    rho.atoms.erase(std::remove_if(rho.atoms.begin(), rho.atoms.end(), [](const genotype_atom& a) { return !(a.size > 0.0); }),
                    rho.atoms.end());
    rho.diffuse = std::max(0.0, 1.0 - rho.atom_mass());
  };
  double t = 0.0;
  observe(t, static_cast<const population_measure&>(rho));
  while (t < horizon) {
    const double wait = rate > 0.0 ? exponential(rng, rate) : horizon - t + 1.0;
    const double step = std::min(wait, horizon - t);
    const double decay = std::exp(-mu * step);
    for (auto& a : rho.atoms) a.size *= decay;
    renormalize();
    t += step;
    if (wait > step) break;

    const double x = (*sizes)(rng);
    // R = inf{r : ρ([0,r]) > U}
    double genotype = 0.0;
    std::size_t hit_atom = rho.atoms.size();
    for (;;) {
      const double u = uniform_open(rng);
      double acc = 0.0;
      double prev = 0.0;
      bool found = false;
      for (std::size_t k = 0; k < rho.atoms.size() && !found; ++k) {
        const double stretch = rho.diffuse * (rho.atoms[k].genotype - prev);
        if (u < acc + stretch) {
          genotype = prev + (u - acc) / rho.diffuse;
          found = true;
          break;
        }
        acc += stretch;
        if (u < acc + rho.atoms[k].size) {
          hit_atom = k;
          genotype = rho.atoms[k].genotype;
          found = true;
          break;
        }
        acc += rho.atoms[k].size;
        prev = rho.atoms[k].genotype;
      }
      if (!found) {
        if (!(rho.diffuse > 0.0)) {
          hit_atom = rho.atoms.size() - 1;
          genotype = rho.atoms.back().genotype;
        } else {
          genotype = std::min(prev + (u - acc) / rho.diffuse, std::nextafter(1.0, 0.0));
        }
      }
      if (hit_atom < rho.atoms.size()) break;
      // a fresh genotype must not coincide with an existing one
      const bool clash = std::any_of(rho.atoms.begin(), rho.atoms.end(),
                                     [genotype](const genotype_atom& a) { return a.genotype == genotype; });
      if (!clash) break;
    }
    for (auto& a : rho.atoms) a.size *= 1.0 - x;
    if (hit_atom < rho.atoms.size()) {
      rho.atoms[hit_atom].size += x;
    } else {
      const auto pos = std::lower_bound(rho.atoms.begin(), rho.atoms.end(), genotype,
                                        [](const genotype_atom& a, double g) { return a.genotype < g; });
      rho.atoms.insert(pos, genotype_atom{genotype, x});
    }
    renormalize();
    observe(t, static_cast<const population_measure&>(rho));
  }
  observe(t, static_cast<const population_measure&>(rho));
}

template <class URBG>
std::vector<forward_snapshot> forward_simulate(const lambda_measure& measure, double mu, double horizon,
                                               population_measure init, URBG& rng) {
  std::vector<forward_snapshot> path;
  forward_simulate(measure, mu, horizon, std::move(init), rng,
                   [&path](double t, const population_measure& p) { path.push_back({t, p}); });
  return path;
}

struct cutoff_result {
  double max_deviation;
  double bound;
  bool holds;
};

/// sup over `ages` of |F(s: stationary) - F(s: litters older than t removed)|
/// on the same Poisson points, against the bound e^{-μt}.
template <class URBG>
cutoff_result cutoff_bound_check(subordinator_window& w, double t, const std::vector<double>& ages, URBG& rng) {
  if (!(w.mu() > 0.0)) throw precondition_error("bound check needs mu > 0");
  double top = 0.0;
  for (double s : ages) top = std::max(top, s);
  while (w.window() < top) w.extend(rng);
  const auto& pts = w.points();
  auto count_up_to = [&pts](double s) {
    return static_cast<std::size_t>(std::upper_bound(pts.begin(), pts.end(), s,
                                                     [](double age, const litter_point& p) { return age < p.age(); }) -
                                    pts.begin());
  };
  cutoff_result out{0.0, std::exp(-w.mu() * t), true};
  for (double s : ages) {
    if (s < 0.0) continue;
    const double cut = std::exp(w.log_survival(count_up_to(std::min(s, t))));
    const double full = std::exp(w.log_survival(count_up_to(s)));
    const double dev = std::exp(-w.mu() * s) * std::abs(cut - full);
    out.max_deviation = std::max(out.max_deviation, dev);
  }
  out.holds = out.max_deviation < out.bound;
  return out;
}

template <class URBG>
cutoff_result cutoff_bound_check(litter_history& h, double t, const std::vector<double>& ages, URBG& rng) {
  return cutoff_bound_check(h.window(), t, ages, rng);
}

}  // namespace lambdamut
