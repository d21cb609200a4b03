#pragma once

// Exact sampling distribution q(a) of the family partition of a sample of n
// under a Λ-coalescent with infinite-alleles mutation at rate μ per lineage,
// solved by dynamic programming over partition vectors in increasing n.

#include <cmath>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lambdamut/errors.hpp"
#include "lambdamut/lambda_measure.hpp"
#include "lambdamut/numerics.hpp"
#include "lambdamut/partition.hpp"

namespace lambdamut {

template <class Scalar>
struct basic_sampling_distribution {
  int n = 0;
  Scalar mu{};
  std::string measure;
  std::vector<std::pair<partition_vector, Scalar>> entries;  // enumeration order

  Scalar probability(const partition_vector& a) const {
    for (const auto& [key, p] : entries)
      if (key == a) return p;
    return Scalar(0);
  }

  Scalar total() const {
    if constexpr (std::is_floating_point_v<Scalar>) {
      compensated_sum s;
      for (const auto& e : entries) s += e.second;
      return s.value();
    } else {
      Scalar s = 0;
      for (const auto& e : entries) s += e.second;
      return s;
    }
  }
};

using sampling_distribution = basic_sampling_distribution<double>;

namespace detail {

template <class Scalar>
class accumulator {
 public:
  void add(const Scalar& x) { value_ += x; }
  Scalar value() const { return value_; }

 private:
  Scalar value_{0};
};

template <>
class accumulator<double> {
 public:
  void add(double x) { sum_.add(x); }
  double value() const { return sum_.value(); }

 private:
  compensated_sum sum_;
};

}  // namespace detail

/// Solves the recursion for every sample size 1..n. Entry m-1 of the result
/// holds the distribution for sample size m.
template <class Scalar>
std::vector<basic_sampling_distribution<Scalar>> solve_levels(const basic_rate_table<Scalar>& rates, const Scalar& mu,
                                                              int n, const std::string& label = {},
                                                              int cap = default_partition_cap) {
  if (n < 1) throw precondition_error("solve needs n >= 1");
  if (n > cap) throw precondition_error("partition cap exceeded");
  if (mu < Scalar(0)) throw precondition_error("mutation rate must be >= 0");
  if (n >= 2 && rates.n_max < n) throw precondition_error("rate table too small for sample size");

  std::unordered_map<partition_vector, Scalar, partition_vector_hash> q;
  auto lookup = [&q](const partition_vector& a) -> Scalar {
    const auto it = q.find(a);
    return it == q.end() ? Scalar(0) : it->second;
  };

  std::vector<basic_sampling_distribution<Scalar>> levels;
  for (int m = 1; m <= n; ++m) {
    basic_sampling_distribution<Scalar> level;
    level.n = m;
    level.mu = mu;
    level.measure = label;
    const auto vectors = enumerate_partition_vectors(m, cap);
    if (m == 1) {
      q.emplace(vectors.front(), Scalar(1));
      level.entries.emplace_back(vectors.front(), Scalar(1));
      levels.push_back(std::move(level));
      continue;
    }
    const Scalar denom = mu * m + rates.total(m);
    if (!(denom > Scalar(0))) throw precondition_error("stuck chain");

    // merge weights C(m,k) λ_{m,k}
    std::vector<Scalar> merge(static_cast<std::size_t>(m) + 1, Scalar(0));
    {
      Scalar choose = 1;
      for (int k = 1; k <= m; ++k) {
        choose = choose * (m - k + 1) / k;
        if (k >= 2) merge[static_cast<std::size_t>(k)] = choose * rates.rate(m, k);
      }
    }

    for (const partition_vector& a : vectors) {
      detail::accumulator<Scalar> num;
      std::vector<int> counts = a.counts();
      if (a.count(1) >= 1) {
        counts[0] -= 1;
        num.add(mu * m * lookup(partition_vector(counts)));
        counts[0] += 1;
      }
      // A k-merger inside a family now of size s leaves it at size j = s-k+1.
      for (int s = 2; s <= a.max_size(); ++s) {
        if (a.count(s) == 0) continue;
        for (int k = 2; k <= s; ++k) {
          const Scalar& w = merge[static_cast<std::size_t>(k)];
          if (w == Scalar(0)) continue;
          const int j = s - k + 1;
          std::vector<int> next = counts;
          next[static_cast<std::size_t>(s) - 1] -= 1;
          next[static_cast<std::size_t>(j) - 1] += 1;
          const Scalar share = Scalar(j * (a.count(j) + 1)) / Scalar(m - k + 1);
          num.add(w * share * lookup(partition_vector(std::move(next))));
        }
      }
      const Scalar value = num.value() / denom;
      q.emplace(a, value);
      level.entries.emplace_back(a, value);
    }
    levels.push_back(std::move(level));
  }
  return levels;
}

template <class Scalar>
basic_sampling_distribution<Scalar> solve(const basic_rate_table<Scalar>& rates, const Scalar& mu, int n,
                                          const std::string& label = {}, int cap = default_partition_cap) {
  auto levels = solve_levels(rates, mu, n, label, cap);
  return std::move(levels.back());
}

inline sampling_distribution solve(const lambda_measure& measure, double mu, int n,
                                   int cap = default_partition_cap) {
  if (n > cap) throw precondition_error("partition cap exceeded");
  const rate_table rates = build_rate_table(measure, std::max(n, 2));
  return solve(rates, mu, n, measure.label(), cap);
}

/// Ewens sampling formula with parameter θ.
inline sampling_distribution ewens(double theta, int n, int cap = default_partition_cap) {
  if (!(theta > 0.0)) throw precondition_error("ewens needs theta > 0");
  sampling_distribution out;
  out.n = n;
  out.mu = theta / 2.0;
  out.measure = "ewens";
  double log_norm = std::lgamma(n + 1.0);
  for (int i = 0; i < n; ++i) log_norm -= std::log(theta + i);
  for (const partition_vector& a : enumerate_partition_vectors(n, cap)) {
    double lp = log_norm;
    for (int j = 1; j <= a.max_size(); ++j) {
      const int aj = a.count(j);
      lp += aj * std::log(theta / j) - std::lgamma(aj + 1.0);
    }
    out.entries.emplace_back(a, std::exp(lp));
  }
  return out;
}

}  // namespace lambdamut
