#pragma once

// Goodness-of-fit statistics for comparing Monte Carlo counts with exact laws
// and with each other.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "lambdamut/errors.hpp"
#include "lambdamut/exact_recursion.hpp"
#include "lambdamut/numerics.hpp"

namespace lambdamut {

template <class Key>
using count_map = std::map<Key, long>;

template <class Key>
using probability_map = std::map<Key, double>;

inline probability_map<partition_vector> to_probability_map(const sampling_distribution& d) {
  probability_map<partition_vector> out;
  for (const auto& [a, p] : d.entries) out[a] = p;
  return out;
}

template <class Key>
long total_count(const count_map<Key>& counts) {
  long n = 0;
  for (const auto& [k, c] : counts) n += c;
  return n;
}

template <class Key>
void require_same_space(const probability_map<Key>& exact, const count_map<Key>& counts) {
  for (const auto& [k, c] : counts)
    if (c != 0 && !exact.contains(k)) throw precondition_error("mismatched outcome spaces");
}

/// (1/2) Σ |p_i - n_i/N|.
template <class Key>
double total_variation(const probability_map<Key>& exact, const count_map<Key>& counts) {
  require_same_space(exact, counts);
  const long n = total_count(counts);
  if (n < 1) throw precondition_error("total variation needs at least one observation");
  compensated_sum s;
  for (const auto& [k, p] : exact) {
    const auto it = counts.find(k);
    const double freq = it == counts.end() ? 0.0 : static_cast<double>(it->second) / n;
    s += std::abs(p - freq);
  }
  return std::clamp(0.5 * s.value(), 0.0, 1.0);
}

/// Between two empirical laws on the union of their supports.
template <class Key>
double total_variation(const count_map<Key>& a, const count_map<Key>& b) {
  const long na = total_count(a);
  const long nb = total_count(b);
  if (na < 1 || nb < 1) throw precondition_error("total variation needs at least one observation");
  std::map<Key, double> diff;
  for (const auto& [k, c] : a) diff[k] += static_cast<double>(c) / na;
  for (const auto& [k, c] : b) diff[k] -= static_cast<double>(c) / nb;
  compensated_sum s;
  for (const auto& [k, d] : diff) s += std::abs(d);
  return std::clamp(0.5 * s.value(), 0.0, 1.0);
}

struct chi_square_result {
  double statistic;
  int df;
  double p_value;
};

/// Q(df/2, stat/2).
inline double chi_square_survival(double statistic, int df) {
  if (df < 1) throw precondition_error("chi-square needs df >= 1");
  if (statistic <= 0.0) return 1.0;
  if (!std::isfinite(statistic)) return 0.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * statistic);
}

/// Pearson statistic; cells with expected count below `threshold` are pooled
/// into one tail cell.
template <class Key>
chi_square_result chi_square_gof(const probability_map<Key>& exact, const count_map<Key>& counts,
                                 double threshold = 5.0) {
  require_same_space(exact, counts);
  const long n = total_count(counts);
  if (n < 1) throw precondition_error("chi-square needs at least one observation");
  std::vector<std::pair<double, double>> cells;  // (expected, observed)
  double tail_expected = 0.0;
  double tail_observed = 0.0;
  for (const auto& [k, p] : exact) {
    const auto it = counts.find(k);
    const double obs = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    const double expected = p * n;
    if (expected < threshold) {
      tail_expected += expected;
      tail_observed += obs;
    } else {
      cells.emplace_back(expected, obs);
    }
  }
  if (tail_expected >= threshold) {
    cells.emplace_back(tail_expected, tail_observed);
  } else if (tail_observed > 0.0 || tail_expected > 0.0) {
    if (cells.empty()) throw precondition_error("fewer than 2 cells after pooling");
    auto smallest = std::min_element(cells.begin(), cells.end());
    smallest->first += tail_expected;
    smallest->second += tail_observed;
  }
  if (cells.size() < 2) throw precondition_error("fewer than 2 cells after pooling");
  compensated_sum stat;
  for (const auto& [e, o] : cells) {
    if (e <= 0.0) {
      if (o > 0.0) stat += std::numeric_limits<double>::infinity();
      continue;
    }
    stat += (o - e) * (o - e) / e;
  }
  const int df = static_cast<int>(cells.size()) - 1;
  return {stat.value(), df, chi_square_survival(stat.value(), df)};
}

/// Two-sample statistic for binned data with unequal totals; bins where
/// either sample expects fewer than `threshold` are pooled.
template <class Key>
chi_square_result chi_square_two_sample(const count_map<Key>& a, const count_map<Key>& b, double threshold = 5.0) {
  const double na = static_cast<double>(total_count(a));
  const double nb = static_cast<double>(total_count(b));
  if (na < 1 || nb < 1) throw precondition_error("chi-square needs at least one observation");
  std::map<Key, std::pair<double, double>> joint;
  for (const auto& [k, c] : a) joint[k].first += static_cast<double>(c);
  for (const auto& [k, c] : b) joint[k].second += static_cast<double>(c);
  std::vector<std::pair<double, double>> cells;
  std::pair<double, double> tail{0.0, 0.0};
  const double fa = na / (na + nb);
  const double fb = nb / (na + nb);
  for (const auto& [k, rs] : joint) {
    const double pooled = rs.first + rs.second;
    if (std::min(pooled * fa, pooled * fb) < threshold) {
      tail.first += rs.first;
      tail.second += rs.second;
    } else {
      cells.push_back(rs);
    }
  }
  const double tail_total = tail.first + tail.second;
  if (tail_total > 0.0) {
    if (std::min(tail_total * fa, tail_total * fb) >= threshold || cells.empty()) {
      cells.push_back(tail);
    } else {
      auto smallest = std::min_element(cells.begin(), cells.end(), [](const auto& x, const auto& y) {
        return x.first + x.second < y.first + y.second;
      });
      smallest->first += tail.first;
      smallest->second += tail.second;
    }
  }
  if (cells.size() < 2) throw precondition_error("fewer than 2 cells after pooling");
  const double ra = std::sqrt(nb / na);
  const double rb = std::sqrt(na / nb);
  compensated_sum stat;
  for (const auto& [r, s] : cells) {
    const double d = ra * r - rb * s;
    stat += d * d / (r + s);
  }
  const int df = static_cast<int>(cells.size()) - 1;
  return {stat.value(), df, chi_square_survival(stat.value(), df)};
}

/// Kolmogorov distribution tail Q(λ) = 2 Σ_{k>=1} (-1)^{k-1} e^{-2k²λ²}.
inline double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  compensated_sum s;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += sign * term;
    if (term < 1e-17) break;
    sign = -sign;
  }
  return std::clamp(2.0 * s.value(), 0.0, 1.0);
}

struct ks_result {
  double statistic;
  double p_value;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic distribution at
/// effective size n·m/(n+m).
inline ks_result ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw precondition_error("KS test needs two nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d)};
}

}  // namespace lambdamut
