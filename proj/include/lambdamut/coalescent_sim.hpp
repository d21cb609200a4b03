#pragma once

// Λ-coalescent on [n]: the continuous-time block process, and the embedded
// jump chain with mutation-freezing that yields the family partition.

#include <algorithm>
#include <span>
#include <vector>

#include "lambdamut/errors.hpp"
#include "lambdamut/lambda_measure.hpp"
#include "lambdamut/paintbox.hpp"
#include "lambdamut/partition.hpp"
#include "lambdamut/random.hpp"

namespace lambdamut {

struct path_point {
  double time;
  set_partition state;
};

namespace detail {

/// Merger size k with probability ∝ C(b,k) λ_{b,k}.
template <class URBG>
int draw_merger_size(const rate_table& rates, int b, URBG& rng) {
  const double target = uniform_open(rng) * rates.total(b);
  double acc = 0.0;
  int last = 2;
  for (int k = 2; k <= b; ++k) {
    const double w = binomial(b, k) * rates.rate(b, k);
    if (w <= 0.0) continue;
    last = k;
    acc += w;
    if (target < acc) return k;
  }
  return last;
}

/// Uniform k-subset of {0..b-1} by partial Fisher-Yates; returned sorted.
template <class URBG>
std::vector<std::size_t> draw_subset(std::size_t b, std::size_t k, URBG& rng) {
  std::vector<std::size_t> idx(b);
  for (std::size_t i = 0; i < b; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + uniform_index(rng, b - i)]);
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Replaces the blocks at `chosen` (sorted) by their union, appended last.
inline void merge_blocks(std::vector<std::vector<int>>& blocks, std::span<const std::size_t> chosen) {
  std::vector<int> merged;
  for (std::size_t c : chosen) merged.insert(merged.end(), blocks[c].begin(), blocks[c].end());
  for (std::size_t r = chosen.size(); r-- > 0;) blocks.erase(blocks.begin() + static_cast<std::ptrdiff_t>(chosen[r]));
  std::sort(merged.begin(), merged.end());
  blocks.push_back(std::move(merged));
}

}  // namespace detail

template <class URBG>
std::vector<path_point> simulate_coalescent_path(const rate_table& rates, int n, URBG& rng) {
  if (n < 2 || n > rates.n_max) throw precondition_error("coalescent path needs 2 <= n <= nMax");
  std::vector<std::vector<int>> blocks;
  for (int i = 1; i <= n; ++i) blocks.push_back({i});
  std::vector<path_point> path{{0.0, set_partition(blocks)}};
  double t = 0.0;
  while (blocks.size() > 1) {
    const int b = static_cast<int>(blocks.size());
    const double total = rates.total(b);
    if (!(total > 0.0)) throw precondition_error("absorbing before coalescence");
    t += exponential(rng, total);
    const int k = detail::draw_merger_size(rates, b, rng);
    const auto chosen = detail::draw_subset(blocks.size(), static_cast<std::size_t>(k), rng);
    detail::merge_blocks(blocks, chosen);
    path.push_back({t, set_partition(blocks)});
  }
  return path;
}

/// Active and frozen blocks of the freezing coalescent.
class frozen_state {
 public:
  explicit frozen_state(int n) {
    for (int i = 1; i <= n; ++i) active_.push_back({i});
  }

  const std::vector<std::vector<int>>& active() const { return active_; }
  const std::vector<std::vector<int>>& frozen() const { return frozen_; }
  bool done() const { return active_.empty(); }

  /// A mutation on the lineage of active block i freezes it.
  void mutate(std::size_t i) {
    frozen_.push_back(std::move(active_.at(i)));
    active_.erase(active_.begin() + static_cast<std::ptrdiff_t>(i));
  }

  void merge(std::vector<std::size_t> chosen) {
    std::sort(chosen.begin(), chosen.end());
    if (chosen.size() < 2 || chosen.back() >= active_.size() ||
        std::adjacent_find(chosen.begin(), chosen.end()) != chosen.end())
      throw precondition_error("merge needs at least two distinct active blocks");
    detail::merge_blocks(active_, chosen);
  }

  /// Finds the active block holding element e.
  std::size_t active_index_of(int e) const {
    for (std::size_t i = 0; i < active_.size(); ++i)
      if (std::find(active_[i].begin(), active_[i].end(), e) != active_[i].end()) return i;
    throw precondition_error("element is not in an active block");
  }

  set_partition family_partition() const {
    if (!done()) throw precondition_error("family partition is read off only when every block is frozen");
    return set_partition(frozen_);
  }

  partition_vector families() const { return family_partition().shape(); }

 private:
  std::vector<std::vector<int>> active_;
  std::vector<std::vector<int>> frozen_;
};

enum class frozen_event_kind { mutation, merger };

struct frozen_event {
  frozen_event_kind kind;
  int size;  // k for a k-merger, 1 for a mutation
};

struct frozen_run {
  set_partition partition;
  std::vector<frozen_event> events;
};

/// Runs the embedded jump chain: with b active blocks a mutation happens with
/// probability μb/(μb + Σ_k C(b,k)λ_{b,k}), otherwise a k-merger with
/// probability C(b,k)λ_{b,k}/(...). Holding times play no role.
template <class URBG>
frozen_run simulate_frozen_trace(const rate_table& rates, double mu, int n, URBG& rng) {
  if (n < 1 || (n >= 2 && n > rates.n_max)) throw precondition_error("frozen coalescent needs 1 <= n <= nMax");
  if (mu < 0.0) throw precondition_error("mutation rate must be >= 0");
  frozen_state state(n);
  frozen_run run;
  while (!state.done()) {
    const int b = static_cast<int>(state.active().size());
    const double merge_total = b >= 2 ? rates.total(b) : 0.0;
    const double total = mu * b + merge_total;
    if (!(total > 0.0)) throw precondition_error("absorbing before coalescence");
    if (uniform_open(rng) * total < mu * b) {
      state.mutate(uniform_index(rng, static_cast<std::size_t>(b)));
      run.events.push_back({frozen_event_kind::mutation, 1});
    } else {
      const int k = detail::draw_merger_size(rates, b, rng);
      state.merge(detail::draw_subset(static_cast<std::size_t>(b), static_cast<std::size_t>(k), rng));
      run.events.push_back({frozen_event_kind::merger, k});
    }
  }
  run.partition = state.family_partition();
  return run;
}

template <class URBG>
partition_vector simulate_frozen_coalescent(const rate_table& rates, double mu, int n, URBG& rng) {
  return simulate_frozen_trace(rates, mu, n, rng).partition.shape();
}

}  // namespace lambdamut
