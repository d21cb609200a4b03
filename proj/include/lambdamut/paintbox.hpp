#pragma once

// Paintbox constructions of exchangeable partitions of [n].

#include <algorithm>
#include <map>
#include <span>
#include <vector>

#include "lambdamut/errors.hpp"
#include "lambdamut/numerics.hpp"
#include "lambdamut/partition.hpp"
#include "lambdamut/random.hpp"

namespace lambdamut {

/// Finite nonincreasing sequence of positive atom sizes; the rest is dust.
class mass_partition {
 public:
  mass_partition() = default;
  explicit mass_partition(std::vector<double> atoms) : atoms_(std::move(atoms)) {
    compensated_sum total;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      if (!(atoms_[i] > 0.0)) throw precondition_error("mass partition atoms must be positive");
      if (i > 0 && atoms_[i] > atoms_[i - 1]) throw precondition_error("mass partition atoms must be nonincreasing");
      total += atoms_[i];
    }
    if (total.value() > 1.0 + 1e-12) throw precondition_error("mass partition atoms sum above 1");
    dust_ = std::max(0.0, 1.0 - total.value());
  }

  const std::vector<double>& atoms() const { return atoms_; }
  double dust() const { return dust_; }

 private:
  std::vector<double> atoms_;
  double dust_ = 1.0;
};

/// Partition of [n] = {1..n}; blocks sorted internally and ordered by least
/// element.
class set_partition {
 public:
  set_partition() = default;
  explicit set_partition(std::vector<std::vector<int>> blocks) : blocks_(std::move(blocks)) { canonicalize(); }

  static set_partition singletons(int n) {
    std::vector<std::vector<int>> b;
    for (int i = 1; i <= n; ++i) b.push_back({i});
    return set_partition(std::move(b));
  }

  const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  int n() const {
    int total = 0;
    for (const auto& b : blocks_) total += static_cast<int>(b.size());
    return total;
  }

  std::vector<int> block_sizes() const {
    std::vector<int> s;
    for (const auto& b : blocks_) s.push_back(static_cast<int>(b.size()));
    return s;
  }

  partition_vector shape() const { return partition_vector::from_sizes(block_sizes()); }

  /// Block label per element: labels()[i-1] = index of the block holding i.
  std::vector<int> labels() const {
    std::vector<int> lab(static_cast<std::size_t>(n()), -1);
    for (std::size_t b = 0; b < blocks_.size(); ++b)
      for (int e : blocks_[b]) lab[static_cast<std::size_t>(e) - 1] = static_cast<int>(b);
    return lab;
  }

  friend bool operator==(const set_partition&, const set_partition&) = default;
  friend auto operator<=>(const set_partition& a, const set_partition& b) { return a.blocks_ <=> b.blocks_; }

 private:
  void canonicalize() {
    std::vector<int> seen;
    for (auto& b : blocks_) {
      if (b.empty()) throw precondition_error("set partition blocks must be nonempty");
      std::sort(b.begin(), b.end());
      seen.insert(seen.end(), b.begin(), b.end());
    }
    std::sort(blocks_.begin(), blocks_.end(), [](const auto& x, const auto& y) { return x.front() < y.front(); });
    std::sort(seen.begin(), seen.end());
    for (std::size_t i = 0; i < seen.size(); ++i)
      if (seen[i] != static_cast<int>(i) + 1) throw precondition_error("set partition must cover [n] disjointly");
  }

  std::vector<std::vector<int>> blocks_;
};

/// Paints element i with uniforms[i-1]. Atoms occupy [0, b1), [b1, b1+b2), ...
/// left to right; the dust interval comes last and yields singletons.
inline set_partition paint_from_uniforms(const mass_partition& m, std::span<const double> uniforms) {
  std::vector<double> edges;
  double acc = 0.0;
  for (double b : m.atoms()) edges.push_back(acc += b);
  std::map<std::size_t, std::vector<int>> by_atom;
  std::vector<std::vector<int>> blocks;
  for (std::size_t i = 0; i < uniforms.size(); ++i) {
    const double v = uniforms[i];
    const auto atom = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
    if (atom < edges.size())
      by_atom[atom].push_back(static_cast<int>(i) + 1);
    else
      blocks.push_back({static_cast<int>(i) + 1});
  }
  for (auto& [atom, members] : by_atom) blocks.push_back(std::move(members));
  return set_partition(std::move(blocks));
}

template <class URBG>
set_partition paint_partition(const mass_partition& m, int n, URBG& rng) {
  if (n < 1) throw precondition_error("paint_partition needs n >= 1");
  std::vector<double> u(static_cast<std::size_t>(n));
  for (double& v : u) v = uniform_open(rng);
  return paint_from_uniforms(m, u);
}

/// Block sizes divided by n, largest first.
inline mass_partition empirical_block_frequencies(const set_partition& p) {
  std::vector<int> sizes = p.block_sizes();
  std::sort(sizes.rbegin(), sizes.rend());
  const double n = p.n();
  std::vector<double> freq;
  for (int s : sizes) freq.push_back(s / n);
  return mass_partition(std::move(freq));
}

}  // namespace lambdamut
