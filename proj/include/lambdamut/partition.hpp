#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lambdamut/errors.hpp"

namespace lambdamut {

inline constexpr int default_partition_cap = 40;

/// Family-size vector a = (a_1, a_2, ...): a_j families of size j. Stored
/// trimmed of trailing zeros so equal partitions compare equal.
class partition_vector {
 public:
  partition_vector() = default;

  explicit partition_vector(std::vector<int> counts) : counts_(std::move(counts)) {
    for (int c : counts_)
      if (c < 0) throw precondition_error("partition vector counts must be >= 0");
    trim();
  }

  static partition_vector from_sizes(const std::vector<int>& sizes) {
    std::vector<int> counts;
    for (int s : sizes) {
      if (s < 1) throw precondition_error("family sizes must be >= 1");
      if (static_cast<std::size_t>(s) > counts.size()) counts.resize(static_cast<std::size_t>(s), 0);
      ++counts[static_cast<std::size_t>(s) - 1];
    }
    return partition_vector(std::move(counts));
  }

  /// Parses "1^2 5^1"; a bare part "3" counts once.
  static partition_vector parse(std::string_view text) {
    std::vector<int> counts;
    std::istringstream in{std::string(text)};
    std::string tok;
    while (in >> tok) {
      const auto caret = tok.find('^');
      int size = 0;
      int mult = 1;
      try {
        size = std::stoi(tok.substr(0, caret));
        if (caret != std::string::npos) mult = std::stoi(tok.substr(caret + 1));
      } catch (const std::exception&) {
        throw precondition_error("malformed partition vector: " + std::string(text));
      }
      if (size < 1 || mult < 0) throw precondition_error("malformed partition vector: " + std::string(text));
      if (static_cast<std::size_t>(size) > counts.size()) counts.resize(static_cast<std::size_t>(size), 0);
      counts[static_cast<std::size_t>(size) - 1] += mult;
    }
    return partition_vector(std::move(counts));
  }

  /// a_j; zero beyond the stored range.
  int count(int j) const {
    return (j >= 1 && static_cast<std::size_t>(j) <= counts_.size()) ? counts_[static_cast<std::size_t>(j) - 1] : 0;
  }
  int max_size() const { return static_cast<int>(counts_.size()); }
  const std::vector<int>& counts() const { return counts_; }

  int n() const {
    int total = 0;
    for (std::size_t j = 0; j < counts_.size(); ++j) total += static_cast<int>(j + 1) * counts_[j];
    return total;
  }

  int families() const {
    int total = 0;
    for (int c : counts_) total += c;
    return total;
  }

  /// Family sizes, largest first.
  std::vector<int> sizes() const {
    std::vector<int> out;
    for (std::size_t j = counts_.size(); j-- > 0;)
      for (int r = 0; r < counts_[j]; ++r) out.push_back(static_cast<int>(j + 1));
    return out;
  }

  /// "1^2 5^1"; zero multiplicities omitted.
  std::string to_string() const {
    std::string out;
    for (std::size_t j = 0; j < counts_.size(); ++j) {
      if (counts_[j] == 0) continue;
      if (!out.empty()) out += ' ';
      out += std::to_string(j + 1) + '^' + std::to_string(counts_[j]);
    }
    return out;
  }

  friend bool operator==(const partition_vector&, const partition_vector&) = default;
  friend auto operator<=>(const partition_vector& a, const partition_vector& b) { return a.counts_ <=> b.counts_; }

 private:
  void trim() {
    while (!counts_.empty() && counts_.back() == 0) counts_.pop_back();
  }

  std::vector<int> counts_;
};

struct partition_vector_hash {
  std::size_t operator()(const partition_vector& a) const noexcept {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (int c : a.counts()) h = (h ^ static_cast<std::size_t>(c)) * 0x100000001b3ULL + 0x7f4a7c15;
    return h;
  }
};

/// All integer partitions of n as a-vectors, in reverse-lexicographic order of
/// the parts listed largest first: (n), (n-1,1), ..., (1,...,1).
inline std::vector<partition_vector> enumerate_partition_vectors(int n, int cap = default_partition_cap) {
  if (n < 1) throw precondition_error("partition enumeration needs n >= 1");
  if (n > cap) throw precondition_error("partition cap exceeded");
  std::vector<partition_vector> out;
  std::vector<int> parts{n};
  for (;;) {
    out.push_back(partition_vector::from_sizes(parts));
    // next partition in reverse-lexicographic order
    int ones = 0;
    while (!parts.empty() && parts.back() == 1) {
      parts.pop_back();
      ++ones;
    }
    if (parts.empty()) break;
    const int k = parts.back() - 1;
    parts.back() = k;
    int rest = ones + 1;
    while (rest > k) {
      parts.push_back(k);
      rest -= k;
    }
    if (rest > 0) parts.push_back(rest);
  }
  return out;
}

}  // namespace lambdamut
