#include <algorithm>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "lambdamut/paintbox.hpp"
#include "lambdamut/stats.hpp"
#include "test_support.hpp"

using namespace lambdamut;

namespace {

std::string key(const set_partition& p) {
  std::string s;
  for (const auto& b : p.blocks()) {
    s += '{';
    for (int e : b) s += std::to_string(e);
    s += '}';
  }
  return s;
}

}  // namespace

TEST(Paint, SingleFullAtom) {
  auto rng = make_stream(1, 1, 0);
  for (int r = 0; r < 100; ++r) EXPECT_EQ(paint_partition(mass_partition({1.0}), 5, rng).blocks().size(), 1u);
}

TEST(Paint, AllDust) {
  auto rng = make_stream(1, 2, 0);
  for (int r = 0; r < 100; ++r) EXPECT_EQ(paint_partition(mass_partition(), 5, rng), set_partition::singletons(5));
}

TEST(Paint, TwoHalves) {
  long together = 0;
  const long reps = 100000;
  for (long r = 0; r < reps; ++r) {
    auto rng = make_stream(1, 3, static_cast<std::uint64_t>(r));
    together += paint_partition(mass_partition({0.5, 0.5}), 2, rng).blocks().size() == 1;
  }
  expect_proportion(together, reps, 0.5);
}

TEST(Paint, IntervalLayout) {
  const mass_partition m({0.5, 0.25});
  const std::vector<double> u = {0.1, 0.6, 0.4, 0.9, 0.95, 0.7};
  EXPECT_EQ(paint_from_uniforms(m, u), set_partition({{1, 3}, {2, 6}, {4}, {5}}));
}

TEST(Paint, SamplingConsistency) {
  const mass_partition m({0.3, 0.2, 0.1});
  auto rng = make_stream(1, 4, 0);
  for (int r = 0; r < 200; ++r) {
    std::vector<double> u(7);
    for (double& v : u) v = uniform_open(rng);
    const auto full = paint_from_uniforms(m, u);
    const auto head = paint_from_uniforms(m, std::span<const double>(u.data(), 6));
    std::vector<std::vector<int>> restricted;
    for (auto b : full.blocks()) {
      b.erase(std::remove(b.begin(), b.end(), 7), b.end());
      if (!b.empty()) restricted.push_back(b);
    }
    EXPECT_EQ(set_partition(restricted), head);
  }
}

TEST(Paint, Exchangeability) {
  const mass_partition m({0.4, 0.3});
  const std::vector<int> sigma = {3, 1, 4, 2};  // i -> sigma[i-1]
  count_map<std::string> plain;
  count_map<std::string> permuted;
  for (long r = 0; r < 100000; ++r) {
    auto rng = make_stream(2, 1, static_cast<std::uint64_t>(r));
    ++plain[key(paint_partition(m, 4, rng))];
    auto rng2 = make_stream(2, 2, static_cast<std::uint64_t>(r));
    const auto drawn = paint_partition(m, 4, rng2);
    std::vector<std::vector<int>> blocks;
    for (auto b : drawn.blocks()) {
      for (int& e : b) e = sigma[static_cast<std::size_t>(e) - 1];
      blocks.push_back(b);
    }
    ++permuted[key(set_partition(blocks))];
  }
  EXPECT_GE(chi_square_two_sample(plain, permuted).p_value, 0.001);
}

TEST(SetPartition, Canonical) {
  const set_partition p({{4, 2}, {3, 1}});
  EXPECT_EQ(p.blocks(), (std::vector<std::vector<int>>{{1, 3}, {2, 4}}));
  EXPECT_EQ(p.shape(), partition_vector({0, 2}));
  EXPECT_EQ(p.labels(), (std::vector<int>{0, 1, 0, 1}));
  expect_error<precondition_error>([] { set_partition({{1, 2}, {2, 3}}); }, "cover [n]");
  expect_error<precondition_error>([] { set_partition({{1, 3}}); }, "cover [n]");
}

TEST(MassPartition, Validation) {
  expect_error<precondition_error>([] { mass_partition({0.2, 0.3}); }, "nonincreasing");
  expect_error<precondition_error>([] { mass_partition({0.7, 0.6}); }, "sum above 1");
  expect_error<precondition_error>([] { mass_partition({0.5, 0.0}); }, "positive");
  EXPECT_NEAR(mass_partition({0.5, 0.25}).dust(), 0.25, 1e-15);
}

TEST(Frequencies, DirectCount) {
  const auto f = empirical_block_frequencies(set_partition({{1, 2, 3}, {4}}));
  EXPECT_EQ(f.atoms(), (std::vector<double>{0.75, 0.25}));
}

TEST(Frequencies, LawOfLargeNumbers) {
  auto rng = make_stream(3, 1, 0);
  const auto f = empirical_block_frequencies(paint_partition(mass_partition({0.5, 0.5}), 10000, rng));
  ASSERT_EQ(f.atoms().size(), 2u);
  EXPECT_NEAR(f.atoms()[0], 0.5, 0.02);
  EXPECT_NEAR(f.atoms()[1], 0.5, 0.02);
}

TEST(Frequencies, Singletons) {
  const auto f = empirical_block_frequencies(set_partition::singletons(50));
  EXPECT_EQ(f.atoms().size(), 50u);
  EXPECT_DOUBLE_EQ(f.atoms().front(), 1.0 / 50.0);
}
