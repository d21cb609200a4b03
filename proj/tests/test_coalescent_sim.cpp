#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "lambdamut/coalescent_sim.hpp"
#include "lambdamut/exact_recursion.hpp"
#include "lambdamut/stats.hpp"
#include "test_support.hpp"

using namespace lambdamut;

TEST(Path, KingmanPairwise) {
  const auto rates = build_rate_table(lambda_measure::delta(0.0), 3);
  double first = 0.0;
  const long reps = 20000;
  for (long r = 0; r < reps; ++r) {
    auto rng = make_stream(4, 1, static_cast<std::uint64_t>(r));
    const auto path = simulate_coalescent_path(rates, 3, rng);
    ASSERT_EQ(path.size(), 3u);
    EXPECT_EQ(path[1].state.blocks().size(), 2u);
    first += path[1].time;
  }
  EXPECT_NEAR(first / reps, 1.0 / 3.0, 4 * (1.0 / 3.0) / std::sqrt(reps));
}

TEST(Path, StarSingleJump) {
  const auto rates = build_rate_table(lambda_measure::delta(1.0), 5);
  double t = 0.0;
  const long reps = 20000;
  for (long r = 0; r < reps; ++r) {
    auto rng = make_stream(4, 2, static_cast<std::uint64_t>(r));
    const auto path = simulate_coalescent_path(rates, 5, rng);
    ASSERT_EQ(path.size(), 2u);
    EXPECT_EQ(path[1].state.blocks().size(), 1u);
    t += path[1].time;
  }
  EXPECT_NEAR(t / reps, 1.0, 4.0 / std::sqrt(reps));
}

TEST(Path, LebesgueTripleFirst) {
  const auto rates = build_rate_table(lambda_measure::lebesgue(), 3);
  long triple = 0;
  const long reps = 100000;
  for (long r = 0; r < reps; ++r) {
    auto rng = make_stream(4, 3, static_cast<std::uint64_t>(r));
    triple += simulate_coalescent_path(rates, 3, rng)[1].state.blocks().size() == 1;
  }
  expect_proportion(triple, reps, 0.25);
}

TEST(Path, AbsorbingBeforeCoalescence) {
  const auto rates = build_rate_table(lambda_measure::zero(), 4);
  auto rng = make_stream(4, 4, 0);
  expect_error<precondition_error>([&] { simulate_coalescent_path(rates, 4, rng); }, "absorbing before coalescence");
}

TEST(Frozen, WorkedTrace) {
  frozen_state s(7);
  s.mutate(s.active_index_of(7));
  s.merge({s.active_index_of(2), s.active_index_of(5)});
  s.mutate(s.active_index_of(4));
  s.merge({s.active_index_of(1), s.active_index_of(3), s.active_index_of(6)});
  s.merge({s.active_index_of(1), s.active_index_of(2)});
  ASSERT_EQ(s.active().size(), 1u);
  s.mutate(0);
  EXPECT_EQ(s.family_partition(), set_partition({{1, 2, 3, 5, 6}, {4}, {7}}));
  EXPECT_EQ(s.families().to_string(), "1^2 5^1");
}

TEST(Frozen, FamilyPartitionNeedsAllFrozen) {
  frozen_state s(3);
  expect_error<precondition_error>([&] { s.family_partition(); }, "every block is frozen");
  expect_error<precondition_error>([&] { s.merge({0}); }, "two distinct");
}

TEST(Frozen, LargeMutationRateGivesSingletons) {
  const auto rates = build_rate_table(lambda_measure::lebesgue(), 6);
  long singletons = 0;
  for (long r = 0; r < 1000; ++r) {
    auto rng = make_stream(5, 1, static_cast<std::uint64_t>(r));
    singletons += simulate_frozen_coalescent(rates, 1e9, 6, rng) == partition_vector({6});
  }
  EXPECT_EQ(singletons, 1000);
}

TEST(Frozen, TwoSamples) {
  const auto rates = build_rate_table(lambda_measure::delta(0.0), 2);
  long same = 0;
  const long reps = 100000;
  for (long r = 0; r < reps; ++r) {
    auto rng = make_stream(5, 2, static_cast<std::uint64_t>(r));
    same += simulate_frozen_coalescent(rates, 0.5, 2, rng) == partition_vector({0, 1});
  }
  expect_proportion(same, reps, 0.5, 3.0);
}

TEST(Frozen, LastEventIsMutation) {
  const auto rates = build_rate_table(lambda_measure::poly3x2(), 8);
  for (long r = 0; r < 2000; ++r) {
    auto rng = make_stream(5, 3, static_cast<std::uint64_t>(r));
    const auto run = simulate_frozen_trace(rates, 0.7, 8, rng);
    ASSERT_FALSE(run.events.empty());
    EXPECT_EQ(run.events.back().kind, frozen_event_kind::mutation);
    EXPECT_EQ(run.partition.n(), 8);
  }
}

TEST(Frozen, MatchesExactRecursion) {
  struct fx {
    lambda_measure m;
    double mu;
    int n;
  };
  const std::vector<fx> fixtures = {{lambda_measure::delta(0.0), 0.5, 5},
                                    {lambda_measure::lebesgue(), 1.0, 5},
                                    {lambda_measure::delta(0.5, 0.25), 1.0, 5},
                                    {lambda_measure::poly3x2(), 1.0, 6}};
  std::uint64_t id = 0;
  for (const auto& f : fixtures) {
    const auto rates = build_rate_table(f.m, f.n);
    probability_map<std::string> exact;
    for (const auto& [a, p] : solve(f.m, f.mu, f.n).entries) exact[a.to_string()] = p;
    count_map<std::string> counts;
    for (long r = 0; r < 100000; ++r) {
      auto rng = make_stream(6, id, static_cast<std::uint64_t>(r));
      ++counts[simulate_frozen_coalescent(rates, f.mu, f.n, rng).to_string()];
    }
    ++id;
    EXPECT_LE(total_variation(exact, counts), 0.01) << f.m.label();
    EXPECT_GE(chi_square_gof(exact, counts).p_value, 0.001) << f.m.label();
  }
}
