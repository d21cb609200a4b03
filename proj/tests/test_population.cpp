#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "lambdamut/coalescent_sim.hpp"
#include "lambdamut/exact_recursion.hpp"
#include "lambdamut/population.hpp"
#include "lambdamut/stats.hpp"
#include "test_support.hpp"

using namespace lambdamut;

namespace {

// Five litters of size 1/2 at ages 1..5 with auxiliary uniforms .3 .7 .95 .7 .5.
litter_history worked_history() {
  std::vector<litter_point> pts = {
      {-1.0, 0.5, 0.3}, {-2.0, 0.5, 0.7}, {-3.0, 0.5, 0.95}, {-4.0, 0.5, 0.7}, {-5.0, 0.5, 0.5}};
  return litter_history(subordinator_window(1.0, pts, 20.0));
}

probability_map<std::string> exact_law(const lambda_measure& m, double mu, int n) {
  probability_map<std::string> out;
  for (const auto& [a, p] : solve(m, mu, n).entries) out[a.to_string()] = p;
  return out;
}

}  // namespace

TEST(LitterHistory, SizesThroughTime) {
  const auto h = worked_history();
  EXPECT_NEAR(h.litter_size_at(0, 0.0), 0.5 * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(h.litter_size_at(2, 0.0), 0.125 * std::exp(-3.0), 1e-15);
  EXPECT_NEAR(h.litter_size_at(2, -1.5), 0.25 * std::exp(-1.5), 1e-15);
  EXPECT_NEAR(h.litter_size_at(2, -2.0), 0.25 * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(h.litter_size_at(2, -3.0), 0.5, 1e-15);
  expect_error<precondition_error>([&] { h.litter_size_at(2, -4.0); }, "unborn litter");
  expect_error<precondition_error>([&] { h.litter_size_at(7, 0.0); }, "no such litter");
}

TEST(LitterHistory, SizesTileTheDistributionFunction) {
  const auto md = make_population_model(lambda_measure::poly3x2(), 1.3, 5);
  for (long r = 0; r < 200; ++r) {
    auto rng = make_stream(8, 1, static_cast<std::uint64_t>(r));
    const auto h = litter_history::sample(md, rng);
    const auto& w = h.window();
    compensated_sum mass;
    for (std::size_t i = 0; i < h.size(); ++i) {
      EXPECT_NEAR(h.litter_size_at(i, 0.0), w.cdf_at(i) - w.cdf_before(i), 1e-14);
      mass += h.litter_size_at(i, 0.0);
      if (i > 0) {
        EXPECT_LE(w.points()[i - 1].age(), w.points()[i].age());
      }
    }
    mass += w.drift_mass();
    EXPECT_NEAR(mass.value(), w.cdf(w.window()), 1e-13);
  }
}

TEST(LitterHistory, WorkedGenealogy) {
  auto h = worked_history();
  auto rng = make_stream(8, 2, 0);
  EXPECT_EQ(h.parent_of(1), -2);
  EXPECT_FALSE(h.resolve_parent(0, rng).has_value());
  EXPECT_EQ(h.resolve_parent(1, rng), std::optional<std::size_t>(2));
  EXPECT_EQ(h.resolve_parent(2, rng), std::optional<std::size_t>(4));
  EXPECT_EQ(h.resolve_parent(3, rng), std::optional<std::size_t>(4));
  EXPECT_FALSE(h.resolve_parent(4, rng).has_value());
  EXPECT_EQ(h.parent_of(4), -1);

  const auto r = h.resolve_root(1, rng);
  EXPECT_EQ(r.root, 4u);
  EXPECT_EQ(r.height, 2);
  EXPECT_DOUBLE_EQ(r.genotype, 0.5);
  EXPECT_EQ(h.resolve_root(3, rng).height, 1);
  EXPECT_EQ(h.resolve_root(0, rng).root, 0u);
  EXPECT_EQ(h.resolve_root(0, rng).height, 0);
}

TEST(LitterHistory, WorkedPopulationState) {
  auto h = worked_history();
  auto rng = make_stream(8, 3, 0);
  const auto rho = h.rho_state(rng);
  ASSERT_EQ(rho.atoms.size(), 2u);
  EXPECT_DOUBLE_EQ(rho.atoms[0].genotype, 0.3);
  EXPECT_NEAR(rho.atoms[0].size, 0.5 * std::exp(-1.0), 1e-15);
  EXPECT_DOUBLE_EQ(rho.atoms[1].genotype, 0.5);
  double pooled = 0.0;
  for (std::size_t i = 1; i < 5; ++i) pooled += h.litter_size_at(i, 0.0);
  EXPECT_NEAR(rho.atoms[1].size, pooled, 1e-15);
  EXPECT_NEAR(rho.total(), 1.0, 1e-15);
  EXPECT_NO_THROW(validate_population_measure(rho));

  litter_history empty(subordinator_window(1.0, {}, 5.0));
  const auto none = empty.rho_state(rng);
  EXPECT_TRUE(none.atoms.empty());
  EXPECT_EQ(none.diffuse, 1.0);
}

TEST(LitterHistory, RootProbability) {
  const auto m = lambda_measure::poly3x2();
  const auto md = make_population_model(m, 1.0, 1);
  long roots = 0;
  long trials = 0;
  for (long r = 0; r < 60000; ++r) {
    auto rng = make_stream(8, 4, static_cast<std::uint64_t>(r));
    auto h = litter_history::sample(md, rng);
    if (h.size() == 0) continue;
    ++trials;
    roots += !h.resolve_parent(0, rng).has_value();
  }
  expect_proportion(roots, trials, make_first_part_law(m, 1.0, 1).q1prime);
}

TEST(LitterHistory, FreshLitterHeightsAreGeometric) {
  const auto m = lambda_measure::poly3x2();
  const double p = make_first_part_law(m, 1.0, 1).q1prime;
  const auto md = make_population_model(m, 1.0, 1);
  count_map<std::string> counts;
  probability_map<std::string> law;
  const int top = 8;
  for (int k = 0; k < top; ++k) law[std::to_string(k)] = p * std::pow(1.0 - p, k);
  law["tail"] = std::pow(1.0 - p, top);
  for (long r = 0; r < 50000; ++r) {
    auto rng = make_stream(8, 5, static_cast<std::uint64_t>(r));
    auto h = litter_history::sample(md, rng);
    const int height = h.fresh_litter_height(uniform_open(rng), rng);
    ++counts[height >= top ? "tail" : std::to_string(height)];
  }
  EXPECT_GE(chi_square_gof(law, counts).p_value, 0.001);
}

TEST(SetSampler, LargeMutationRateGivesSingletons) {
  auto rng = make_stream(8, 6, 0);
  for (int r = 0; r < 200; ++r)
    EXPECT_EQ(sample_family_partition_set(lambda_measure::poly3x2(), 1e6, 5, rng), partition_vector({5}));
}

TEST(SetSampler, MatchesExactLaw) {
  for (const auto& [m, n] : std::vector<std::pair<lambda_measure, int>>{{lambda_measure::poly3x2(), 2},
                                                                        {lambda_measure::poly3x2(), 5},
                                                                        {lambda_measure::delta(0.5, 0.25), 4}}) {
    const auto md = make_population_model(m, 1.0, n);
    count_map<std::string> counts;
    for (long r = 0; r < 100000; ++r) {
      auto rng = make_stream(8, 7 + static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(r));
      ++counts[sample_family_partition_set(md, n, rng).to_string()];
    }
    const auto exact = exact_law(m, 1.0, n);
    EXPECT_LE(total_variation(exact, counts), 0.01) << m.label() << " n=" << n;
    EXPECT_GE(chi_square_gof(exact, counts).p_value, 0.001) << m.label() << " n=" << n;
  }
}

TEST(ChainSampler, MatchesExactLaw) {
  auto rng = make_stream(8, 20, 0);
  const first_part_cache one(lambda_measure::poly3x2(), 1.0, 1);
  EXPECT_EQ(sample_family_partition_chain(one, 1, rng), partition_vector({1}));
  for (const auto& m : {lambda_measure::poly3x2(), lambda_measure::delta(0.5, 0.25)}) {
    const first_part_cache cache(m, 1.0, 5);
    count_map<std::string> counts;
    for (long r = 0; r < 100000; ++r) {
      auto s = make_stream(8, 21, static_cast<std::uint64_t>(r));
      ++counts[sample_family_partition_chain(cache, 5, s).to_string()];
    }
    const auto exact = exact_law(m, 1.0, 5);
    EXPECT_LE(total_variation(exact, counts), 0.01) << m.label();
    EXPECT_GE(chi_square_gof(exact, counts).p_value, 0.001) << m.label();
  }
}

TEST(ChainSampler, MatchesFrozenCoalescent) {
  const auto measure = lambda_measure::poly3x2();
  const first_part_cache cache(measure, 1.0, 5);
  const auto rates = build_rate_table(measure, 5);
  count_map<std::string> chain;
  count_map<std::string> frozen;
  for (long r = 0; r < 100000; ++r) {
    auto a = make_stream(8, 23, static_cast<std::uint64_t>(r));
    ++chain[sample_family_partition_chain(cache, 5, a).to_string()];
    auto b = make_stream(8, 24, static_cast<std::uint64_t>(r));
    ++frozen[simulate_frozen_coalescent(rates, 1.0, 5, b).to_string()];
  }
  EXPECT_GE(chi_square_two_sample(chain, frozen).p_value, 0.001);
}

TEST(ChainSampler, NeedsMutation) {
  auto rng = make_stream(8, 22, 0);
  const first_part_cache cache(lambda_measure::poly3x2(), 0.0, 3);
  expect_error<precondition_error>([&] { sample_family_partition_chain(cache, 3, rng); }, "degenerate measure");
}

TEST(Population, Preconditions) {
  expect_error<precondition_error>([] { make_population_model(lambda_measure::delta(0.0), 1.0, 3); }, "atoms at 0 or 1");
  expect_error<precondition_error>([] { make_population_model(lambda_measure::delta(1.0), 1.0, 3); }, "atoms at 0 or 1");
  expect_error<precondition_error>([] { make_population_model(lambda_measure::lebesgue(), 1.0, 3); }, "dust condition violated");
  expect_error<precondition_error>([] { make_population_model(lambda_measure::poly3x2(), 0.0, 3); }, "mu > 0");
  expect_error<precondition_error>([] { validate_population_measure({{{0.5, 0.7}}, 0.2}); }, "mass 1");
  expect_error<precondition_error>([] { validate_population_measure({{{0.5, 0.2}, {0.3, 0.2}}, 0.6}); }, "sorted");
}

TEST(Forward, ErosionWithoutLitters) {
  auto rng = make_stream(8, 30, 0);
  const auto path = forward_simulate(lambda_measure::zero(), 1.0, 2.0, population_measure{{{0.5, 0.4}}, 0.6}, rng);
  ASSERT_EQ(path.size(), 2u);
  EXPECT_DOUBLE_EQ(path.back().time, 2.0);
  ASSERT_EQ(path.back().state.atoms.size(), 1u);
  EXPECT_NEAR(path.back().state.atoms[0].size, 0.4 * std::exp(-2.0), 1e-15);
  EXPECT_NEAR(path.back().state.diffuse, 1.0 - 0.4 * std::exp(-2.0), 1e-15);
}

TEST(Forward, FirstJumpWithoutMutation) {
  auto rng = make_stream(8, 31, 0);
  const auto path = forward_simulate(lambda_measure::poly3x2(), 0.0, 50.0, population_measure{}, rng);
  ASSERT_GE(path.size(), 3u);
  const auto& first = path[1].state;
  ASSERT_EQ(first.atoms.size(), 1u);
  EXPECT_GT(first.atoms[0].size, 0.0);
  EXPECT_LT(first.atoms[0].size, 1.0);
  EXPECT_NEAR(first.diffuse, 1.0 - first.atoms[0].size, 1e-15);
}

TEST(Forward, InfiniteIntensityRejected) {
  auto rng = make_stream(8, 32, 0);
  expect_error<precondition_error>(
      [&] { forward_simulate(lambda_measure::beta(2.0, 2.0, 1.0), 1.0, 1.0, population_measure{}, rng); },
      "infinite intensity");
}

TEST(Forward, MassConservation) {
  for (long r = 0; r < 50; ++r) {
    auto rng = make_stream(8, 33, static_cast<std::uint64_t>(r));
    double prev = 0.0;
    forward_simulate(lambda_measure::delta(0.5, 0.25).scaled(8.0), 0.5, 10.0, population_measure{}, rng,
                     [&](double t, const population_measure& p) {
                       EXPECT_GE(t, prev);
                       prev = t;
                       EXPECT_NEAR(p.total(), 1.0, 1e-12);
                       EXPECT_NO_THROW(validate_population_measure(p));
                     });
  }
}

TEST(CutoffBound, DeviationBound) {
  const auto md = make_population_model(lambda_measure::poly3x2(), 1.0, 5);
  std::vector<double> ages;
  for (int i = 0; i <= 400; ++i) ages.push_back(0.05 * i);
  for (long r = 0; r < 300; ++r) {
    auto rng = make_stream(8, 34, static_cast<std::uint64_t>(r));
    auto h = litter_history::sample(md, rng);
    const auto early = cutoff_bound_check(h, 25.0, ages, rng);
    EXPECT_EQ(early.max_deviation, 0.0);
    const auto late = cutoff_bound_check(h, 5.0, ages, rng);
    EXPECT_TRUE(late.holds);
    EXPECT_NEAR(late.bound, std::exp(-5.0), 1e-15);
  }
  subordinator_window still(0.0, {}, 1.0);
  auto rng = make_stream(8, 35, 0);
  expect_error<precondition_error>([&] { cutoff_bound_check(still, 1.0, ages, rng); }, "mu > 0");
}
