#pragma once

// Cross-validation matrix: every sampler on every fixture against the exact
// recursion, the first-part law, or an independent sampler.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lambdamut/coalescent_sim.hpp"
#include "lambdamut/errors.hpp"
#include "lambdamut/exact_recursion.hpp"
#include "lambdamut/measure_spec.hpp"
#include "lambdamut/population.hpp"
#include "lambdamut/random.hpp"
#include "lambdamut/stats.hpp"
#include "lambdamut/subordinator.hpp"

namespace lambdamut {

struct fixture {
  std::string id;
  std::string measure;
  double mu = 1.0;
  int n = 5;
  std::optional<double> exact_mu;  // μ fed to the exact side, when it differs
  std::vector<std::string> checks;
};

struct validation_plan {
  std::vector<fixture> fixtures;
  double tvd_max = 0.01;
  double p_min = 0.001;
  long cutoff_paths = 1000;
  long stationarity_samples = 10000;
  double stationarity_horizon = 30.0;
};

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names = {"ewens",      "frozen",  "chain",  "set",
                                                 "first-part", "regeneration", "window-vs-sequential",
                                                 "deletion",   "heights", "cutoff", "stationarity"};
  return names;
}

struct line_item {
  std::string fixture;
  std::string measure;
  std::string check;
  double mu = 0.0;
  double exact_mu = 0.0;
  int n = 0;
  long reps = 0;
  std::uint64_t seed = 0;
  count_map<std::string> counts;
  probability_map<std::string> exact;
  count_map<std::string> reference;
  std::optional<double> tvd;
  std::optional<chi_square_result> chi;
  std::optional<ks_result> ks;
  std::optional<double> max_deviation;
  std::optional<double> bound;
  long violations = 0;
  double truncation_bias = 0.0;
  bool passed = false;
  std::string error;
};

using validation_report = std::vector<line_item>;

inline bool all_passed(const validation_report& r) {
  return std::all_of(r.begin(), r.end(), [](const line_item& l) { return l.passed; });
}

namespace detail {

/// Runs f(r) for r in [0, reps) on `workers` threads; results by replicate
/// index, so the outcome does not depend on scheduling.
template <class Out, class F>
std::vector<Out> run_replicates(long reps, int workers, F&& f) {
  std::vector<Out> out(static_cast<std::size_t>(std::max(0L, reps)));
  workers = std::clamp(workers, 1, static_cast<int>(std::max(1L, reps)));
  if (workers == 1) {
    for (long r = 0; r < reps; ++r) out[static_cast<std::size_t>(r)] = f(r);
    return out;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  std::vector<long> failed_at(static_cast<std::size_t>(workers), reps);
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (long r = w; r < reps; r += workers) {
        try {
          out[static_cast<std::size_t>(r)] = f(r);
        } catch (...) {
          errors[static_cast<std::size_t>(w)] = std::current_exception();
          failed_at[static_cast<std::size_t>(w)] = r;
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  const auto first = std::min_element(failed_at.begin(), failed_at.end()) - failed_at.begin();
  if (errors[static_cast<std::size_t>(first)]) std::rethrow_exception(errors[static_cast<std::size_t>(first)]);
  return out;
}

inline count_map<std::string> tally(const std::vector<std::string>& outcomes) {
  count_map<std::string> c;
  for (const auto& o : outcomes)
    if (!o.empty()) ++c[o];
  return c;
}

inline probability_map<std::string> keyed(const sampling_distribution& d) {
  probability_map<std::string> out;
  for (const auto& [a, p] : d.entries) out[a.to_string()] = p;
  return out;
}

class check_runner {
 public:
  check_runner(const validation_plan& plan, const fixture& fx, long reps, std::uint64_t seed, int workers)
      : plan_(plan), fx_(fx), reps_(reps), seed_(seed), workers_(workers), measure_(parse_measure(fx.measure)) {}

  validation_report run(const std::string& check) {
    validation_report out;
    line_item base = blank(check);
    try {
      if (check == "ewens") out.push_back(ewens_check());
      else if (check == "frozen") out.push_back(exact_check(check, [this](std::uint64_t stream, long r) {
                 auto rng = make_stream(seed_, stream, static_cast<std::uint64_t>(r));
                 return simulate_frozen_coalescent(rates(), fx_.mu, fx_.n, rng).to_string();
               }));
      else if (check == "chain") out.push_back(exact_check(check, [this](std::uint64_t stream, long r) {
                 auto rng = make_stream(seed_, stream, static_cast<std::uint64_t>(r));
                 return sample_family_partition_chain(laws(), fx_.n, rng).to_string();
               }));
      else if (check == "set") out.push_back(set_check());
      else if (check == "first-part") out.push_back(first_part_check());
      else if (check == "regeneration") {
        for (int m : {1, 2})
          if (fx_.n - m >= 2) out.push_back(regeneration_check(m));
      } else if (check == "window-vs-sequential") out.push_back(window_vs_sequential_check());
      else if (check == "deletion") out.push_back(deletion_check());
      else if (check == "heights") out.push_back(heights_check());
      else if (check == "cutoff") {
        for (double t : {1.0, 5.0}) out.push_back(cutoff_check(t));
      } else if (check == "stationarity") {
        auto items = stationarity_check();
        out.insert(out.end(), items.begin(), items.end());
      } else {
        throw precondition_error("unknown check: " + check);
      }
    } catch (const std::exception& e) {
      base.error = e.what();
      base.passed = false;
      out.push_back(base);
    }
    return out;
  }

 private:
  line_item blank(const std::string& check) const {
    line_item l;
    l.fixture = fx_.id;
    l.measure = fx_.measure;
    l.check = check;
    l.mu = fx_.mu;
    l.exact_mu = fx_.exact_mu.value_or(fx_.mu);
    l.n = fx_.n;
    l.reps = reps_;
    l.seed = seed_;
    return l;
  }

  std::uint64_t stream_id(const std::string& tag) const { return hash_id(fx_.id + "/" + tag); }

  const rate_table& rates() {
    if (!rates_) rates_ = std::make_unique<rate_table>(build_rate_table(measure_, std::max(fx_.n, 2)));
    return *rates_;
  }

  const first_part_cache& laws() {
    if (!laws_) laws_ = std::make_unique<first_part_cache>(measure_, fx_.mu, fx_.n);
    return *laws_;
  }

  std::shared_ptr<const subordinator_model> composition_model(int n) const {
    return std::make_shared<const subordinator_model>(measure_, fx_.mu, default_window(fx_.mu, n));
  }

  void judge_exact(line_item& l) const {
    l.tvd = total_variation(l.exact, l.counts);
    l.chi = chi_square_gof(l.exact, l.counts);
    l.passed = *l.tvd <= plan_.tvd_max && l.chi->p_value >= plan_.p_min;
  }

  void judge_two_sample(line_item& l) const {
    l.tvd = total_variation(l.counts, l.reference);
    l.chi = chi_square_two_sample(l.counts, l.reference);
    l.passed = l.chi->p_value >= plan_.p_min;
  }

  line_item ewens_check() const {
    line_item l = blank("ewens");
    l.reps = 0;
    if (!(fx_.mu > 0.0)) throw precondition_error("ewens comparison needs mu > 0");
    const auto exact = solve(measure_, l.exact_mu, fx_.n);
    const auto reference = ewens(2.0 * fx_.mu, fx_.n);
    double worst = 0.0;
    for (const auto& [a, p] : exact.entries) {
      worst = std::max(worst, std::abs(p - reference.probability(a)));
      l.exact[a.to_string()] = reference.probability(a);
    }
    l.max_deviation = worst;
    l.bound = 1e-10;
    l.passed = worst <= 1e-10;
    return l;
  }

  template <class Sampler>
  line_item exact_check(const std::string& check, Sampler&& sample) {
    line_item l = blank(check);
    l.exact = keyed(solve(measure_, l.exact_mu, fx_.n));
    if (check == "frozen") rates();
    if (check == "chain") laws();
    const auto stream = stream_id(check);
    l.counts = tally(run_replicates<std::string>(reps_, workers_, [&](long r) { return sample(stream, r); }));
    judge_exact(l);
    return l;
  }

  line_item set_check() {
    line_item l = blank("set");
    l.exact = keyed(solve(measure_, l.exact_mu, fx_.n));
    const auto model = make_population_model(measure_, fx_.mu, fx_.n);
    const auto stream = stream_id("set");
    struct outcome {
      std::string key;
      double bias = 0.0;
    };
    const auto results = run_replicates<outcome>(reps_, workers_, [&](long r) {
      auto rng = make_stream(seed_, stream, static_cast<std::uint64_t>(r));
      litter_history h = litter_history::sample(model, rng);
      const std::string key = h.sample_families(fx_.n, rng).to_string();
      return outcome{key, h.truncation_bias()};
    });
    for (const auto& o : results) {
      ++l.counts[o.key];
      l.truncation_bias = std::max(l.truncation_bias, o.bias);
    }
    judge_exact(l);
    return l;
  }

  line_item first_part_check() {
    line_item l = blank("first-part");
    const first_part_law law = make_first_part_law(measure_, fx_.mu, fx_.n);
    l.exact["1'"] = law.q1prime;
    l.exact["1''"] = law.q1doubleprime;
    for (int m = 2; m <= fx_.n; ++m) l.exact[std::to_string(m)] = law.q[static_cast<std::size_t>(m)];
    const auto model = composition_model(fx_.n);
    const auto stream = stream_id("first-part");
    struct outcome {
      std::string key;
      double bias = 0.0;
    };
    const auto results = run_replicates<outcome>(reps_, workers_, [&](long r) {
      auto rng = make_stream(seed_, stream, static_cast<std::uint64_t>(r));
      subordinator_window w = subordinator_window::sample(model, rng);
      const window_composition c = sample_window_composition(w, fx_.n, rng);
      const int m = c.parts.first();
      std::string key = std::to_string(m);
      if (m == 1) key = c.hits.front().is_litter() ? "1''" : "1'";
      return outcome{key, w.truncation_bias()};
    });
    for (const auto& o : results) {
      ++l.counts[o.key];
      l.truncation_bias = std::max(l.truncation_bias, o.bias);
    }
    l.tvd = total_variation(l.exact, l.counts);
    l.chi = chi_square_gof(l.exact, l.counts);
    l.passed = *l.tvd <= plan_.tvd_max;
    return l;
  }

  std::vector<std::string> window_compositions(int n, const std::string& tag, double* bias) {
    const auto model = composition_model(n);
    const auto stream = stream_id(tag);
    struct outcome {
      std::string key;
      double bias = 0.0;
    };
    const auto results = run_replicates<outcome>(reps_, workers_, [&](long r) {
      auto rng = make_stream(seed_, stream, static_cast<std::uint64_t>(r));
      subordinator_window w = subordinator_window::sample(model, rng);
      return outcome{composition_from_window(w, n, rng).to_string(), w.truncation_bias()};
    });
    std::vector<std::string> keys;
    keys.reserve(results.size());
    for (const auto& o : results) {
      keys.push_back(o.key);
      *bias = std::max(*bias, o.bias);
    }
    return keys;
  }

  line_item regeneration_check(int m) {
    line_item l = blank("regeneration m=" + std::to_string(m));
    const auto full = window_compositions(fx_.n, "regeneration", &l.truncation_bias);
    for (const auto& key : full) {
      const composition c = composition::parse(key);
      if (c.first() == m) ++l.counts[c.remainder().to_string()];
    }
    for (const auto& key : window_compositions(fx_.n - m, "regeneration-fresh-" + std::to_string(m), &l.truncation_bias))
      ++l.reference[key];
    judge_two_sample(l);
    return l;
  }

  line_item window_vs_sequential_check() {
    line_item l = blank("window-vs-sequential");
    l.counts = tally(window_compositions(fx_.n, "window", &l.truncation_bias));
    const first_part_cache& cache = laws();
    const auto stream = stream_id("sequential");
    l.reference = tally(run_replicates<std::string>(reps_, workers_, [&](long r) {
      auto rng = make_stream(seed_, stream, static_cast<std::uint64_t>(r));
      return sequential_composition(cache, fx_.n, rng).to_string();
    }));
    judge_two_sample(l);
    return l;
  }

  line_item deletion_check() {
    line_item l = blank("deletion");
    if (fx_.n < 3) throw precondition_error("deletion check needs n >= 3");
    const auto full = window_compositions(fx_.n, "deletion", &l.truncation_bias);
    const auto stream = stream_id("deletion-ball");
    for (std::size_t r = 0; r < full.size(); ++r) {
      auto rng = make_stream(seed_, stream, r);
      std::vector<int> parts = composition::parse(full[r]).parts();
      std::size_t ball = uniform_index(rng, static_cast<std::size_t>(fx_.n));
      for (auto it = parts.begin(); it != parts.end(); ++it) {
        if (ball < static_cast<std::size_t>(*it)) {
          if (--*it == 0) parts.erase(it);
          break;
        }
        ball -= static_cast<std::size_t>(*it);
      }
      ++l.counts[composition(parts).to_string()];
    }
    for (const auto& key : window_compositions(fx_.n - 1, "deletion-fresh", &l.truncation_bias)) ++l.reference[key];
    judge_two_sample(l);
    return l;
  }

  line_item heights_check() {
    line_item l = blank("heights");
    const first_part_law law = make_first_part_law(measure_, fx_.mu, 1);
    const double q = law.q1prime;
    const auto model = make_population_model(measure_, fx_.mu, 1);
    const auto stream = stream_id("heights");
    struct outcome {
      int height = 0;
      double bias = 0.0;
    };
    const auto results = run_replicates<outcome>(reps_, workers_, [&](long r) {
      auto rng = make_stream(seed_, stream, static_cast<std::uint64_t>(r));
      litter_history h = litter_history::sample(model, rng);
      const int height = h.fresh_litter_height(uniform_open(rng), rng);
      return outcome{height, h.truncation_bias()};
    });
    // cells 0..top-1 plus a tail cell "top+"
    int top = 1;
    while (reps_ * q * std::pow(1.0 - q, top) >= 5.0) ++top;
    auto label = [top](int h) { return h >= top ? std::to_string(top) + "+" : std::to_string(h); };
    for (int h = 0; h < top; ++h) l.exact[label(h)] = q * std::pow(1.0 - q, h);
    l.exact[label(top)] = std::pow(1.0 - q, top);
    for (const auto& o : results) {
      ++l.counts[label(o.height)];
      l.truncation_bias = std::max(l.truncation_bias, o.bias);
    }
    l.tvd = total_variation(l.exact, l.counts);
    l.chi = chi_square_gof(l.exact, l.counts);
    l.passed = l.chi->p_value >= plan_.p_min;
    return l;
  }

  line_item cutoff_check(double t) {
    std::ostringstream name;
    name << "cutoff t=" << t;
    line_item l = blank(name.str());
    l.reps = plan_.cutoff_paths;
    const auto model = make_population_model(measure_, fx_.mu, fx_.n);
    const auto stream = stream_id(name.str());
    const auto results = run_replicates<cutoff_result>(l.reps, workers_, [&](long r) {
      auto rng = make_stream(seed_, stream, static_cast<std::uint64_t>(r));
      subordinator_window w = subordinator_window::sample(model, rng);
      std::vector<double> ages;
      const double top = std::min(w.window(), 4.0 * t + 10.0 / fx_.mu);
      for (int k = 0; k <= 400; ++k) ages.push_back(top * k / 400.0);
      for (const auto& p : w.points())
        if (p.age() <= top) ages.push_back(p.age());
      return cutoff_bound_check(w, t, ages, rng);
    });
    l.max_deviation = 0.0;
    l.bound = std::exp(-fx_.mu * t);
    for (const auto& res : results) {
      l.max_deviation = std::max(*l.max_deviation, res.max_deviation);
      if (!res.holds) ++l.violations;
    }
    l.passed = l.violations == 0;
    return l;
  }

  validation_report stationarity_check() {
    line_item ks = blank("stationarity");
    line_item mass = blank("mass-conservation");
    ks.reps = mass.reps = plan_.stationarity_samples;
    const auto model = make_population_model(measure_, fx_.mu, 1);
    struct outcome {
      double atom_mass = 0.0;
      double worst = 0.0;
      double bias = 0.0;
    };
    const auto fwd_stream = stream_id("stationarity-forward");
    const auto forward = run_replicates<outcome>(ks.reps, workers_, [&](long r) {
      auto rng = make_stream(seed_, fwd_stream, static_cast<std::uint64_t>(r));
      outcome o;
      forward_simulate(measure_, fx_.mu, plan_.stationarity_horizon, population_measure{}, rng,
                       [&o](double, const population_measure& p) {
                         o.worst = std::max(o.worst, std::abs(p.total() - 1.0));
                         o.atom_mass = p.atom_mass();
                       });
      return o;
    });
    const auto st_stream = stream_id("stationarity-window");
    const auto stationary = run_replicates<outcome>(ks.reps, workers_, [&](long r) {
      auto rng = make_stream(seed_, st_stream, static_cast<std::uint64_t>(r));
      litter_history h = litter_history::sample(model, rng);
      const population_measure p = h.rho_state(rng);
      return outcome{p.atom_mass(), std::abs(p.total() - 1.0), h.truncation_bias()};
    });
    std::vector<double> a;
    std::vector<double> b;
    double worst = 0.0;
    for (const auto& o : forward) {
      a.push_back(o.atom_mass);
      worst = std::max(worst, o.worst);
    }
    for (const auto& o : stationary) {
      b.push_back(o.atom_mass);
      worst = std::max(worst, o.worst);
      ks.truncation_bias = std::max(ks.truncation_bias, o.bias);
    }
    ks.ks = ks_two_sample(a, b);
    ks.passed = ks.ks->p_value >= plan_.p_min;
    mass.max_deviation = worst;
    mass.bound = 1e-12;
    mass.passed = worst <= 1e-12;
    return {ks, mass};
  }

  const validation_plan& plan_;
  const fixture& fx_;
  long reps_;
  std::uint64_t seed_;
  int workers_;
  lambda_measure measure_;
  std::unique_ptr<rate_table> rates_;
  std::unique_ptr<first_part_cache> laws_;
};

inline bool is_kingman(const std::string& spec) {
  try {
    const auto atoms = parse_rational_atoms(spec);
    return atoms && !atoms->empty() &&
           std::all_of(atoms->begin(), atoms->end(), [](const rational_atom& a) { return a.location == 0; });
  } catch (const precondition_error&) {
    return false;
  }
}

}  // namespace detail

/// Deterministic in (plan, reps, seed); `workers` only changes scheduling.
inline validation_report run_validation(const validation_plan& plan, long reps, std::uint64_t seed, int workers = 1) {
  if (reps < 1) throw precondition_error("replicates must be >= 1");
  validation_report report;
  for (const fixture& fx : plan.fixtures) {
    std::vector<std::string> checks = fx.checks;
    if (detail::is_kingman(fx.measure) && std::find(checks.begin(), checks.end(), "ewens") == checks.end())
      checks.insert(checks.begin(), "ewens");
    std::unique_ptr<detail::check_runner> runner;
    try {
      runner = std::make_unique<detail::check_runner>(plan, fx, reps, seed, workers);
    } catch (const std::exception& e) {
      for (const auto& c : checks) {
        line_item l;
        l.fixture = fx.id;
        l.measure = fx.measure;
        l.check = c;
        l.mu = fx.mu;
        l.exact_mu = fx.exact_mu.value_or(fx.mu);
        l.n = fx.n;
        l.reps = reps;
        l.seed = seed;
        l.error = e.what();
        report.push_back(std::move(l));
      }
      continue;
    }
    for (const auto& c : checks) {
      auto items = runner->run(c);
      report.insert(report.end(), items.begin(), items.end());
    }
  }
  return report;
}

/// The full matrix: Kingman, Lebesgue, 3x²dx and (1/4)δ_{1/2} fixtures.
inline validation_plan default_plan() {
  validation_plan plan;
  plan.fixtures = {
      {"kingman-mu0.5-n5", "delta:0", 0.5, 5, std::nullopt, {"ewens", "frozen"}},
      {"lebesgue-mu1-n5", "beta:1,1,1", 1.0, 5, std::nullopt, {"frozen"}},
      {"poly3x2-mu1-n5",
       "poly3x2",
       1.0,
       5,
       std::nullopt,
       {"frozen", "chain", "set", "first-part", "regeneration", "deletion", "heights", "cutoff", "stationarity"}},
      {"poly3x2-mu1-n6", "poly3x2", 1.0, 6, std::nullopt, {"frozen"}},
      {"poly3x2-mu1-n4", "poly3x2", 1.0, 4, std::nullopt, {"window-vs-sequential"}},
      {"half-atom-mu1-n5", "atoms:1/2=1/4", 1.0, 5, std::nullopt, {"frozen", "chain", "set", "first-part"}},
  };
  return plan;
}

inline validation_plan plan_from_json(const nlohmann::json& j) {
  validation_plan plan;
  try {
    plan.tvd_max = j.value("tvdMax", plan.tvd_max);
    plan.p_min = j.value("pMin", plan.p_min);
    plan.cutoff_paths = j.value("cutoffPaths", plan.cutoff_paths);
    plan.stationarity_samples = j.value("stationaritySamples", plan.stationarity_samples);
    plan.stationarity_horizon = j.value("stationarityHorizon", plan.stationarity_horizon);
    for (const auto& f : j.at("fixtures")) {
      fixture fx;
      fx.id = f.at("id").get<std::string>();
      fx.measure = f.at("measure").get<std::string>();
      fx.mu = f.at("mu").get<double>();
      fx.n = f.at("n").get<int>();
      if (f.contains("exactMu")) fx.exact_mu = f.at("exactMu").get<double>();
      fx.checks = f.at("checks").get<std::vector<std::string>>();
      for (const auto& c : fx.checks)
        if (std::find(known_checks().begin(), known_checks().end(), c) == known_checks().end())
          throw precondition_error("unknown check in plan: " + c);
      if (fx.n < 1) throw precondition_error("fixture n must be >= 1");
      plan.fixtures.push_back(std::move(fx));
    }
  } catch (const nlohmann::json::exception& e) {
    throw precondition_error(std::string("malformed plan: ") + e.what());
  }
  return plan;
}

inline validation_plan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw precondition_error("cannot open plan file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw precondition_error(std::string("malformed plan: ") + e.what());
  }
  return plan_from_json(j);
}

}  // namespace lambdamut
