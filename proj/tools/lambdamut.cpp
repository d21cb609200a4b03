#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lambdamut/lambdamut.hpp"

namespace lm = lambdamut;

namespace {

enum exit_code { ok = 0, validation_failed = 1, usage_error = 2, numerical_failure = 3 };

struct run_config {
  std::string measure;
  double mu = 0.0;
  std::string mu_text;
  int n = 5;
  int n_max = 10;
  long reps = 1;
  std::uint64_t seed = 0;
  double eps = -1.0;
  double window = 0.0;
  double horizon = 30.0;
  int workers = 1;
  int cap = lm::default_partition_cap;
  bool exact_arithmetic = false;
  std::string sampler;
  std::string plan;
  std::string method = "stationary";
  std::string output;
  std::string format;
};

/// Writes to --output when given, stdout otherwise.
class sink {
 public:
  explicit sink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw lm::precondition_error("cannot open output file: " + path);
    }
  }
  std::ostream& out() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

void cmd_rates(const run_config& c) {
  const lm::lambda_measure m = lm::parse_measure(c.measure);
  const lm::rate_table t = lm::build_rate_table(m, c.n_max);
  sink s(c.output);
  if (c.format == "json")
    s.out() << lm::to_json(t, m.label()).dump(2) << '\n';
  else
    lm::write_csv(s.out(), t);
}

std::string to_string(const lm::rational& r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

void cmd_exact(const run_config& c) {
  sink s(c.output);
  if (c.exact_arithmetic) {
    const auto atoms = lm::parse_rational_atoms(c.measure);
    if (!atoms) throw lm::precondition_error("exact arithmetic needs an atomic measure spec");
    if (c.n > c.cap) throw lm::precondition_error("partition cap exceeded");
    const auto rates = lm::rational_rate_table(*atoms, std::max(c.n, 2));
    const auto d = lm::solve(rates, lm::parse_rational(c.mu_text), c.n, c.measure, c.cap);
    if (c.format == "csv") s.out() << "partition,probability\n";
    for (const auto& [a, p] : d.entries)
      s.out() << a.to_string() << (c.format == "csv" ? "," : "\t") << to_string(p) << '\n';
    return;
  }
  const lm::lambda_measure m = lm::parse_measure(c.measure);
  const lm::sampling_distribution d = lm::solve(m, c.mu, c.n, c.cap);
  if (c.format == "json") {
    s.out() << lm::to_json(d).dump(2) << '\n';
  } else if (c.format == "csv") {
    lm::write_csv(s.out(), d);
  } else {
    for (const auto& [a, p] : d.entries) s.out() << a.to_string() << '\t' << lm::format_double(p) << '\n';
  }
}

void cmd_simulate(const run_config& c) {
  const lm::lambda_measure m = lm::parse_measure(c.measure);
  const std::uint64_t stream = lm::hash_id("simulate/" + c.sampler);
  std::vector<std::string> lines;
  auto rng_for = [&](long r) { return lm::make_stream(c.seed, stream, static_cast<std::uint64_t>(r)); };
  if (c.sampler == "frozen") {
    const lm::rate_table rates = lm::build_rate_table(m, std::max(c.n, 2));
    lines = lm::detail::run_replicates<std::string>(c.reps, c.workers, [&](long r) {
      auto rng = rng_for(r);
      return lm::simulate_frozen_coalescent(rates, c.mu, c.n, rng).to_string();
    });
  } else if (c.sampler == "chain") {
    const lm::first_part_cache laws(m, c.mu, c.n);
    lines = lm::detail::run_replicates<std::string>(c.reps, c.workers, [&](long r) {
      auto rng = rng_for(r);
      return lm::sample_family_partition_chain(laws, c.n, rng).to_string();
    });
  } else if (c.sampler == "set") {
    const auto model = lm::make_population_model(m, c.mu, c.n, c.window, c.eps);
    lines = lm::detail::run_replicates<std::string>(c.reps, c.workers, [&](long r) {
      auto rng = rng_for(r);
      return lm::sample_family_partition_set(model, c.n, rng).to_string();
    });
  } else if (c.sampler == "composition") {
    const double t0 = c.window > 0.0 ? c.window : lm::default_window(c.mu, c.n);
    const auto model = std::make_shared<const lm::subordinator_model>(m, c.mu, t0, c.eps);
    lines = lm::detail::run_replicates<std::string>(c.reps, c.workers, [&](long r) {
      auto rng = rng_for(r);
      lm::subordinator_window w = lm::subordinator_window::sample(model, rng);
      return lm::composition_from_window(w, c.n, rng).to_string();
    });
  } else if (c.sampler == "forward") {
    if (!m.finite_nu()) throw lm::precondition_error("infinite intensity");
    lines = lm::detail::run_replicates<std::string>(c.reps, c.workers, [&](long r) {
      auto rng = rng_for(r);
      const auto path = lm::forward_simulate(m, c.mu, c.horizon, lm::population_measure{}, rng);
      return lm::to_json(path.back().state, 0.0).dump();
    });
  } else {
    throw lm::precondition_error("unknown sampler: " + c.sampler);
  }
  sink s(c.output);
  for (const auto& l : lines) s.out() << l << '\n';
}

int cmd_validate(const run_config& c) {
  const lm::validation_plan plan = c.plan.empty() ? lm::default_plan() : lm::load_plan(c.plan);
  const lm::validation_report report = lm::run_validation(plan, c.reps, c.seed, c.workers);
  sink s(c.output);
  if (c.format == "csv")
    lm::write_csv(s.out(), report);
  else
    s.out() << lm::to_json(report).dump(2) << '\n';
  for (const auto& l : report)
    if (!l.passed)
      std::cerr << "FAIL " << l.fixture << ' ' << l.check << (l.error.empty() ? "" : ": " + l.error) << '\n';
  return lm::all_passed(report) ? ok : validation_failed;
}

void cmd_forward_snapshot(const run_config& c) {
  const lm::lambda_measure m = lm::parse_measure(c.measure);
  auto rng = lm::make_stream(c.seed, lm::hash_id("forward-snapshot/" + c.method), 0);
  lm::population_measure state;
  double bias = 0.0;
  if (c.method == "stationary") {
    const auto model = lm::make_population_model(m, c.mu, 1, c.window, c.eps);
    lm::litter_history h = lm::litter_history::sample(model, rng);
    state = h.rho_state(rng);
    bias = h.truncation_bias();
  } else if (c.method == "forward") {
    state = lm::forward_simulate(m, c.mu, c.horizon, lm::population_measure{}, rng).back().state;
  } else {
    throw lm::precondition_error("unknown method: " + c.method);
  }
  sink s(c.output);
  if (c.format == "csv")
    lm::write_csv(s.out(), state);
  else
    s.out() << lm::to_json(state, bias).dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Λ-coalescents with mutation: exact sampling formulas, samplers and their cross-validation"};
  app.require_subcommand(1);
  run_config c;

  auto* rates = app.add_subcommand(
      "rates", "Merger rates λ_{b,k} = ∫ x^{k-2}(1-x)^{b-k} Λ(dx) for 2 <= k <= b <= nmax, with total rates");
  rates->add_option("--measure", c.measure, "measure spec")->required();
  rates->add_option("--nmax", c.n_max, "largest number of blocks")->check(CLI::Range(2, 100000));
  rates->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  rates->add_option("-o,--output", c.output, "output file");

  auto* exact = app.add_subcommand(
      "exact", "Exact law of the allelic partition of a sample of n under the infinite-alleles Λ-coalescent");
  exact->add_option("--measure", c.measure, "measure spec")->required();
  exact->add_option("--mu", c.mu_text, "mutation rate per lineage (fractions allowed)")->required();
  exact->add_option("--n", c.n, "sample size")->required()->check(CLI::PositiveNumber);
  exact->add_option("--cap", c.cap, "largest n for partition enumeration");
  exact->add_flag("--exact", c.exact_arithmetic, "rational arithmetic (atomic measures)");
  exact->add_option("--format", c.format, "plain, csv or json")->check(CLI::IsMember({"plain", "csv", "json"}));
  exact->add_option("-o,--output", c.output, "output file");

  auto* simulate = app.add_subcommand(
      "simulate",
      "Samplers: frozen (coalescent with mutation-frozen blocks), chain (freeze / no-op / merge chain on weighted "
      "lineages), set (families of a sample from the stationary population via litter roots), composition "
      "(regenerative composition from a multiplicative subordinator), forward (population measure after a "
      "finite-intensity forward run)");
  simulate->add_option("sampler", c.sampler, "frozen | chain | set | composition | forward")
      ->required()
      ->check(CLI::IsMember({"frozen", "chain", "set", "composition", "forward"}));
  simulate->add_option("--measure", c.measure, "measure spec")->required();
  simulate->add_option("--mu", c.mu, "mutation rate")->check(CLI::NonNegativeNumber);
  simulate->add_option("--n", c.n, "sample size")->check(CLI::PositiveNumber);
  simulate->add_option("--reps", c.reps, "replicates")->check(CLI::PositiveNumber);
  simulate->add_option("--seed", c.seed, "master seed")->required();
  simulate->add_option("--eps", c.eps, "litter-size truncation (default: automatic)");
  simulate->add_option("--window", c.window, "initial window length (default: automatic)");
  simulate->add_option("--horizon", c.horizon, "forward run length")->check(CLI::NonNegativeNumber);
  simulate->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  simulate->add_option("-o,--output", c.output, "output file");

  auto* validate = app.add_subcommand(
      "validate", "Monte Carlo cross-validation of every sampler against the exact laws; exit 1 on any failure");
  validate->add_option("--plan", c.plan, "JSON plan file (default: built-in matrix)");
  validate->add_option("--reps", c.reps, "replicates per check")->check(CLI::PositiveNumber);
  validate->add_option("--seed", c.seed, "master seed")->required();
  validate->add_option("--workers", c.workers, "worker threads")->check(CLI::PositiveNumber);
  validate->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  validate->add_option("-o,--output", c.output, "output file");

  auto* snapshot = app.add_subcommand(
      "forward-snapshot",
      "Population measure (genotype atoms plus diffuse mass) at time 0, from the stationary litter construction "
      "or from a forward run started at Lebesgue measure");
  snapshot->add_option("--measure", c.measure, "measure spec")->required();
  snapshot->add_option("--mu", c.mu, "mutation rate")->required()->check(CLI::NonNegativeNumber);
  snapshot->add_option("--seed", c.seed, "master seed")->required();
  snapshot->add_option("--method", c.method, "stationary or forward")
      ->check(CLI::IsMember({"stationary", "forward"}));
  snapshot->add_option("--horizon", c.horizon, "forward run length")->check(CLI::NonNegativeNumber);
  snapshot->add_option("--eps", c.eps, "litter-size truncation (default: automatic)");
  snapshot->add_option("--window", c.window, "initial window length (default: automatic)");
  snapshot->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  snapshot->add_option("-o,--output", c.output, "output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage_error;
  }

  try {
    if (*rates) cmd_rates(c);
    if (*exact) {
      c.mu = static_cast<double>(lm::parse_rational(c.mu_text));
      if (c.mu < 0.0) throw lm::precondition_error("mutation rate must be >= 0");
      cmd_exact(c);
    }
    if (*simulate) cmd_simulate(c);
    if (*validate) {
      if (validate->count("--reps") == 0) c.reps = 100000;
      return cmd_validate(c);
    }
    if (*snapshot) cmd_forward_snapshot(c);
  } catch (const lm::numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return numerical_failure;
  } catch (const lm::precondition_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return usage_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return usage_error;
  }
  return ok;
}
