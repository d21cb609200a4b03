#pragma once

// JSON and CSV forms of distributions, rate tables, population snapshots and
// validation reports.

#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "lambdamut/exact_recursion.hpp"
#include "lambdamut/lambda_measure.hpp"
#include "lambdamut/population.hpp"
#include "lambdamut/validation.hpp"

namespace lambdamut {

inline std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << x;
  return os.str();
}

inline nlohmann::json to_json(const sampling_distribution& d) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [a, p] : d.entries) entries.push_back({{"partition", a.to_string()}, {"probability", p}});
  return {{"measure", d.measure}, {"mu", d.mu}, {"n", d.n}, {"entries", entries}};
}

inline void write_csv(std::ostream& out, const sampling_distribution& d) {
  out << "partition,probability\n";
  for (const auto& [a, p] : d.entries) out << a.to_string() << ',' << format_double(p) << '\n';
}

inline nlohmann::json to_json(const rate_table& t, const std::string& label) {
  nlohmann::json rows = nlohmann::json::array();
  for (int b = 2; b <= t.n_max; ++b) {
    nlohmann::json lam = nlohmann::json::array();
    for (int k = 2; k <= b; ++k) lam.push_back(t.rate(b, k));
    rows.push_back({{"b", b}, {"lambda", lam}, {"totalRate", t.total(b)}});
  }
  return {{"measure", label}, {"nMax", t.n_max}, {"rows", rows}};
}

/// One row per b: b, λ_{b,2}, ..., λ_{b,nMax} (empty beyond b), totalRate.
inline void write_csv(std::ostream& out, const rate_table& t) {
  out << 'b';
  for (int k = 2; k <= t.n_max; ++k) out << ",k" << k;
  out << ",totalRate\n";
  for (int b = 2; b <= t.n_max; ++b) {
    out << b;
    for (int k = 2; k <= t.n_max; ++k) {
      out << ',';
      if (k <= b) out << format_double(t.rate(b, k));
    }
    out << ',' << format_double(t.total(b)) << '\n';
  }
}

inline nlohmann::json to_json(const population_measure& p, double truncation_bias) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& a : p.atoms) atoms.push_back({{"genotype", a.genotype}, {"size", a.size}});
  return {{"atoms", atoms}, {"diffuse", p.diffuse}, {"truncationBias", truncation_bias}};
}

inline void write_csv(std::ostream& out, const population_measure& p) {
  out << "genotype,size\n";
  for (const auto& a : p.atoms) out << format_double(a.genotype) << ',' << format_double(a.size) << '\n';
  out << "diffuse," << format_double(p.diffuse) << '\n';
}

inline nlohmann::json to_json(const line_item& l) {
  nlohmann::json j = {{"fixture", l.fixture},
                      {"measure", l.measure},
                      {"check", l.check},
                      {"mu", l.mu},
                      {"exactMu", l.exact_mu},
                      {"n", l.n},
                      {"replicates", l.reps},
                      {"seed", l.seed},
                      {"counts", l.counts},
                      {"truncationBias", l.truncation_bias},
                      {"passed", l.passed}};
  if (!l.exact.empty()) j["exact"] = l.exact;
  if (!l.reference.empty()) j["referenceCounts"] = l.reference;
  if (l.tvd) j["tvd"] = *l.tvd;
  if (l.chi) j["chiSquare"] = {{"statistic", l.chi->statistic}, {"df", l.chi->df}, {"p", l.chi->p_value}};
  if (l.ks) j["ks"] = {{"statistic", l.ks->statistic}, {"p", l.ks->p_value}};
  if (l.max_deviation) j["maxDeviation"] = *l.max_deviation;
  if (l.bound) j["bound"] = *l.bound;
  if (l.violations) j["violations"] = l.violations;
  if (!l.error.empty()) j["error"] = l.error;
  return j;
}

inline nlohmann::json to_json(const validation_report& r) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& l : r) items.push_back(to_json(l));
  return {{"passed", all_passed(r)}, {"items", items}};
}

inline void write_csv(std::ostream& out, const validation_report& r) {
  auto opt = [](const std::optional<double>& x) { return x ? format_double(*x) : std::string(); };
  out << "fixture,measure,check,mu,exact_mu,n,replicates,seed,tvd,chi2,df,p,max_deviation,bound,truncation_bias,"
         "passed,error\n";
  for (const auto& l : r) {
    std::optional<double> stat;
    std::optional<double> p;
    std::string df;
    if (l.chi) {
      stat = l.chi->statistic;
      p = l.chi->p_value;
      df = std::to_string(l.chi->df);
    } else if (l.ks) {
      stat = l.ks->statistic;
      p = l.ks->p_value;
    }
    std::string err = l.error;
    for (char& c : err)
      if (c == ',' || c == '\n') c = ' ';
    out << l.fixture << ',' << '"' << l.measure << '"' << ',' << l.check << ',' << format_double(l.mu) << ','
        << format_double(l.exact_mu) << ',' << l.n << ',' << l.reps << ',' << l.seed << ',' << opt(l.tvd) << ','
        << opt(stat) << ',' << df << ',' << opt(p) << ',' << opt(l.max_deviation) << ',' << opt(l.bound) << ','
        << format_double(l.truncation_bias) << ',' << (l.passed ? "pass" : "fail") << ',' << err << '\n';
  }
}

}  // namespace lambdamut
