#pragma once

// Exact rational arithmetic for the recursion oracle.

#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "lambdamut/errors.hpp"
#include "lambdamut/lambda_measure.hpp"

namespace lambdamut {

using rational = boost::multiprecision::cpp_rational;
using big_int = boost::multiprecision::cpp_int;

/// Parses "3/8", "0.125", "-2", "1.5e-3" exactly.
inline rational parse_rational(std::string_view text) {
  std::string s(text);
  auto fail = [&]() -> rational { throw precondition_error("not an exact rational: " + s); };
  if (s.empty()) return fail();
  if (const auto slash = s.find('/'); slash != std::string::npos) {
    const rational num = parse_rational(s.substr(0, slash));
    const rational den = parse_rational(s.substr(slash + 1));
    if (den == 0) return fail();
    return num / den;
  }
  std::size_t pos = 0;
  bool negative = false;
  if (s[pos] == '+' || s[pos] == '-') negative = s[pos++] == '-';
  big_int digits = 0;
  long scale = 0;
  bool any = false;
  bool after_point = false;
  for (; pos < s.size(); ++pos) {
    const char ch = s[pos];
    if (ch >= '0' && ch <= '9') {
      digits = digits * 10 + (ch - '0');
      if (after_point) --scale;
      any = true;
    } else if (ch == '.' && !after_point) {
      after_point = true;
    } else {
      break;
    }
  }
  if (!any) return fail();
  if (pos < s.size()) {
    if (s[pos] != 'e' && s[pos] != 'E') return fail();
    try {
      std::size_t used = 0;
      scale += std::stol(s.substr(pos + 1), &used);
      if (pos + 1 + used != s.size()) return fail();
    } catch (const std::exception&) {
      return fail();
    }
  }
  rational value(digits);
  big_int ten_pow = 1;
  for (long i = 0; i < (scale < 0 ? -scale : scale); ++i) ten_pow *= 10;
  if (scale < 0)
    value /= rational(ten_pow);
  else
    value *= rational(ten_pow);
  return negative ? rational(-value) : value;
}

inline rational int_power(const rational& base, int exponent) {
  rational out = 1;
  for (int i = 0; i < exponent; ++i) out *= base;
  return out;
}

struct rational_atom {
  rational location;
  rational weight;
};

/// Rate table of an atomic Λ with rational data, exact.
inline basic_rate_table<rational> rational_rate_table(const std::vector<rational_atom>& atoms, int n_max) {
  if (n_max < 2) throw precondition_error("rate table needs nMax >= 2");
  for (const auto& a : atoms)
    if (a.location < 0 || a.location > 1 || a.weight <= 0) throw precondition_error("invalid rational atom");
  basic_rate_table<rational> t;
  t.n_max = n_max;
  t.lambda.assign(static_cast<std::size_t>(n_max) + 1, {});
  t.total_rate.assign(static_cast<std::size_t>(n_max) + 1, rational(0));
  for (int b = 2; b <= n_max; ++b) {
    auto& row = t.lambda[static_cast<std::size_t>(b)];
    row.assign(static_cast<std::size_t>(b) + 1, rational(0));
    rational total = 0;
    rational choose = 1;  // C(b,k), advanced below
    for (int k = 1; k <= b; ++k) {
      choose = choose * (b - k + 1) / k;
      if (k < 2) continue;
      rational rate = 0;
      for (const auto& a : atoms) rate += a.weight * int_power(a.location, k - 2) * int_power(rational(1) - a.location, b - k);
      row[static_cast<std::size_t>(k)] = rate;
      total += choose * rate;
    }
    t.total_rate[static_cast<std::size_t>(b)] = total;
  }
  return t;
}

}  // namespace lambdamut
