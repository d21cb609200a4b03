#pragma once

#include <cmath>
#include <functional>
#include <string>

#include <gtest/gtest.h>

// Asserts that `body` throws E and that its message contains `fragment`.
template <class E>
void expect_error(const std::function<void()>& body, const std::string& fragment) {
  try {
    body();
    ADD_FAILURE() << "expected an exception mentioning \"" << fragment << "\"";
  } catch (const E& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

// Within k standard errors of a binomial proportion.
inline void expect_proportion(long hits, long trials, double p, double k = 4.0) {
  const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  EXPECT_NEAR(static_cast<double>(hits) / static_cast<double>(trials), p, k * se + 1e-15);
}
