#include <gtest/gtest.h>

#include <cmath>

#include "infodyn/digamma.hpp"
#include "test_support.hpp"

TEST(Digamma, MatchesHarmonicNumbers) {
  for (std::size_t n = 1; n <= 2000; n += (n < 50 ? 1 : 37))
    EXPECT_NEAR(infodyn::digamma(static_cast<double>(n)), testing_support::harmonic_digamma(n), 1e-12) << n;
}

TEST(Digamma, HalfIntegerValue) {
  // psi(1/2) = -gamma - 2 ln 2
  EXPECT_NEAR(infodyn::digamma(0.5), -0.57721566490153286 - 2.0 * std::log(2.0), 1e-12);
}

TEST(Digamma, RecurrenceHolds) {
  for (double x = 0.1; x < 30.0; x += 0.7) EXPECT_NEAR(infodyn::digamma(x + 1.0) - infodyn::digamma(x), 1.0 / x, 1e-12);
}
