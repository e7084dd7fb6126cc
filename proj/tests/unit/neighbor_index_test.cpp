#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "infodyn/neighbor_index.hpp"
#include "test_support.hpp"

using infodyn::NeighborIndex;
namespace ts = testing_support;

namespace {

std::vector<std::span<const double>> spans(const std::vector<std::vector<double>>& cols) {
  return {cols.begin(), cols.end()};
}

}  // namespace

TEST(NeighborIndex, CollinearPointsHandGeometry) {
  const std::vector<std::vector<double>> cols{{0.0, 1.0, 2.0}};
  NeighborIndex idx(spans(cols));
  EXPECT_EQ(idx.kth_distance(1, 1), 1.0);
  EXPECT_EQ(idx.kth_distance(1, 2), 1.0);
  EXPECT_EQ(idx.kth_distance(0, 2), 2.0);
}

TEST(NeighborIndex, ZeroRadiusCountsNothing) {
  const std::vector<std::vector<double>> cols{{0.0, 0.0, 1.0}};
  NeighborIndex idx(spans(cols));
  EXPECT_EQ(idx.range_count(0, 0.0), 0u);
  const double q = 0.0;
  EXPECT_EQ(idx.range_count(std::span<const double>(&q, 1), 0.0), 0u);
}

TEST(NeighborIndex, StrictInequalityAtBoundary) {
  const std::vector<std::vector<double>> cols{{0.0, 1.0, 2.0, 3.0}};
  NeighborIndex idx(spans(cols));
  EXPECT_EQ(idx.range_count(1, 1.0), 0u);
  EXPECT_EQ(idx.range_count(1, 1.0000001), 2u);
}

TEST(NeighborIndex, EmptyPointSetIsAnError) {
  const std::vector<std::vector<double>> cols{{}};
  EXPECT_THROW(NeighborIndex idx(spans(cols)), infodyn::Error);
}

TEST(NeighborIndex, MatchesBruteForceOnRandomSets) {
  std::mt19937_64 rng(99);
  for (int config = 0; config < 100; ++config) {
    const std::size_t n = 20 + rng() % 180;
    const std::size_t dim = 1 + rng() % 4;
    std::vector<std::vector<double>> cols;
    for (std::size_t d = 0; d < dim; ++d) {
      auto c = ts::gaussian_noise(n, rng());
      if (config % 5 == 0)  // ties on a grid
        for (auto& v : c) v = std::round(v * 2.0);
      cols.push_back(c);
    }
    NeighborIndex idx(spans(cols), 1 + rng() % 16);
    for (std::size_t q = 0; q < 10; ++q) {
      const std::size_t i = rng() % n;
      const std::size_t k = 1 + rng() % std::min<std::size_t>(n - 1, 10);
      const double eps = idx.kth_distance(i, k);
      ASSERT_EQ(eps, ts::brute_kth(cols, i, k));
      ASSERT_EQ(idx.range_count(i, eps), ts::brute_count(cols, i, eps));
      const double r = std::abs(ts::gaussian_noise(1, rng())[0]);
      ASSERT_EQ(idx.range_count(i, r), ts::brute_count(cols, i, r));
    }
  }
}

TEST(NeighborIndex, ExternalQueryCountsEveryPoint) {
  const auto x = ts::gaussian_noise(150, 4), y = ts::gaussian_noise(150, 5);
  const std::vector<std::vector<double>> cols{x, y};
  NeighborIndex idx(spans(cols));
  const std::vector<double> q{0.1, -0.2};
  std::size_t brute = 0;
  for (std::size_t j = 0; j < 150; ++j)
    if (std::max(std::abs(x[j] - q[0]), std::abs(y[j] - q[1])) < 0.5) ++brute;
  EXPECT_EQ(idx.range_count(q, 0.5), brute);
}
