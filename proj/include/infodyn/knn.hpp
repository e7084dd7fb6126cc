#pragma once

#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "infodyn/data.hpp"
#include "infodyn/digamma.hpp"
#include "infodyn/error.hpp"
#include "infodyn/estimator.hpp"
#include "infodyn/neighbor_index.hpp"
#include "infodyn/parallel.hpp"

namespace infodyn {

struct KnnSettings {
  std::size_t k = 4;
  double noise_amplitude = 1e-8;
  std::uint64_t seed = 0;
};

namespace detail {

/// Copies and jitters a column set; each column gets its own stream so the
/// noise does not depend on how columns are grouped into X, Y and Z.
inline std::vector<std::vector<double>> jittered(const ColumnSet& cols, const KnnSettings& s,
                                                 std::uint64_t role) {
  std::vector<std::vector<double>> out;
  out.reserve(cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) {
    out.emplace_back(cols[i].begin(), cols[i].end());
    add_noise_inplace(out.back(), s.noise_amplitude, derive_seed(s.seed, role, i));
  }
  return out;
}

inline std::vector<std::span<const double>> spans_of(
    std::initializer_list<const std::vector<std::vector<double>>*> groups) {
  std::vector<std::span<const double>> out;
  for (const auto* g : groups)
    for (const auto& c : *g) out.emplace_back(c);
  return out;
}

inline void check_knn(std::size_t n, const KnnSettings& s) {
  if (s.k == 0) fail(ErrorKind::InvalidArgument, "k must be at least 1");
  if (s.k >= n)
    fail(ErrorKind::InvalidArgument,
         "k = " + std::to_string(s.k) + " must be smaller than the " + std::to_string(n) + " observations");
}

inline std::vector<double> digamma_table(std::size_t n) {
  std::vector<double> t(n + 2);
  for (std::size_t i = 1; i < t.size(); ++i) t[i] = digamma(static_cast<double>(i));
  return t;
}

}  // namespace detail

/// KSG algorithm-1 mutual information in bits, maximum norm.
inline InfoValue knn_mi(const ColumnSet& x, const ColumnSet& y, const KnnSettings& s) {
  const std::size_t n = detail::common_rows(x, y, {});
  detail::check_knn(n, s);
  const auto xj = detail::jittered(x, s, 0);
  const auto yj = detail::jittered(y, s, 1);
  const NeighborIndex joint(detail::spans_of({&xj, &yj}));
  const NeighborIndex xs(detail::spans_of({&xj}));
  const NeighborIndex ys(detail::spans_of({&yj}));
  const auto psi = detail::digamma_table(n);
  const double head = psi[s.k] + psi[n];

  InfoValue out;
  out.local.resize(n);
  parallel_for(n, [&](std::size_t i) {
    const double eps = joint.kth_distance(i, s.k);
    if (!(eps > 0.0))
      fail(ErrorKind::DuplicatePoints, "k-th neighbour at distance zero; jitter is missing or too small");
    const std::size_t nx = xs.range_count(i, eps);
    const std::size_t ny = ys.range_count(i, eps);
    out.local[i] = (head - psi[nx + 1] - psi[ny + 1]) / std::numbers::ln2;
  });
  out.value = detail::ordered_mean(out.local);
  return out;
}

/// Frenzel-Pompe conditional mutual information in bits, same neighbour
/// conventions as knn_mi. An empty Z reduces to knn_mi.
inline InfoValue knn_cmi(const ColumnSet& x, const ColumnSet& y, const ColumnSet& z, const KnnSettings& s) {
  if (z.empty()) return knn_mi(x, y, s);
  const std::size_t n = detail::common_rows(x, y, z);
  detail::check_knn(n, s);
  const auto xj = detail::jittered(x, s, 0);
  const auto yj = detail::jittered(y, s, 1);
  const auto zj = detail::jittered(z, s, 2);
  const NeighborIndex joint(detail::spans_of({&xj, &yj, &zj}));
  const NeighborIndex xz(detail::spans_of({&xj, &zj}));
  const NeighborIndex yz(detail::spans_of({&yj, &zj}));
  const NeighborIndex zs(detail::spans_of({&zj}));
  const auto psi = detail::digamma_table(n);

  InfoValue out;
  out.local.resize(n);
  parallel_for(n, [&](std::size_t i) {
    const double eps = joint.kth_distance(i, s.k);
    if (!(eps > 0.0))
      fail(ErrorKind::DuplicatePoints, "k-th neighbour at distance zero; jitter is missing or too small");
    const std::size_t nxz = xz.range_count(i, eps);
    const std::size_t nyz = yz.range_count(i, eps);
    const std::size_t nz = zs.range_count(i, eps);
    out.local[i] = (psi[s.k] - psi[nxz + 1] - psi[nyz + 1] + psi[nz + 1]) / std::numbers::ln2;
  });
  out.value = detail::ordered_mean(out.local);
  return out;
}

class KnnEstimator final : public Estimator {
 public:
  explicit KnnEstimator(KnnSettings settings = {}) : settings_(settings) {}

  InfoValue cmi(const ColumnSet& x, const ColumnSet& y, const ColumnSet& z,
                bool with_local = false) const override {
    InfoValue v = knn_cmi(x, y, z, settings_);
    if (!with_local) v.local.clear();
    return v;
  }

  std::string name() const override { return "knn"; }
  const KnnSettings& settings() const noexcept { return settings_; }

 private:
  KnnSettings settings_;
};

}  // namespace infodyn
