#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "infodyn/data.hpp"
#include "infodyn/error.hpp"
#include "infodyn/estimator.hpp"
#include "infodyn/parallel.hpp"

namespace infodyn {

struct TestResult {
  double statistic_observed = 0.0;
  double p_value = 1.0;
  bool significant = false;
  std::size_t n_permutations = 0;
  double alpha = 0.05;

  friend bool operator==(const TestResult&, const TestResult&) = default;
};

enum class SurrogateMethod { circular_shift, replication_shuffle };

struct SurrogatePolicy {
  SurrogateMethod method = SurrogateMethod::circular_shift;
  std::size_t min_shift = 1;
  std::uint64_t seed = 0;
};

/// Circular shifts for short recordings, whole-replication shuffles once
/// there are at least 20 replications.
inline SurrogatePolicy default_surrogate_policy(const RowLayout& layout, std::size_t max_lag, std::uint64_t seed) {
  SurrogatePolicy p;
  p.method = layout.n_replications < 20 ? SurrogateMethod::circular_shift : SurrogateMethod::replication_shuffle;
  p.min_shift = max_lag + 1;
  p.seed = seed;
  return p;
}

/// out[i] = col[(i - offset) mod L] within each replication.
inline std::vector<double> rotate_within_replications(Column col, const RowLayout& layout,
                                                      std::span<const std::size_t> offsets) {
  const std::size_t len = layout.rows_per_replication;
  if (col.size() != layout.rows() || offsets.size() != layout.n_replications)
    fail(ErrorKind::InvalidArgument, "surrogate layout mismatch");
  std::vector<double> out(col.size());
  for (std::size_t r = 0; r < layout.n_replications; ++r) {
    const std::size_t base = r * len;
    const std::size_t off = offsets[r] % len;
    // out[base + i] = col[base + (i - off) mod len]
    std::copy(col.begin() + static_cast<std::ptrdiff_t>(base + len - off),
              col.begin() + static_cast<std::ptrdiff_t>(base + len), out.begin() + static_cast<std::ptrdiff_t>(base));
    std::copy(col.begin() + static_cast<std::ptrdiff_t>(base),
              col.begin() + static_cast<std::ptrdiff_t>(base + len - off),
              out.begin() + static_cast<std::ptrdiff_t>(base + off));
  }
  return out;
}

/// Replication r of the output holds replication perm[r] of the input.
inline std::vector<double> permute_replications(Column col, const RowLayout& layout,
                                                std::span<const std::size_t> perm) {
  const std::size_t len = layout.rows_per_replication;
  if (col.size() != layout.rows() || perm.size() != layout.n_replications)
    fail(ErrorKind::InvalidArgument, "surrogate layout mismatch");
  std::vector<double> out(col.size());
  for (std::size_t r = 0; r < layout.n_replications; ++r)
    std::copy(col.begin() + static_cast<std::ptrdiff_t>(perm[r] * len),
              col.begin() + static_cast<std::ptrdiff_t>((perm[r] + 1) * len),
              out.begin() + static_cast<std::ptrdiff_t>(r * len));
  return out;
}

/// One random draw, fully determined by (policy.seed, draw_index). Applying
/// the same draw to several columns moves them jointly.
struct SurrogateDraw {
  SurrogateMethod method = SurrogateMethod::circular_shift;
  std::vector<std::size_t> indices;  // offsets or permutation
};

inline void check_surrogate_feasible(const RowLayout& layout, const SurrogatePolicy& policy) {
  if (policy.method == SurrogateMethod::circular_shift) {
    if (layout.rows_per_replication < 2 * policy.min_shift)
      fail(ErrorKind::InsufficientSamples,
           "circular shift needs at least " + std::to_string(2 * policy.min_shift) +
               " rows per replication, have " + std::to_string(layout.rows_per_replication));
  } else if (layout.n_replications < 2) {
    fail(ErrorKind::InsufficientSamples, "replication shuffle needs at least two replications");
  }
}

inline SurrogateDraw draw_surrogate(const RowLayout& layout, const SurrogatePolicy& policy, std::uint64_t draw_index) {
  check_surrogate_feasible(layout, policy);
  std::mt19937_64 rng(derive_seed(policy.seed, draw_index));
  SurrogateDraw d;
  d.method = policy.method;
  if (policy.method == SurrogateMethod::circular_shift) {
    std::uniform_int_distribution<std::size_t> u(policy.min_shift, layout.rows_per_replication - policy.min_shift);
    d.indices.resize(layout.n_replications);
    for (auto& o : d.indices) o = u(rng);
  } else {
    d.indices.resize(layout.n_replications);
    std::iota(d.indices.begin(), d.indices.end(), std::size_t{0});
    std::shuffle(d.indices.begin(), d.indices.end(), rng);
  }
  return d;
}

inline std::vector<double> apply_surrogate(Column col, const RowLayout& layout, const SurrogateDraw& d) {
  return d.method == SurrogateMethod::circular_shift ? rotate_within_replications(col, layout, d.indices)
                                                     : permute_replications(col, layout, d.indices);
}

inline std::vector<double> make_surrogate(Column col, const RowLayout& layout, const SurrogatePolicy& policy,
                                          std::uint64_t draw_index) {
  return apply_surrogate(col, layout, draw_surrogate(layout, policy, draw_index));
}

/// (c + 1) / (n + 1) with c counting surrogate statistics >= observed.
inline double permutation_p_value(double observed, std::span<const double> null) {
  std::size_t c = 0;
  for (double v : null) c += v >= observed ? 1 : 0;
  return static_cast<double>(c + 1) / static_cast<double>(null.size() + 1);
}

/// Rejects permutation counts for which p < alpha is unreachable.
inline void check_permutations(std::size_t n_perm, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::InvalidArgument, "alpha must lie in (0, 1)");
  if (!(1.0 / static_cast<double>(n_perm + 1) < alpha))
    fail(ErrorKind::InsufficientPermutations,
         std::to_string(n_perm) + " permutations cannot reach p < " + std::to_string(alpha));
}

inline TestResult make_test_result(double observed, std::span<const double> null, double alpha) {
  TestResult t;
  t.statistic_observed = observed;
  t.p_value = permutation_p_value(observed, null);
  t.significant = t.p_value < alpha;
  t.n_permutations = null.size();
  t.alpha = alpha;
  return t;
}

/// Everything a permutation test needs besides the variables under test:
/// the estimator, the target column whose association is tested, the row
/// layout and the surrogate policy.
struct TestContext {
  const Estimator* estimator = nullptr;
  Column target;
  RowLayout layout;
  SurrogatePolicy policy;
};

/// Maximum statistic over a candidate family sharing one conditioning set.
/// The null for draw d is the largest CMI among all candidates after
/// surrogating each of them with draw d.
inline TestResult max_statistic_test(std::span<const Column> candidates, std::span<const double> observed,
                                     const ColumnSet& conditioning, const TestContext& ctx, std::size_t n_perm,
                                     double alpha) {
  if (candidates.empty()) fail(ErrorKind::InvalidArgument, "max statistic over an empty candidate set");
  if (candidates.size() != observed.size()) fail(ErrorKind::InvalidArgument, "observed/candidate size mismatch");
  check_permutations(n_perm, alpha);
  check_surrogate_feasible(ctx.layout, ctx.policy);
  const auto kernel = ctx.estimator->prepare(ColumnSet{ctx.target}, conditioning);
  std::vector<double> null(n_perm);
  parallel_for(n_perm, [&](std::size_t d) {
    const SurrogateDraw draw = draw_surrogate(ctx.layout, ctx.policy, d);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
      const auto sur = apply_surrogate(c, ctx.layout, draw);
      best = std::max(best, kernel->cmi(ColumnSet{Column(sur)}));
    }
    null[d] = best;
  });
  return make_test_result(*std::max_element(observed.begin(), observed.end()), null, alpha);
}

/// A selected variable together with the conditioning set it is scored
/// against (the remaining selected variables plus any fixed conditioning).
struct ConditionedVariable {
  Column column;
  ColumnSet conditioning;
};

struct MinStatisticResult {
  std::size_t weakest = 0;          // index into the tested variables
  std::vector<double> observed;     // per-variable CMI
  TestResult test;
};

/// Minimum statistic: the weakest variable's CMI against the distribution of
/// per-draw minima over all variables' surrogate CMIs.
inline MinStatisticResult min_statistic_test(std::span<const ConditionedVariable> vars, const TestContext& ctx,
                                             std::size_t n_perm, double alpha) {
  if (vars.empty()) fail(ErrorKind::InvalidArgument, "min statistic over an empty set");
  check_permutations(n_perm, alpha);
  check_surrogate_feasible(ctx.layout, ctx.policy);
  std::vector<std::unique_ptr<CmiKernel>> kernels;
  MinStatisticResult out;
  for (const auto& v : vars) {
    kernels.push_back(ctx.estimator->prepare(ColumnSet{ctx.target}, v.conditioning));
    out.observed.push_back(kernels.back()->cmi(ColumnSet{v.column}));
  }
  for (std::size_t i = 1; i < vars.size(); ++i)
    if (out.observed[i] < out.observed[out.weakest]) out.weakest = i;
  std::vector<double> null(n_perm);
  parallel_for(n_perm, [&](std::size_t d) {
    const SurrogateDraw draw = draw_surrogate(ctx.layout, ctx.policy, d);
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < vars.size(); ++i) {
      const auto sur = apply_surrogate(vars[i].column, ctx.layout, draw);
      worst = std::min(worst, kernels[i]->cmi(ColumnSet{Column(sur)}));
    }
    null[d] = worst;
  });
  out.test = make_test_result(out.observed[out.weakest], null, alpha);
  return out;
}

/// Joint test of all `sources` against the target given `conditioning`;
/// every source column is moved with the same draw. An empty source set is a
/// vacuous test with p = 1.
inline TestResult omnibus_test(std::span<const Column> sources, const ColumnSet& conditioning,
                               const TestContext& ctx, std::size_t n_perm, double alpha) {
  if (sources.empty()) {
    TestResult t;
    t.alpha = alpha;
    t.n_permutations = n_perm;
    return t;
  }
  check_permutations(n_perm, alpha);
  check_surrogate_feasible(ctx.layout, ctx.policy);
  const auto kernel = ctx.estimator->prepare(ColumnSet{ctx.target}, conditioning);
  const double observed = kernel->cmi(ColumnSet(sources.begin(), sources.end()));
  std::vector<double> null(n_perm);
  parallel_for(n_perm, [&](std::size_t d) {
    const SurrogateDraw draw = draw_surrogate(ctx.layout, ctx.policy, d);
    std::vector<std::vector<double>> surs;
    surs.reserve(sources.size());
    for (const auto& s : sources) surs.push_back(apply_surrogate(s, ctx.layout, draw));
    ColumnSet x(surs.begin(), surs.end());
    null[d] = kernel->cmi(x);
  });
  return make_test_result(observed, null, alpha);
}

struct SequentialResult {
  std::vector<double> observed;      // per-variable CMI, input order
  std::vector<TestResult> tests;     // per-variable, input order
};

/// Sequential maximum statistics. Observed CMIs are ranked largest first and
/// the i-th largest is compared with the i-th largest surrogate CMI of each
/// draw. Once a rank fails, every smaller contribution is non-significant.
inline SequentialResult sequential_max_test(std::span<const ConditionedVariable> vars, const TestContext& ctx,
                                            std::size_t n_perm, double alpha) {
  SequentialResult out;
  if (vars.empty()) return out;
  check_permutations(n_perm, alpha);
  check_surrogate_feasible(ctx.layout, ctx.policy);
  const std::size_t m = vars.size();
  std::vector<std::unique_ptr<CmiKernel>> kernels;
  for (const auto& v : vars) {
    kernels.push_back(ctx.estimator->prepare(ColumnSet{ctx.target}, v.conditioning));
    out.observed.push_back(kernels.back()->cmi(ColumnSet{v.column}));
  }
  std::vector<std::size_t> rank(m);
  std::iota(rank.begin(), rank.end(), std::size_t{0});
  std::stable_sort(rank.begin(), rank.end(),
                   [&](std::size_t a, std::size_t b) { return out.observed[a] > out.observed[b]; });

  std::vector<std::vector<double>> sorted_null(n_perm);  // [draw][rank]
  parallel_for(n_perm, [&](std::size_t d) {
    const SurrogateDraw draw = draw_surrogate(ctx.layout, ctx.policy, d);
    std::vector<double> vals(m);
    for (std::size_t i = 0; i < m; ++i) {
      const auto sur = apply_surrogate(vars[i].column, ctx.layout, draw);
      vals[i] = kernels[i]->cmi(ColumnSet{Column(sur)});
    }
    std::sort(vals.begin(), vals.end(), std::greater<>());
    sorted_null[d] = std::move(vals);
  });

  out.tests.resize(m);
  bool still_significant = true;
  std::vector<double> null(n_perm);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t d = 0; d < n_perm; ++d) null[d] = sorted_null[d][r];
    TestResult t = make_test_result(out.observed[rank[r]], null, alpha);
    still_significant = still_significant && t.significant;
    t.significant = still_significant;
    out.tests[rank[r]] = t;
  }
  return out;
}

/// Benjamini-Hochberg over `p_values` with m total tests (m >= the number of
/// supplied p-values; the missing ones are treated as never significant).
inline std::vector<bool> fdr_correct(std::span<const double> p_values, double alpha, std::size_t m) {
  for (double p : p_values)
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorKind::InvalidValue, "p-value outside [0, 1]");
  if (m < p_values.size()) fail(ErrorKind::InvalidArgument, "m is smaller than the number of p-values");
  std::vector<bool> mask(p_values.size(), false);
  if (p_values.empty()) return mask;
  std::vector<std::size_t> order(p_values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::size_t cutoff = 0;  // number of ranks accepted
  for (std::size_t i = 0; i < order.size(); ++i) {
    const double threshold = static_cast<double>(i + 1) / static_cast<double>(m) * alpha;
    if (p_values[order[i]] <= threshold) cutoff = i + 1;
  }
  for (std::size_t i = 0; i < cutoff; ++i) mask[order[i]] = true;
  return mask;
}

}  // namespace infodyn
