#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <vector>

#include "infodyn/data.hpp"
#include "infodyn/error.hpp"
#include "infodyn/inference.hpp"
#include "infodyn/parallel.hpp"
#include "infodyn/stats.hpp"

namespace infodyn {

/// A link as a fixed estimation problem: the source's selected variables
/// against the target's present, conditioned on the rest of the target's
/// parent set.
struct LinkStructure {
  std::size_t source = 0;
  std::size_t target = 0;
  std::size_t delay = 0;
  std::vector<VariableRef> source_vars;
  std::vector<VariableRef> conditioning;
};

/// Union of the FDR-surviving links of two results. Variables of a link
/// and its conditioning set are merged across both results.
inline std::vector<LinkStructure> union_link_structures(const NetworkResult& a, const NetworkResult& b) {
  if (a.n_processes != b.n_processes) fail(ErrorKind::InvalidArgument, "networks have different process counts");
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> delays;
  for (const NetworkResult* net : {&a, &b})
    for (const auto& l : net->adjacency()) delays.try_emplace({l.source, l.target}, l.delay);

  std::vector<LinkStructure> out;
  for (const auto& [key, delay] : delays) {
    const auto [src, tgt] = key;
    std::set<VariableRef> vars, cond;
    for (const NetworkResult* net : {&a, &b}) {
      for (const auto& t : net->targets) {
        if (t.target != tgt) continue;
        cond.insert(t.selected_target_past.begin(), t.selected_target_past.end());
        for (const auto& s : t.selected_sources) (s.variable.process == src ? vars : cond).insert(s.variable);
      }
    }
    if (vars.empty()) vars.insert(VariableRef{src, std::max<std::size_t>(delay, 1)});
    out.push_back(LinkStructure{src, tgt, delay, {vars.begin(), vars.end()}, {cond.begin(), cond.end()}});
  }
  return out;
}

struct CompareSettings {
  InferenceSettings estimation;  // estimator choice, kNN parameters, seed
  std::size_t n_perm = 200;
  double alpha = 0.05;           // BH level across links
};

struct LinkComparison {
  std::size_t source = 0;
  std::size_t target = 0;
  std::size_t delay = 0;
  double cmi_a = 0.0;
  double cmi_b = 0.0;
  double delta = 0.0;  // A - B
  double p_value = 1.0;
  bool fdr_significant = false;
};

namespace detail {

/// Embedded columns of one link over a pooled set of replications, with
/// per-replication blocks that can be regrouped without re-embedding.
struct PooledLink {
  std::size_t rows_per_rep = 0;
  std::vector<double> present;
  std::vector<std::vector<double>> sources;
  std::vector<std::vector<double>> conditioning;

  double statistic(const Estimator& est, std::span<const std::size_t> reps) const {
    auto gather = [&](const std::vector<double>& col) {
      std::vector<double> out;
      out.reserve(reps.size() * rows_per_rep);
      for (std::size_t r : reps)
        out.insert(out.end(), col.begin() + static_cast<std::ptrdiff_t>(r * rows_per_rep),
                   col.begin() + static_cast<std::ptrdiff_t>((r + 1) * rows_per_rep));
      return out;
    };
    const auto y = gather(present);
    std::vector<std::vector<double>> xs, zs;
    for (const auto& c : sources) xs.push_back(gather(c));
    for (const auto& c : conditioning) zs.push_back(gather(c));
    return est.cmi(ColumnSet(xs.begin(), xs.end()), ColumnSet{Column(y)}, ColumnSet(zs.begin(), zs.end())).value;
  }
};

}  // namespace detail

/// Link-wise comparison of two conditions on a fixed union network. The
/// null exchanges whole replications between conditions; p-values are
/// corrected across links with Benjamini-Hochberg.
inline std::vector<LinkComparison> compare_networks(const Dataset& a, const Dataset& b,
                                                    std::span<const LinkStructure> links, const CompareSettings& s) {
  if (links.empty()) fail(ErrorKind::EmptyLinkSet, "no links to compare");
  if (a.n_processes() != b.n_processes()) fail(ErrorKind::InvalidArgument, "conditions have different process counts");
  if (a.n_samples() != b.n_samples()) fail(ErrorKind::InvalidArgument, "conditions have different replication lengths");
  if (a.kind() != b.kind() || a.alphabet_size() != b.alphabet_size())
    fail(ErrorKind::InvalidArgument, "conditions have different data kinds");
  if (a.n_replications() < 2 || b.n_replications() < 2)
    fail(ErrorKind::InsufficientSamples, "replication exchange needs at least two replications per condition");
  check_permutations(s.n_perm, s.alpha);

  const Dataset pooled = Dataset::concat_replications({a, b});
  const auto estimator = make_estimator(s.estimation, pooled);
  const std::size_t ra = a.n_replications();
  const std::size_t total = pooled.n_replications();
  std::vector<std::size_t> idx_a(ra), idx_b(total - ra);
  std::iota(idx_a.begin(), idx_a.end(), std::size_t{0});
  std::iota(idx_b.begin(), idx_b.end(), ra);

  std::vector<LinkComparison> out;
  std::vector<double> p_values;
  for (std::size_t li = 0; li < links.size(); ++li) {
    const auto& link = links[li];
    if (link.source_vars.empty()) fail(ErrorKind::InvalidArgument, "link without source variables");
    std::size_t max_lag = 0;
    for (const auto& v : link.source_vars) max_lag = std::max(max_lag, v.lag);
    for (const auto& v : link.conditioning) max_lag = std::max(max_lag, v.lag);
    if (max_lag >= pooled.n_samples())
      fail(ErrorKind::InsufficientSamples, "link lag " + std::to_string(max_lag) + " exceeds the replication length");

    detail::PooledLink pl;
    pl.rows_per_rep = pooled.n_samples() - max_lag;
    pl.present = detail::lagged_column(pooled, link.target, 0, max_lag);
    for (const auto& v : link.source_vars) pl.sources.push_back(embed_column(pooled, v, max_lag));
    for (const auto& v : link.conditioning) pl.conditioning.push_back(embed_column(pooled, v, max_lag));

    LinkComparison c;
    c.source = link.source;
    c.target = link.target;
    c.delay = link.delay;
    c.cmi_a = pl.statistic(*estimator, idx_a);
    c.cmi_b = pl.statistic(*estimator, idx_b);
    c.delta = c.cmi_a - c.cmi_b;

    std::vector<double> null(s.n_perm);
    const std::uint64_t link_seed = derive_seed(s.estimation.seed, 0x636d70U, li);
    parallel_for(s.n_perm, [&](std::size_t d) {
      std::vector<std::size_t> perm(total);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      std::mt19937_64 rng(derive_seed(link_seed, d));
      std::shuffle(perm.begin(), perm.end(), rng);
      const std::span<const std::size_t> ga(perm.data(), ra);
      const std::span<const std::size_t> gb(perm.data() + ra, total - ra);
      null[d] = std::abs(pl.statistic(*estimator, ga) - pl.statistic(*estimator, gb));
    });
    c.p_value = permutation_p_value(std::abs(c.delta), null);
    p_values.push_back(c.p_value);
    out.push_back(c);
  }
  const auto mask = fdr_correct(p_values, s.alpha, p_values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i].fdr_significant = mask[i];
  return out;
}

}  // namespace infodyn
