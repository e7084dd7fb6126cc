#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "infodyn/data.hpp"
#include "infodyn/discrete.hpp"
#include "infodyn/error.hpp"
#include "infodyn/estimator.hpp"
#include "infodyn/gaussian.hpp"
#include "infodyn/knn.hpp"
#include "infodyn/parallel.hpp"
#include "infodyn/stats.hpp"

namespace infodyn {

enum class AnalysisMode { multivariate_te, bivariate_te, multivariate_mi, bivariate_mi };
enum class EstimatorKind { gaussian, knn, discrete };

inline bool is_te(AnalysisMode m) { return m == AnalysisMode::multivariate_te || m == AnalysisMode::bivariate_te; }
inline bool is_bivariate(AnalysisMode m) { return m == AnalysisMode::bivariate_te || m == AnalysisMode::bivariate_mi; }

struct InferenceSettings {
  AnalysisMode mode = AnalysisMode::multivariate_te;
  EstimatorKind estimator = EstimatorKind::gaussian;
  std::size_t max_lag_sources = 5;
  std::size_t min_lag_sources = 1;
  std::size_t max_lag_target = 5;
  std::size_t tau_sources = 1;
  std::size_t tau_target = 1;
  double alpha_max_stat = 0.05;
  double alpha_min_stat = 0.05;
  double alpha_omnibus = 0.05;
  double alpha_max_seq = 0.05;
  double alpha_fdr = 0.05;
  std::size_t n_perm_max_stat = 200;
  std::size_t n_perm_min_stat = 200;
  std::size_t n_perm_omnibus = 500;
  std::size_t n_perm_max_seq = 200;
  std::size_t knn_k = 4;
  double noise_amplitude = 1e-8;
  std::uint64_t discrete_state_cap = kDefaultStateCap;
  std::optional<SurrogateMethod> surrogate;  // unset: chosen from the replication count
  std::uint64_t seed = 0;

  void validate() const {
    auto bad = [](const std::string& what) { fail(ErrorKind::InvalidArgument, what); };
    if (min_lag_sources < 1) bad("min_lag_sources must be at least 1");
    if (max_lag_sources < min_lag_sources) bad("max_lag_sources must be >= min_lag_sources");
    if (tau_sources < 1 || tau_target < 1) bad("tau_sources and tau_target must be at least 1");
    if (is_te(mode) && max_lag_target < tau_target) bad("max_lag_target must be >= tau_target");
    for (double a : {alpha_max_stat, alpha_min_stat, alpha_omnibus, alpha_max_seq, alpha_fdr})
      if (!(a > 0.0 && a < 1.0)) bad("alpha levels must lie in (0, 1)");
    check_permutations(n_perm_max_stat, alpha_max_stat);
    check_permutations(n_perm_min_stat, alpha_min_stat);
    check_permutations(n_perm_omnibus, alpha_omnibus);
    check_permutations(n_perm_max_seq, alpha_max_seq);
    if (knn_k < 1) bad("knn_k must be at least 1");
    if (!(noise_amplitude >= 0.0)) bad("noise_amplitude must be non-negative");
  }

  friend bool operator==(const InferenceSettings&, const InferenceSettings&) = default;
};

struct SelectedSource {
  VariableRef variable;
  double cmi_bits = 0.0;
  double p_value = 1.0;

  friend bool operator==(const SelectedSource&, const SelectedSource&) = default;
};

struct TargetResult {
  std::size_t target = 0;
  std::vector<VariableRef> selected_target_past;
  std::vector<SelectedSource> selected_sources;
  TestResult omnibus;
  std::map<std::size_t, std::size_t> per_source_delay;
  InferenceSettings settings;

  friend bool operator==(const TargetResult&, const TargetResult&) = default;
};

struct Link {
  std::size_t source = 0;
  std::size_t target = 0;
  double weight_bits = 0.0;
  std::size_t delay = 0;
  double p_value = 1.0;
  bool fdr_significant = false;

  friend bool operator==(const Link&, const Link&) = default;
};

struct NetworkResult {
  std::size_t n_processes = 0;
  std::vector<TargetResult> targets;
  std::vector<Link> links;       // every link with selected variables
  std::size_t links_tested = 0;  // FDR family size

  std::vector<Link> adjacency() const {
    std::vector<Link> out;
    for (const auto& l : links)
      if (l.fdr_significant) out.push_back(l);
    return out;
  }

  friend bool operator==(const NetworkResult&, const NetworkResult&) = default;
};

inline std::unique_ptr<Estimator> make_estimator(const InferenceSettings& s, const Dataset& d) {
  switch (s.estimator) {
    case EstimatorKind::gaussian:
      if (d.kind() != DataKind::continuous) fail(ErrorKind::InvalidArgument, "Gaussian estimator needs continuous data");
      return std::make_unique<GaussianEstimator>();
    case EstimatorKind::knn:
      if (d.kind() != DataKind::continuous) fail(ErrorKind::InvalidArgument, "kNN estimator needs continuous data");
      return std::make_unique<KnnEstimator>(KnnSettings{s.knn_k, s.noise_amplitude, derive_seed(s.seed, 0x6b6e6eU)});
    case EstimatorKind::discrete:
      if (d.kind() != DataKind::discrete) fail(ErrorKind::InvalidArgument, "discrete estimator needs discrete data");
      return std::make_unique<DiscreteEstimator>(d.alphabet_size(), s.discrete_state_cap);
  }
  fail(ErrorKind::InvalidArgument, "unknown estimator");
}

namespace detail {

enum Phase : std::uint64_t { kPastPhase = 1, kSourcePhase, kPrunePhase, kOmnibusPhase, kSequentialPhase, kAisPhase };

inline bool all_replications_constant(const Dataset& d, std::size_t process) {
  for (std::size_t r = 0; r < d.n_replications(); ++r) {
    const double first = d.at(process, 0, r);
    for (std::size_t t = 1; t < d.n_samples(); ++t)
      if (d.at(process, t, r) != first) return false;
  }
  return true;
}

/// Shared state of one target's analysis: embedded columns over a common
/// current-sample range, the estimator and the per-target seed stream.
class TargetAnalysis {
 public:
  TargetAnalysis(const Dataset& d, std::size_t target, const InferenceSettings& s, std::size_t first_sample)
      : data_(d), target_(target), settings_(s), first_sample_(first_sample) {
    if (target >= d.n_processes()) fail(ErrorKind::InvalidArgument, "target " + std::to_string(target) + " out of range");
    if (all_replications_constant(d, target))
      fail(ErrorKind::DegenerateTarget, "target " + std::to_string(target) + " is constant in every replication");
    estimator_ = make_estimator(s, d);
    if (first_sample >= d.n_samples())
      fail(ErrorKind::InsufficientSamples, "no current samples remain after the first " + std::to_string(first_sample));
    present_ = detail::lagged_column(d, target, 0, first_sample);
    layout_ = RowLayout{d.n_replications(), d.n_samples() - first_sample};
    seed_ = derive_seed(s.seed, target);
  }

  const std::vector<double>& column(const VariableRef& v) {
    auto it = cache_.find(v);
    if (it == cache_.end()) it = cache_.emplace(v, embed_column(data_, v, first_sample_)).first;
    return it->second;
  }

  ColumnSet columns(const std::vector<VariableRef>& vars) {
    ColumnSet out;
    for (const auto& v : vars) out.emplace_back(column(v));
    return out;
  }

  TestContext context(std::uint64_t phase, std::uint64_t group, std::uint64_t step) const {
    const std::uint64_t seed = derive_seed(seed_, phase, group, step);
    SurrogatePolicy policy = default_surrogate_policy(layout_, first_sample_, seed);
    if (settings_.surrogate) policy.method = *settings_.surrogate;
    return TestContext{estimator_.get(), Column(present_), layout_, policy};
  }

  /// Greedy forward selection from `candidates`, conditioning on `base` plus
  /// everything accepted so far. Each step is gated by a maximum-statistic
  /// test over the remaining candidates; the first failure stops.
  std::vector<VariableRef> greedy(std::vector<VariableRef> candidates, const std::vector<VariableRef>& base,
                                  std::uint64_t phase, std::uint64_t group) {
    std::sort(candidates.begin(), candidates.end());  // (process, lag) ascending for tie-breaks
    std::vector<VariableRef> selected;
    for (std::uint64_t step = 0; !candidates.empty(); ++step) {
      std::vector<VariableRef> cond_vars = base;
      cond_vars.insert(cond_vars.end(), selected.begin(), selected.end());
      const ColumnSet cond = columns(cond_vars);
      const auto kernel = estimator_->prepare(ColumnSet{Column(present_)}, cond);
      std::vector<Column> cand_cols;
      std::vector<double> observed;
      for (const auto& c : candidates) {
        cand_cols.emplace_back(column(c));
        observed.push_back(kernel->cmi(ColumnSet{cand_cols.back()}));
      }
      std::size_t best = 0;
      for (std::size_t i = 1; i < candidates.size(); ++i)
        if (observed[i] > observed[best]) best = i;
      const TestResult t = max_statistic_test(cand_cols, observed, cond, context(phase, group, step),
                                              settings_.n_perm_max_stat, settings_.alpha_max_stat);
      if (!t.significant) break;
      selected.push_back(candidates[best]);
      candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(best));
    }
    return selected;
  }

  /// Repeatedly removes the weakest variable while the minimum-statistic test
  /// fails for it.
  std::vector<VariableRef> prune(std::vector<VariableRef> selected, const std::vector<VariableRef>& base,
                                 std::uint64_t group) {
    for (std::uint64_t step = 0; !selected.empty(); ++step) {
      std::vector<ConditionedVariable> vars = conditioned(selected, base);
      const MinStatisticResult r =
          min_statistic_test(vars, context(kPrunePhase, group, step), settings_.n_perm_min_stat, settings_.alpha_min_stat);
      if (r.test.significant) break;
      selected.erase(selected.begin() + static_cast<std::ptrdiff_t>(r.weakest));
    }
    return selected;
  }

  /// Each variable conditioned on `base` and every other member of `set`.
  std::vector<ConditionedVariable> conditioned(const std::vector<VariableRef>& set,
                                               const std::vector<VariableRef>& base) {
    std::vector<ConditionedVariable> out;
    for (std::size_t i = 0; i < set.size(); ++i) {
      std::vector<VariableRef> cond = base;
      for (std::size_t j = 0; j < set.size(); ++j)
        if (j != i) cond.push_back(set[j]);
      out.push_back(ConditionedVariable{Column(column(set[i])), columns(cond)});
    }
    return out;
  }

  const Estimator& estimator() const { return *estimator_; }
  const std::vector<double>& present() const { return present_; }
  const RowLayout& layout() const { return layout_; }

 private:
  const Dataset& data_;
  std::size_t target_;
  const InferenceSettings& settings_;
  std::size_t first_sample_;
  std::unique_ptr<Estimator> estimator_;
  std::vector<double> present_;
  RowLayout layout_;
  std::uint64_t seed_ = 0;
  std::map<VariableRef, std::vector<double>> cache_;
};

inline std::vector<VariableRef> target_candidates(std::size_t target, const InferenceSettings& s) {
  std::vector<VariableRef> out;
  for (std::size_t lag = s.tau_target; lag <= s.max_lag_target; lag += s.tau_target) out.push_back({target, lag});
  return out;
}

inline std::vector<VariableRef> source_candidates(std::size_t process, const InferenceSettings& s) {
  std::vector<VariableRef> out;
  for (std::size_t lag = s.min_lag_sources; lag <= s.max_lag_sources; lag += s.tau_sources) out.push_back({process, lag});
  return out;
}

inline std::size_t first_current_sample(const InferenceSettings& s) {
  return is_te(s.mode) ? std::max(s.max_lag_sources, s.max_lag_target) : s.max_lag_sources;
}

}  // namespace detail

/// Past variables of the target (its non-uniform self-embedding), chosen
/// greedily and gated by maximum-statistic tests. Empty in MI modes.
inline std::vector<VariableRef> select_target_past(const Dataset& d, std::size_t target, const InferenceSettings& s) {
  s.validate();
  if (!is_te(s.mode)) return {};
  detail::TargetAnalysis a(d, target, s, detail::first_current_sample(s));
  return a.greedy(detail::target_candidates(target, s), {}, detail::kPastPhase, 0);
}

/// Full single-target pipeline: target past, source selection, pruning,
/// omnibus gate, sequential per-variable p-values and delay reporting.
inline TargetResult infer_target(const Dataset& d, std::size_t target, const InferenceSettings& s) {
  using namespace detail;
  s.validate();
  TargetAnalysis a(d, target, s, first_current_sample(s));
  TargetResult result;
  result.target = target;
  result.settings = s;

  std::vector<VariableRef> past;
  if (is_te(s.mode)) past = a.greedy(target_candidates(target, s), {}, kPastPhase, 0);
  result.selected_target_past = past;

  // Candidate pools: one pool over all other processes, or one per process.
  std::vector<std::vector<VariableRef>> pools;
  for (std::size_t p = 0; p < d.n_processes(); ++p) {
    if (p == target) continue;
    auto c = source_candidates(p, s);
    if (is_bivariate(s.mode) || pools.empty()) {
      pools.push_back(std::move(c));
    } else {
      pools.front().insert(pools.front().end(), c.begin(), c.end());
    }
  }

  std::vector<std::vector<VariableRef>> selected(pools.size());
  for (std::size_t g = 0; g < pools.size(); ++g) selected[g] = a.greedy(pools[g], past, kSourcePhase, g);
  for (std::size_t g = 0; g < pools.size(); ++g) selected[g] = a.prune(selected[g], past, g);

  std::vector<VariableRef> all;
  for (const auto& g : selected) all.insert(all.end(), g.begin(), g.end());
  std::sort(all.begin(), all.end());
  {
    const ColumnSet cols = a.columns(all);
    std::vector<Column> src(cols.begin(), cols.end());
    result.omnibus = omnibus_test(src, a.columns(past), a.context(kOmnibusPhase, 0, 0), s.n_perm_omnibus, s.alpha_omnibus);
  }

  if (result.omnibus.significant) {
    for (std::size_t g = 0; g < selected.size(); ++g) {
      if (selected[g].empty()) continue;
      const auto vars = a.conditioned(selected[g], past);
      const SequentialResult seq = sequential_max_test(vars, a.context(kSequentialPhase, g, 0), s.n_perm_max_seq, s.alpha_max_seq);
      for (std::size_t i = 0; i < selected[g].size(); ++i)
        if (seq.tests[i].significant)
          result.selected_sources.push_back(SelectedSource{selected[g][i], seq.observed[i], seq.tests[i].p_value});
    }
  }
  std::sort(result.selected_sources.begin(), result.selected_sources.end(),
            [](const SelectedSource& x, const SelectedSource& y) { return x.variable < y.variable; });

  // Delay: lag of the largest contribution per source process (smaller lag on ties).
  std::map<std::size_t, const SelectedSource*> strongest;
  for (const auto& src : result.selected_sources) {
    auto& cur = strongest[src.variable.process];
    if (cur == nullptr || src.cmi_bits > cur->cmi_bits) cur = &src;
  }
  for (const auto& [p, src] : strongest) result.per_source_delay[p] = src->variable.lag;
  return result;
}

/// Links from per-target results; FDR over link p-values with m = number of
/// ordered (source, target) pairs that were candidates.
inline NetworkResult assemble_network(std::size_t n_processes, std::vector<TargetResult> targets, double alpha_fdr) {
  NetworkResult net;
  net.n_processes = n_processes;
  net.targets = std::move(targets);
  net.links_tested = n_processes > 1 ? n_processes * (n_processes - 1) : 0;
  for (const auto& t : net.targets) {
    std::map<std::size_t, Link> by_source;
    for (const auto& src : t.selected_sources) {
      auto [it, inserted] = by_source.try_emplace(src.variable.process);
      Link& l = it->second;
      if (inserted) {
        l.source = src.variable.process;
        l.target = t.target;
        l.p_value = src.p_value;
      }
      l.weight_bits += src.cmi_bits;
      l.p_value = std::min(l.p_value, src.p_value);
    }
    for (auto& [p, l] : by_source) {
      l.delay = t.per_source_delay.at(p);
      net.links.push_back(l);
    }
  }
  std::vector<double> p;
  for (const auto& l : net.links) p.push_back(l.p_value);
  const auto mask = fdr_correct(p, alpha_fdr, std::max(net.links_tested, p.size()));
  for (std::size_t i = 0; i < net.links.size(); ++i) net.links[i].fdr_significant = mask[i];
  return net;
}

/// Runs infer_target for every process and assembles the network.
inline NetworkResult infer_network(const Dataset& d, const InferenceSettings& s) {
  s.validate();
  std::vector<TargetResult> targets;
  for (std::size_t t = 0; t < d.n_processes(); ++t) targets.push_back(infer_target(d, t, s));
  return assemble_network(d.n_processes(), std::move(targets), s.alpha_fdr);
}

}  // namespace infodyn
