#pragma once

#include <cstddef>
#include <vector>

#include "infodyn/data.hpp"
#include "infodyn/inference.hpp"
#include "infodyn/stats.hpp"

namespace infodyn {

struct AisResult {
  std::size_t process = 0;
  double ais_bits = 0.0;
  std::vector<VariableRef> embedding;
  TestResult test;
  std::vector<double> local;
};

/// Active information storage: the greedy self-embedding of `process` and
/// the mutual information between that embedding and the present value.
/// Significance comes from jointly surrogating the embedding columns. An
/// empty embedding reports 0 bits with p = 1.
inline AisResult ais_estimate(const Dataset& d, std::size_t process, const InferenceSettings& settings) {
  InferenceSettings s = settings;
  s.mode = AnalysisMode::multivariate_te;  // target-past rules apply
  s.validate();
  detail::TargetAnalysis a(d, process, s, s.max_lag_target);
  AisResult out;
  out.process = process;
  out.embedding = a.greedy(detail::target_candidates(process, s), {}, detail::kPastPhase, 0);
  out.test.alpha = s.alpha_omnibus;
  out.test.n_permutations = s.n_perm_omnibus;
  if (out.embedding.empty()) {
    out.local.assign(a.present().size(), 0.0);
    return out;
  }
  const ColumnSet past = a.columns(out.embedding);
  const InfoValue v = a.estimator().mi(past, ColumnSet{Column(a.present())}, true);
  out.ais_bits = v.value;
  out.local = v.local;
  const std::vector<Column> cols(past.begin(), past.end());
  out.test = omnibus_test(cols, {}, a.context(detail::kAisPhase, 0, 0), s.n_perm_omnibus, s.alpha_omnibus);
  return out;
}

}  // namespace infodyn
