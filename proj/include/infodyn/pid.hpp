#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "infodyn/discrete.hpp"
#include "infodyn/error.hpp"
#include "infodyn/estimator.hpp"

namespace infodyn {

/// p(s1, s2, t) stored densely, index (s1 * a2 + s2) * at + t.
struct JointDistribution3 {
  std::size_t alphabet_s1 = 0;
  std::size_t alphabet_s2 = 0;
  std::size_t alphabet_t = 0;
  std::vector<double> p;

  JointDistribution3() = default;
  JointDistribution3(std::size_t a1, std::size_t a2, std::size_t at)
      : alphabet_s1(a1), alphabet_s2(a2), alphabet_t(at), p(a1 * a2 * at, 0.0) {}

  double& operator()(std::size_t s1, std::size_t s2, std::size_t t) { return p[(s1 * alphabet_s2 + s2) * alphabet_t + t]; }
  double operator()(std::size_t s1, std::size_t s2, std::size_t t) const {
    return p[(s1 * alphabet_s2 + s2) * alphabet_t + t];
  }

  void validate() const {
    if (alphabet_s1 == 0 || alphabet_s2 == 0 || alphabet_t == 0 || p.size() != alphabet_s1 * alphabet_s2 * alphabet_t)
      fail(ErrorKind::InvalidValue, "distribution shape does not match its alphabets");
    double total = 0.0;
    for (double v : p) {
      if (!(v >= 0.0)) fail(ErrorKind::InvalidValue, "negative or NaN probability mass");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) fail(ErrorKind::InvalidValue, "probabilities do not sum to 1");
  }
};

struct PidAtoms {
  double redundancy = 0.0;
  double unique_1 = 0.0;
  double unique_2 = 0.0;
  double synergy = 0.0;
  double mi_s1 = 0.0;     // I(S1;T)
  double mi_s2 = 0.0;     // I(S2;T)
  double mi_joint = 0.0;  // I(S1,S2;T)
};

namespace detail {

/// p(s, t) for one source after marginalizing the other.
inline std::vector<double> source_target_marginal(const JointDistribution3& d, bool first) {
  const std::size_t as = first ? d.alphabet_s1 : d.alphabet_s2;
  std::vector<double> m(as * d.alphabet_t, 0.0);
  for (std::size_t s1 = 0; s1 < d.alphabet_s1; ++s1)
    for (std::size_t s2 = 0; s2 < d.alphabet_s2; ++s2)
      for (std::size_t t = 0; t < d.alphabet_t; ++t) m[(first ? s1 : s2) * d.alphabet_t + t] += d(s1, s2, t);
  return m;
}

/// I(S;T) from p(s, t) laid out [s][t], with 0 log 0 = 0.
inline double mi_from_joint(const std::vector<double>& pst, std::size_t as, std::size_t at) {
  std::vector<double> ps(as, 0.0), pt(at, 0.0);
  for (std::size_t s = 0; s < as; ++s)
    for (std::size_t t = 0; t < at; ++t) {
      ps[s] += pst[s * at + t];
      pt[t] += pst[s * at + t];
    }
  double mi = 0.0;
  for (std::size_t s = 0; s < as; ++s)
    for (std::size_t t = 0; t < at; ++t) {
      const double v = pst[s * at + t];
      if (v > 0.0) mi += v * std::log2(v / (ps[s] * pt[t]));
    }
  return mi;
}

/// Specific information I(T=t; S) = sum_s p(s|t) [log2 p(t|s) - log2 p(t)].
inline std::vector<double> specific_information(const std::vector<double>& pst, std::size_t as, std::size_t at) {
  std::vector<double> ps(as, 0.0), pt(at, 0.0);
  for (std::size_t s = 0; s < as; ++s)
    for (std::size_t t = 0; t < at; ++t) {
      ps[s] += pst[s * at + t];
      pt[t] += pst[s * at + t];
    }
  std::vector<double> out(at, 0.0);
  for (std::size_t t = 0; t < at; ++t) {
    if (!(pt[t] > 0.0)) continue;
    for (std::size_t s = 0; s < as; ++s) {
      const double joint = pst[s * at + t];
      if (!(joint > 0.0)) continue;
      const double s_given_t = joint / pt[t];
      const double t_given_s = joint / ps[s];
      out[t] += s_given_t * (std::log2(t_given_s) - std::log2(pt[t]));
    }
  }
  return out;
}

}  // namespace detail

/// Two-source Williams-Beer decomposition with the I_min redundancy.
inline PidAtoms pid_williams_beer(const JointDistribution3& d) {
  d.validate();
  const std::size_t at = d.alphabet_t;
  std::vector<double> pt(at, 0.0);
  for (std::size_t s1 = 0; s1 < d.alphabet_s1; ++s1)
    for (std::size_t s2 = 0; s2 < d.alphabet_s2; ++s2)
      for (std::size_t t = 0; t < at; ++t) pt[t] += d(s1, s2, t);
  const auto live_targets = std::count_if(pt.begin(), pt.end(), [](double v) { return v > 0.0; });
  PidAtoms out;
  if (live_targets < 2) return out;

  const auto p1 = detail::source_target_marginal(d, true);
  const auto p2 = detail::source_target_marginal(d, false);
  out.mi_s1 = detail::mi_from_joint(p1, d.alphabet_s1, at);
  out.mi_s2 = detail::mi_from_joint(p2, d.alphabet_s2, at);
  // Joint source treated as one variable with alphabet a1 * a2.
  out.mi_joint = detail::mi_from_joint(d.p, d.alphabet_s1 * d.alphabet_s2, at);

  const auto spec1 = detail::specific_information(p1, d.alphabet_s1, at);
  const auto spec2 = detail::specific_information(p2, d.alphabet_s2, at);
  for (std::size_t t = 0; t < at; ++t) out.redundancy += pt[t] * std::min(spec1[t], spec2[t]);
  out.unique_1 = out.mi_s1 - out.redundancy;
  out.unique_2 = out.mi_s2 - out.redundancy;
  out.synergy = out.mi_joint - out.mi_s1 - out.mi_s2 + out.redundancy;
  return out;
}

/// Empirical distribution of three discrete columns over a shared alphabet.
inline JointDistribution3 empirical_distribution(Column s1, Column s2, Column t, std::size_t alphabet) {
  if (s1.size() != s2.size() || s1.size() != t.size()) fail(ErrorKind::InvalidArgument, "columns differ in length");
  if (s1.empty()) fail(ErrorKind::InvalidArgument, "no observations");
  JointDistribution3 d(alphabet, alphabet, alphabet);
  for (std::size_t i = 0; i < s1.size(); ++i)
    d(detail::symbol_of(s1[i], alphabet), detail::symbol_of(s2[i], alphabet), detail::symbol_of(t[i], alphabet)) += 1.0;
  const double n = static_cast<double>(s1.size());
  for (double& v : d.p) v /= n;
  return d;
}

inline PidAtoms pid_from_data(Column s1, Column s2, Column t, std::size_t alphabet) {
  return pid_williams_beer(empirical_distribution(s1, s2, t, alphabet));
}

}  // namespace infodyn
