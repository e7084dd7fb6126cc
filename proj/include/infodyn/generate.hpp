#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "infodyn/data.hpp"
#include "infodyn/error.hpp"
#include "infodyn/inference.hpp"
#include "infodyn/parallel.hpp"

namespace infodyn {

enum class GeneratorKind { gaussian_ar, logistic_map_network };

struct TopologyLink {
  std::size_t source = 0;
  std::size_t target = 0;
  std::size_t lag = 1;
  double coefficient = 0.0;

  friend bool operator==(const TopologyLink&, const TopologyLink&) = default;
};

struct GroundTruthSpec {
  std::size_t n_processes = 1;
  std::vector<TopologyLink> topology;
  double noise_scale = 1.0;
  GeneratorKind generator = GeneratorKind::gaussian_ar;
  std::size_t n_samples = 1000;
  std::size_t n_replications = 1;
  std::uint64_t seed = 0;
  bool binarize = false;  // logistic maps only
  std::size_t burn_in = 1000;
};

inline void validate_topology(const GroundTruthSpec& g) {
  if (g.n_processes == 0) fail(ErrorKind::InvalidArgument, "need at least one process");
  if (g.n_samples == 0 || g.n_replications == 0) fail(ErrorKind::InvalidArgument, "need samples and replications");
  for (const auto& l : g.topology) {
    if (l.source >= g.n_processes || l.target >= g.n_processes)
      fail(ErrorKind::InvalidArgument,
           "topology link " + std::to_string(l.source) + "->" + std::to_string(l.target) + " names a missing process");
    if (l.lag == 0) fail(ErrorKind::InvalidArgument, "topology lags must be at least 1");
    if (!std::isfinite(l.coefficient)) fail(ErrorKind::InvalidArgument, "non-finite coefficient");
  }
}

/// Spectral radius of the VAR companion matrix implied by the topology.
inline double spectral_radius(const GroundTruthSpec& g) {
  validate_topology(g);
  std::size_t max_lag = 1;
  for (const auto& l : g.topology) max_lag = std::max(max_lag, l.lag);
  const auto p = static_cast<Eigen::Index>(g.n_processes);
  const auto dim = p * static_cast<Eigen::Index>(max_lag);
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& l : g.topology)
    companion(static_cast<Eigen::Index>(l.target),
              static_cast<Eigen::Index>((l.lag - 1) * g.n_processes + l.source)) += l.coefficient;
  for (Eigen::Index i = p; i < dim; ++i) companion(i, i - p) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

namespace detail {

inline Dataset generate_gaussian_ar(const GroundTruthSpec& g) {
  if (spectral_radius(g) >= 1.0) fail(ErrorKind::Unstable, "companion spectral radius is not below 1");
  std::size_t max_lag = 1;
  for (const auto& l : g.topology) max_lag = std::max(max_lag, l.lag);
  const std::size_t P = g.n_processes;
  const std::size_t T = g.n_samples;
  const std::size_t R = g.n_replications;
  std::vector<double> values(P * T * R);
  for (std::size_t r = 0; r < R; ++r) {
    std::mt19937_64 rng(derive_seed(g.seed, 0x676175U, r));
    std::normal_distribution<double> noise(0.0, 1.0);
    const std::size_t total = g.burn_in + T;
    std::vector<std::vector<double>> x(P, std::vector<double>(total, 0.0));
    for (std::size_t t = 0; t < total; ++t) {
      for (std::size_t p = 0; p < P; ++p) x[p][t] = g.noise_scale * noise(rng);
      for (const auto& l : g.topology)
        if (t >= l.lag) x[l.target][t] += l.coefficient * x[l.source][t - l.lag];
    }
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t t = 0; t < T; ++t) values[(p * T + t) * R + r] = x[p][g.burn_in + t];
  }
  return Dataset(P, T, R, std::move(values));
}

/// x_i(t) = (1 - c_i) f(x_i(t-1)) + sum_j c_ji f(x_j(t - lag)), f(x) = 4x(1-x),
/// with c_i the total incoming coupling of process i.
inline Dataset generate_logistic(const GroundTruthSpec& g) {
  const std::size_t P = g.n_processes;
  std::vector<double> incoming(P, 0.0);
  for (const auto& l : g.topology) {
    if (l.coefficient < 0.0) fail(ErrorKind::InvalidArgument, "logistic couplings must be non-negative");
    incoming[l.target] += l.coefficient;
  }
  for (double c : incoming)
    if (c > 1.0) fail(ErrorKind::Unstable, "total incoming coupling above 1 leaves the unit interval");
  const std::size_t T = g.n_samples;
  const std::size_t R = g.n_replications;
  std::size_t max_lag = 1;
  for (const auto& l : g.topology) max_lag = std::max(max_lag, l.lag);
  auto f = [](double v) { return 4.0 * v * (1.0 - v); };
  std::vector<double> values(P * T * R);
  for (std::size_t r = 0; r < R; ++r) {
    std::mt19937_64 rng(derive_seed(g.seed, 0x6c6f67U, r));
    std::uniform_real_distribution<double> u(0.05, 0.95);
    const std::size_t total = g.burn_in + T + max_lag;
    std::vector<std::vector<double>> x(P, std::vector<double>(total, 0.0));
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t t = 0; t < max_lag; ++t) x[p][t] = u(rng);
    for (std::size_t t = max_lag; t < total; ++t) {
      for (std::size_t p = 0; p < P; ++p) x[p][t] = (1.0 - incoming[p]) * f(x[p][t - 1]);
      for (const auto& l : g.topology) x[l.target][t] += l.coefficient * f(x[l.source][t - l.lag]);
      // Keeps finite-precision orbits off the absorbing point 0.
      for (std::size_t p = 0; p < P; ++p) x[p][t] = std::clamp(x[p][t], 1e-12, 1.0 - 1e-12);
    }
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t t = 0; t < T; ++t) {
        const double v = x[p][g.burn_in + max_lag + t];
        values[(p * T + t) * R + r] = g.binarize ? (v >= 0.5 ? 1.0 : 0.0) : v;
      }
  }
  if (g.binarize) return Dataset(P, T, R, std::move(values), DataKind::discrete, 2);
  return Dataset(P, T, R, std::move(values));
}

}  // namespace detail

/// Synthetic data with known ground-truth connectivity.
inline Dataset generate(const GroundTruthSpec& g) {
  validate_topology(g);
  return g.generator == GeneratorKind::gaussian_ar ? detail::generate_gaussian_ar(g) : detail::generate_logistic(g);
}

struct LinkScore {
  double precision = 1.0;
  double recall = 1.0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
};

/// Precision and recall of inferred (source, target) pairs against a
/// ground-truth topology. Self-links in the topology are ignored.
inline LinkScore score_links(std::span<const TopologyLink> truth, std::span<const Link> inferred) {
  std::set<std::pair<std::size_t, std::size_t>> t, i;
  for (const auto& l : truth)
    if (l.source != l.target && l.coefficient != 0.0) t.insert({l.source, l.target});
  for (const auto& l : inferred) i.insert({l.source, l.target});
  LinkScore s;
  for (const auto& e : i) (t.count(e) ? s.true_positives : s.false_positives)++;
  for (const auto& e : t) s.false_negatives += i.count(e) ? 0 : 1;
  if (!i.empty()) s.precision = static_cast<double>(s.true_positives) / static_cast<double>(i.size());
  if (!t.empty()) s.recall = static_cast<double>(s.true_positives) / static_cast<double>(t.size());
  return s;
}

}  // namespace infodyn
