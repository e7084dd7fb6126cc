#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "infodyn/error.hpp"
#include "infodyn/estimator.hpp"

namespace infodyn {

inline constexpr std::uint64_t kDefaultStateCap = 10'000'000;

/// Sparse joint histogram over symbol tuples, keyed by the mixed-radix code
/// of the tuple.
struct JointCounts {
  std::vector<std::size_t> alphabets;
  std::unordered_map<std::uint64_t, std::uint64_t> counts;
  std::uint64_t total = 0;

  std::uint64_t encode(const std::vector<std::size_t>& tuple) const {
    std::uint64_t code = 0;
    for (std::size_t d = alphabets.size(); d-- > 0;) {
      if (tuple[d] >= alphabets[d]) fail(ErrorKind::InvalidValue, "symbol outside its alphabet");
      code = code * alphabets[d] + tuple[d];
    }
    return code;
  }

  void add(const std::vector<std::size_t>& tuple, std::uint64_t count = 1) {
    counts[encode(tuple)] += count;
    total += count;
  }
};

namespace detail {

inline std::size_t symbol_of(double v, std::size_t alphabet) {
  if (v < 0 || v != std::floor(v) || v >= static_cast<double>(alphabet))
    fail(ErrorKind::InvalidValue, "value " + std::to_string(v) + " is not a symbol of alphabet " +
                                      std::to_string(alphabet));
  return static_cast<std::size_t>(v);
}

/// Mixed-radix codes of each row of `cols`.
inline std::vector<std::uint64_t> encode_rows(const ColumnSet& cols, std::size_t n, std::size_t alphabet) {
  std::vector<std::uint64_t> codes(n, 0);
  for (const auto& c : cols)
    for (std::size_t i = 0; i < n; ++i) codes[i] = codes[i] * alphabet + symbol_of(c[i], alphabet);
  return codes;
}

inline std::unordered_map<std::uint64_t, std::uint64_t> histogram(const std::vector<std::uint64_t>& codes) {
  std::unordered_map<std::uint64_t, std::uint64_t> h;
  h.reserve(codes.size());
  for (auto c : codes) ++h[c];
  return h;
}

inline void check_state_space(std::size_t alphabet, std::size_t dims, std::uint64_t cap) {
  double states = 1.0;
  for (std::size_t d = 0; d < dims; ++d) states *= static_cast<double>(alphabet);
  if (states > static_cast<double>(cap))
    fail(ErrorKind::StateSpaceTooLarge, "joint state space of " + std::to_string(dims) +
                                            " variables over alphabet " + std::to_string(alphabet) +
                                            " exceeds the cap of " + std::to_string(cap));
}

}  // namespace detail

/// Plug-in entropy of a histogram, bits.
inline double plugin_entropy(const JointCounts& jc) {
  if (jc.total == 0) fail(ErrorKind::InvalidArgument, "entropy of empty counts");
  const double n = static_cast<double>(jc.total);
  double h = 0.0;
  for (const auto& [code, c] : jc.counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

/// Plug-in entropy of the joint rows of `cols`, with local values
/// -log2 p(row).
inline InfoValue plugin_entropy(const ColumnSet& cols, std::size_t alphabet,
                                std::uint64_t state_cap = kDefaultStateCap) {
  if (cols.empty() || cols.front().empty()) fail(ErrorKind::InvalidArgument, "entropy of empty data");
  const std::size_t n = cols.front().size();
  for (const auto& c : cols)
    if (c.size() != n) fail(ErrorKind::InvalidArgument, "columns differ in length");
  detail::check_state_space(alphabet, cols.size(), state_cap);
  const auto codes = detail::encode_rows(cols, n, alphabet);
  const auto h = detail::histogram(codes);
  InfoValue out;
  out.local.resize(n);
  const double total = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) out.local[i] = -std::log2(static_cast<double>(h.at(codes[i])) / total);
  out.value = detail::ordered_mean(out.local);
  return out;
}

/// Plug-in conditional mutual information, bits. Local value of row i is
/// log2[ c(xyz) c(z) / (c(xz) c(yz)) ]; the global value is their mean and
/// equals H(XZ) + H(YZ) - H(Z) - H(XYZ).
inline InfoValue plugin_cmi(const ColumnSet& x, const ColumnSet& y, const ColumnSet& z, std::size_t alphabet,
                            std::uint64_t state_cap = kDefaultStateCap) {
  const std::size_t n = detail::common_rows(x, y, z);
  if (n == 0) fail(ErrorKind::InvalidArgument, "no observations");
  detail::check_state_space(alphabet, x.size() + y.size() + z.size(), state_cap);
  const auto cx = detail::encode_rows(x, n, alphabet);
  const auto cy = detail::encode_rows(y, n, alphabet);
  const auto cz = detail::encode_rows(z, n, alphabet);
  std::uint64_t rx = 1, ry = 1;
  for (std::size_t d = 0; d < x.size(); ++d) rx *= alphabet;
  for (std::size_t d = 0; d < y.size(); ++d) ry *= alphabet;
  std::vector<std::uint64_t> xz(n), yz(n), xyz(n);
  for (std::size_t i = 0; i < n; ++i) {
    xz[i] = cz[i] * rx + cx[i];
    yz[i] = cz[i] * ry + cy[i];
    xyz[i] = (cz[i] * ry + cy[i]) * rx + cx[i];
  }
  const auto hz = detail::histogram(cz);
  const auto hxz = detail::histogram(xz);
  const auto hyz = detail::histogram(yz);
  const auto hxyz = detail::histogram(xyz);
  InfoValue out;
  out.local.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double num = static_cast<double>(hxyz.at(xyz[i])) * static_cast<double>(hz.at(cz[i]));
    const double den = static_cast<double>(hxz.at(xz[i])) * static_cast<double>(hyz.at(yz[i]));
    out.local[i] = std::log2(num / den);
  }
  out.value = detail::ordered_mean(out.local);
  return out;
}

class DiscreteEstimator final : public Estimator {
 public:
  explicit DiscreteEstimator(std::size_t alphabet, std::uint64_t state_cap = kDefaultStateCap)
      : alphabet_(alphabet), state_cap_(state_cap) {
    if (alphabet_ == 0) fail(ErrorKind::InvalidArgument, "alphabet size must be positive");
  }

  InfoValue cmi(const ColumnSet& x, const ColumnSet& y, const ColumnSet& z,
                bool with_local = false) const override {
    InfoValue v = plugin_cmi(x, y, z, alphabet_, state_cap_);
    if (!with_local) v.local.clear();
    return v;
  }

  std::string name() const override { return "discrete"; }
  std::size_t alphabet() const noexcept { return alphabet_; }

 private:
  std::size_t alphabet_;
  std::uint64_t state_cap_;
};

}  // namespace infodyn
