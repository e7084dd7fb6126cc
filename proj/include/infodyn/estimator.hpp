#pragma once

#include <cstddef>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "infodyn/error.hpp"

namespace infodyn {

using Column = std::span<const double>;
using ColumnSet = std::vector<Column>;

/// An information quantity in bits, optionally with per-observation local
/// values whose mean is the global value.
struct InfoValue {
  double value = 0.0;
  std::vector<double> local;
};

/// Conditional MI with the second argument and the conditioning set held
/// fixed; only the first argument varies between calls. Used by the
/// permutation loops, where thousands of surrogate columns are scored against
/// one target/conditioning pair. Implementations are immutable after
/// construction and safe to call concurrently.
class CmiKernel {
 public:
  virtual ~CmiKernel() = default;
  virtual double cmi(const ColumnSet& x) const = 0;
};

class Estimator {
 public:
  virtual ~Estimator() = default;

  /// I(X;Y|Z) in bits. Z may be empty.
  virtual InfoValue cmi(const ColumnSet& x, const ColumnSet& y, const ColumnSet& z,
                        bool with_local = false) const = 0;

  InfoValue mi(const ColumnSet& x, const ColumnSet& y, bool with_local = false) const {
    return cmi(x, y, {}, with_local);
  }

  /// The referenced columns must outlive the returned kernel.
  virtual std::unique_ptr<CmiKernel> prepare(const ColumnSet& y, const ColumnSet& z) const {
    return std::make_unique<GenericKernel>(*this, y, z);
  }

  virtual std::string name() const = 0;

 private:
  class GenericKernel final : public CmiKernel {
   public:
    GenericKernel(const Estimator& est, ColumnSet y, ColumnSet z)
        : est_(est), y_(std::move(y)), z_(std::move(z)) {}
    double cmi(const ColumnSet& x) const override { return est_.cmi(x, y_, z_, false).value; }

   private:
    const Estimator& est_;
    ColumnSet y_;
    ColumnSet z_;
  };
};

namespace detail {

inline std::size_t common_rows(const ColumnSet& x, const ColumnSet& y, const ColumnSet& z) {
  if (x.empty() || y.empty()) fail(ErrorKind::InvalidArgument, "estimator needs non-empty X and Y");
  const std::size_t n = x.front().size();
  auto check = [n](const ColumnSet& s) {
    for (const auto& c : s)
      if (c.size() != n) fail(ErrorKind::InvalidArgument, "columns differ in length");
  };
  check(x);
  check(y);
  check(z);
  return n;
}

/// Mean in index order; every estimator reports value = mean(local) this way.
inline double ordered_mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace detail

}  // namespace infodyn
