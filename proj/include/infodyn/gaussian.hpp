#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "infodyn/error.hpp"
#include "infodyn/estimator.hpp"

namespace infodyn {

namespace linalg {

/// Dot product with four independent accumulators; the summation order is
/// fixed, so results are reproducible.
inline double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

/// Dense row-major square matrix, small sizes only.
struct Matrix {
  std::size_t n = 0;
  std::vector<double> a;

  explicit Matrix(std::size_t size = 0) : n(size), a(size * size, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

/// Cholesky factor of the sub-matrix on `kept` indices. With `drop`,
/// indices whose residual pivot falls to `tol` times their reference
/// variance (the diagonal entry unless `reference` is given) are linearly
/// determined by earlier ones and are skipped; without it such a pivot marks
/// the factorization as failed.
struct Cholesky {
  std::vector<std::size_t> kept;
  std::vector<double> lower;  // kept.size() squared, row-major
  double logdet = 0.0;        // natural log of det over kept indices
  bool ok = true;

  std::size_t size() const noexcept { return kept.size(); }
  double l(std::size_t i, std::size_t j) const { return lower[i * kept.size() + j]; }
};

inline Cholesky cholesky(const Matrix& s, std::span<const std::size_t> order, bool drop, double tol,
                         std::span<const double> reference = {}) {
  Cholesky out;
  std::vector<std::vector<double>> rows;  // rows of L for kept indices
  for (std::size_t idx : order) {
    const std::size_t k = rows.size();
    std::vector<double> row(k + 1, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      double v = s(idx, out.kept[j]);
      for (std::size_t m = 0; m < j; ++m) v -= row[m] * rows[j][m];
      row[j] = v / rows[j][j];
    }
    double pivot = s(idx, idx);
    for (std::size_t m = 0; m < k; ++m) pivot -= row[m] * row[m];
    const double diag = reference.empty() ? s(idx, idx) : reference[idx];
    if (!(diag > 0.0) || !(pivot > tol * diag)) {
      if (drop) continue;
      out.ok = false;
      return out;
    }
    row[k] = std::sqrt(pivot);
    out.logdet += std::log(pivot);
    out.kept.push_back(idx);
    rows.push_back(std::move(row));
  }
  const std::size_t k = rows.size();
  out.lower.assign(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j <= i; ++j) out.lower[i * k + j] = rows[i][j];
  return out;
}

/// Solves L v = b in place.
inline void forward_solve(const Cholesky& c, std::span<double> b) {
  const std::size_t k = c.size();
  for (std::size_t i = 0; i < k; ++i) {
    double v = b[i];
    for (std::size_t j = 0; j < i; ++j) v -= c.l(i, j) * b[j];
    b[i] = v / c.l(i, i);
  }
}

}  // namespace linalg

/// Residual pivots at or below this fraction of a variable's variance mark
/// it as an exact linear function of the variables before it.
inline constexpr double kCollinearTolerance = 1e-12;

namespace detail {

inline std::vector<double> centered(Column c) {
  double mean = 0.0;
  for (double v : c) mean += v;
  mean /= static_cast<double>(c.size());
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i] - mean;
  return out;
}

/// Gaussian model of I(X;Y|Z) with Y and Z fixed.
///
/// Everything is expressed through Schur complements with respect to Z:
/// I = 1/2 [log det S_X + log det S_Y - log det S_XY], which equals the
/// four-determinant form whenever all covariances are positive definite.
/// Conditioning columns that are exact linear functions of earlier ones are
/// dropped (they carry no extra information); a Y or X block that is entirely
/// determined by Z yields zero.
class GaussianModel {
 public:
  GaussianModel(const ColumnSet& y, const ColumnSet& z) {
    if (y.empty()) fail(ErrorKind::InvalidArgument, "Gaussian estimator needs a non-empty Y");
    n_ = y.front().size();
    for (const auto& c : y) yc_.push_back(centered(c));
    std::vector<std::vector<double>> zall;
    for (const auto& c : z) {
      if (c.size() != n_) fail(ErrorKind::InvalidArgument, "columns differ in length");
      zall.push_back(centered(c));
    }
    if (n_ < 2) fail(ErrorKind::InsufficientSamples, "need at least two observations");
    const double denom = static_cast<double>(n_ - 1);

    // Reduce Z to a linearly independent subset.
    linalg::Matrix czz(zall.size());
    for (std::size_t i = 0; i < zall.size(); ++i)
      for (std::size_t j = 0; j <= i; ++j) czz(i, j) = czz(j, i) = linalg::dot(zall[i], zall[j]) / denom;
    std::vector<std::size_t> order(zall.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    lz_ = linalg::cholesky(czz, order, true, kCollinearTolerance);
    for (std::size_t idx : lz_.kept) zc_.push_back(std::move(zall[idx]));
    // Re-index the factor to the compacted Z.
    for (std::size_t i = 0; i < lz_.kept.size(); ++i) lz_.kept[i] = i;

    const std::size_t dy = yc_.size();
    wy_.resize(dy);
    for (std::size_t a = 0; a < dy; ++a) wy_[a] = projection(yc_[a]);
    syy_ = linalg::Matrix(dy);
    for (std::size_t a = 0; a < dy; ++a)
      for (std::size_t b = 0; b <= a; ++b) {
        const double v = linalg::dot(yc_[a], yc_[b]) / denom - linalg::dot(wy_[a], wy_[b]);
        syy_(a, b) = syy_(b, a) = v;
      }
    std::vector<std::size_t> yorder(dy);
    for (std::size_t i = 0; i < dy; ++i) yorder[i] = i;
    ly_ = reduce_block(syy_, yc_, yorder);
  }

  std::size_t rows() const noexcept { return n_; }

  double cmi(const ColumnSet& x) const { return evaluate(x, nullptr); }

  InfoValue cmi_with_local(const ColumnSet& x) const {
    InfoValue out;
    out.local.assign(n_, 0.0);
    out.value = evaluate(x, &out.local);
    return out;
  }

 private:
  /// W = L_Z^{-1} C_Z,col
  std::vector<double> projection(const std::vector<double>& col) const {
    const double denom = static_cast<double>(n_ - 1);
    std::vector<double> w(zc_.size());
    for (std::size_t j = 0; j < zc_.size(); ++j) w[j] = linalg::dot(zc_[j], col) / denom;
    linalg::forward_solve(lz_, w);
    return w;
  }

  /// Drops block members whose conditional variance vanishes relative to
  /// their unconditional variance.
  linalg::Cholesky reduce_block(const linalg::Matrix& schur, const std::vector<std::vector<double>>& cols,
                                std::span<const std::size_t> order) const {
    const double denom = static_cast<double>(n_ - 1);
    std::vector<double> marginal(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i) marginal[i] = linalg::dot(cols[i], cols[i]) / denom;
    return linalg::cholesky(schur, order, true, kCollinearTolerance, marginal);
  }

  double evaluate(const ColumnSet& x, std::vector<double>* local) const;

  std::size_t n_ = 0;
  std::vector<std::vector<double>> yc_;
  std::vector<std::vector<double>> zc_;
  linalg::Cholesky lz_;
  std::vector<std::vector<double>> wy_;
  linalg::Matrix syy_;
  linalg::Cholesky ly_;
};

inline double GaussianModel::evaluate(const ColumnSet& x, std::vector<double>* local) const {
  if (x.empty()) fail(ErrorKind::InvalidArgument, "Gaussian estimator needs a non-empty X");
  for (const auto& c : x)
    if (c.size() != n_) fail(ErrorKind::InvalidArgument, "columns differ in length");
  const std::size_t dx = x.size();
  const std::size_t dy = yc_.size();
  if (n_ < dx + dy + zc_.size() + 2)
    fail(ErrorKind::InsufficientSamples, "too few observations for the Gaussian estimator");
  const double denom = static_cast<double>(n_ - 1);

  std::vector<std::vector<double>> xc;
  xc.reserve(dx);
  for (const auto& c : x) xc.push_back(centered(c));
  std::vector<std::vector<double>> wx(dx);
  for (std::size_t a = 0; a < dx; ++a) wx[a] = projection(xc[a]);

  // Joint Schur complement over [X, Y].
  const std::size_t d = dx + dy;
  linalg::Matrix s(d);
  for (std::size_t a = 0; a < dx; ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      const double v = linalg::dot(xc[a], xc[b]) / denom - linalg::dot(wx[a], wx[b]);
      s(a, b) = s(b, a) = v;
    }
    for (std::size_t b = 0; b < dy; ++b) {
      const double v = linalg::dot(xc[a], yc_[b]) / denom - linalg::dot(wx[a], wy_[b]);
      s(a, dx + b) = s(dx + b, a) = v;
    }
  }
  for (std::size_t a = 0; a < dy; ++a)
    for (std::size_t b = 0; b < dy; ++b) s(dx + a, dx + b) = syy_(a, b);

  std::vector<std::size_t> xorder(dx);
  for (std::size_t i = 0; i < dx; ++i) xorder[i] = i;
  linalg::Matrix sxx(dx);
  for (std::size_t a = 0; a < dx; ++a)
    for (std::size_t b = 0; b < dx; ++b) sxx(a, b) = s(a, b);
  const linalg::Cholesky lx = reduce_block(sxx, xc, xorder);

  if (lx.size() == 0 || ly_.size() == 0) return 0.0;  // locals stay zero

  std::vector<std::size_t> joint;
  for (std::size_t i : lx.kept) joint.push_back(i);
  for (std::size_t i : ly_.kept) joint.push_back(dx + i);
  const linalg::Cholesky lj = linalg::cholesky(s, joint, false, kCollinearTolerance);
  if (!lj.ok) fail(ErrorKind::SingularCovariance, "X and Y are linearly dependent given Z");
  constexpr double kMinLogDet = -690.7755278982137;  // ln(1e-300)
  if (lj.logdet <= kMinLogDet || lx.logdet <= kMinLogDet || ly_.logdet <= kMinLogDet)
    fail(ErrorKind::SingularCovariance, "covariance determinant underflow");

  double value;
  if (lx.size() == 1 && ly_.size() == 1) {
    // Partial-correlation form; symmetric in X and Y bit for bit.
    const std::size_t i = lx.kept[0];
    const std::size_t j = dx + ly_.kept[0];
    const double rho2 = (s(i, j) * s(i, j)) / (s(i, i) * s(j, j));
    if (!(1.0 - rho2 > kCollinearTolerance))
      fail(ErrorKind::SingularCovariance, "X and Y are linearly dependent given Z");
    value = -0.5 * std::log2(1.0 - rho2);
  } else {
    value = 0.5 * (lx.logdet + ly_.logdet - lj.logdet) / std::numbers::ln2;
  }

  if (local) {
    const double base = 0.5 * (lx.logdet + ly_.logdet - lj.logdet);
    const std::size_t kz = zc_.size();
    std::vector<double> u(kz), r(d), bx, by, bj;
    for (std::size_t t = 0; t < n_; ++t) {
      for (std::size_t j = 0; j < kz; ++j) u[j] = zc_[j][t];
      linalg::forward_solve(lz_, u);
      for (std::size_t a = 0; a < dx; ++a) r[a] = xc[a][t] - linalg::dot(wx[a], u);
      for (std::size_t b = 0; b < dy; ++b) r[dx + b] = yc_[b][t] - linalg::dot(wy_[b], u);
      auto quad = [&](const linalg::Cholesky& c, std::size_t offset, std::vector<double>& buf) {
        buf.resize(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) buf[i] = r[offset + c.kept[i]];
        linalg::forward_solve(c, buf);
        double q = 0.0;
        for (double v : buf) q += v * v;
        return q;
      };
      const double qx = quad(lx, 0, bx);
      const double qy = quad(ly_, dx, by);
      const double qj = quad(lj, 0, bj);
      (*local)[t] = (base + 0.5 * (qx + qy - qj)) / std::numbers::ln2;
    }
  }
  return value;
}

}  // namespace detail

/// Linear-Gaussian estimator (Granger-causality equivalent for TE).
class GaussianEstimator final : public Estimator {
 public:
  InfoValue cmi(const ColumnSet& x, const ColumnSet& y, const ColumnSet& z,
                bool with_local = false) const override {
    detail::common_rows(x, y, z);
    detail::GaussianModel model(y, z);
    if (with_local) return model.cmi_with_local(x);
    return InfoValue{model.cmi(x), {}};
  }

  std::unique_ptr<CmiKernel> prepare(const ColumnSet& y, const ColumnSet& z) const override {
    return std::make_unique<Kernel>(y, z);
  }

  std::string name() const override { return "gaussian"; }

 private:
  class Kernel final : public CmiKernel {
   public:
    Kernel(const ColumnSet& y, const ColumnSet& z) : model_(y, z) {}
    double cmi(const ColumnSet& x) const override { return model_.cmi(x); }

   private:
    detail::GaussianModel model_;
  };
};

inline InfoValue gaussian_mi(const ColumnSet& x, const ColumnSet& y, bool with_local = false) {
  return GaussianEstimator{}.cmi(x, y, {}, with_local);
}

inline InfoValue gaussian_cmi(const ColumnSet& x, const ColumnSet& y, const ColumnSet& z,
                              bool with_local = false) {
  return GaussianEstimator{}.cmi(x, y, z, with_local);
}

}  // namespace infodyn
