#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

namespace testing_support {

inline std::vector<double> gaussian_noise(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

inline std::vector<double> uniform_noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline std::vector<double> random_symbols(std::size_t n, std::size_t alphabet, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> u(0, alphabet - 1);
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(u(rng));
  return v;
}

/// Pair (x, y) with correlation rho in population.
inline std::pair<std::vector<double>, std::vector<double>> correlated_pair(std::size_t n, double rho,
                                                                           std::uint64_t seed) {
  auto x = gaussian_noise(n, seed);
  auto e = gaussian_noise(n, seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = rho * x[i] + std::sqrt(1.0 - rho * rho) * e[i];
  return {x, y};
}

inline double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

/// Residual of y after ordinary least squares on the columns of z (with an
/// intercept), via normal equations solved by Gaussian elimination.
inline std::vector<double> ols_residual(const std::vector<double>& y, const std::vector<std::vector<double>>& z) {
  const std::size_t n = y.size(), k = z.size() + 1;
  auto reg = [&](std::size_t j, std::size_t i) { return j == 0 ? 1.0 : z[j - 1][i]; };
  std::vector<std::vector<double>> a(k, std::vector<double>(k + 1, 0.0));
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t i = 0; i < n; ++i) a[r][c] += reg(r, i) * reg(c, i);
    for (std::size_t i = 0; i < n; ++i) a[r][k] += reg(r, i) * y[i];
  }
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < k; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (std::size_t r = 0; r < k; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t j = c; j <= k; ++j) a[r][j] -= f * a[c][j];
    }
  }
  std::vector<double> beta(k);
  for (std::size_t j = 0; j < k; ++j) beta[j] = a[j][k] / a[j][j];
  std::vector<double> res(n);
  for (std::size_t i = 0; i < n; ++i) {
    double fit = 0;
    for (std::size_t j = 0; j < k; ++j) fit += beta[j] * reg(j, i);
    res[i] = y[i] - fit;
  }
  return res;
}

/// -1/2 log2(1 - rho^2) for the partial correlation of x and y given z.
inline double partial_correlation_bits(const std::vector<double>& x, const std::vector<double>& y,
                                       const std::vector<std::vector<double>>& z) {
  const double r = pearson(ols_residual(x, z), ols_residual(y, z));
  return -0.5 * std::log2(1.0 - r * r);
}

inline double chebyshev(const std::vector<std::vector<double>>& cols, std::size_t a, std::size_t b) {
  double d = 0;
  for (const auto& c : cols) d = std::max(d, std::abs(c[a] - c[b]));
  return d;
}

/// Brute-force k-th neighbour distance under the max norm, self excluded.
inline double brute_kth(const std::vector<std::vector<double>>& cols, std::size_t i, std::size_t k) {
  std::vector<double> d;
  for (std::size_t j = 0; j < cols.front().size(); ++j)
    if (j != i) d.push_back(chebyshev(cols, i, j));
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
  return d[k - 1];
}

/// Brute-force count of points strictly within radius of point i, self excluded.
inline std::size_t brute_count(const std::vector<std::vector<double>>& cols, std::size_t i, double radius) {
  std::size_t c = 0;
  for (std::size_t j = 0; j < cols.front().size(); ++j)
    if (j != i && chebyshev(cols, i, j) < radius) ++c;
  return c;
}

/// Digamma at positive integers from harmonic numbers.
inline double harmonic_digamma(std::size_t n) {
  double h = 0.0;
  for (std::size_t k = 1; k < n; ++k) h += 1.0 / static_cast<double>(k);
  return h - 0.57721566490153286060651209;
}

/// Plug-in entropy of joint tuples built with std::map, bits.
inline double map_entropy(const std::vector<std::vector<double>>& cols) {
  std::map<std::vector<double>, double> counts;
  const std::size_t n = cols.front().size();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> key;
    for (const auto& c : cols) key.push_back(c[i]);
    counts[key] += 1.0;
  }
  double h = 0;
  for (const auto& [k, c] : counts) h -= c / static_cast<double>(n) * std::log2(c / static_cast<double>(n));
  return h;
}

/// I(X;Y|Z) = H(XZ) + H(YZ) - H(Z) - H(XYZ) via map_entropy.
inline double map_cmi(const std::vector<std::vector<double>>& x, const std::vector<std::vector<double>>& y,
                      const std::vector<std::vector<double>>& z) {
  auto cat = [](std::initializer_list<const std::vector<std::vector<double>>*> parts) {
    std::vector<std::vector<double>> out;
    for (const auto* p : parts) out.insert(out.end(), p->begin(), p->end());
    return out;
  };
  const double hz = z.empty() ? 0.0 : map_entropy(z);
  return map_entropy(cat({&x, &z})) + map_entropy(cat({&y, &z})) - hz - map_entropy(cat({&x, &y, &z}));
}

/// Benjamini-Hochberg written out directly: reject the k smallest where k is
/// the largest rank with p_(k) <= k alpha / m.
inline std::vector<bool> hand_bh(const std::vector<double>& p, double alpha, std::size_t m) {
  std::vector<double> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  double cut = -1.0;
  for (std::size_t k = 1; k <= sorted.size(); ++k)
    if (sorted[k - 1] <= static_cast<double>(k) * alpha / static_cast<double>(m)) cut = sorted[k - 1];
  std::vector<bool> out;
  for (double v : p) out.push_back(v <= cut);
  return out;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("infodyn_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

  std::filesystem::path write(const std::string& name, const std::string& content) const {
    std::ofstream(file(name), std::ios::binary) << content;
    return file(name);
  }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing_support
