#pragma once

// Independent reference computations used only by tests. None of these share
// code paths with the library implementations they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace facework::testkit {

// U1 by direct pair counting: +1 for each a > b pair, +0.5 for ties.
inline double pair_count_u(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0.0;
  for (double x : a)
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  return u;
}

// Two-sided permutation p-value: enumerate every way to pick |a| of the
// pooled values as the first sample and compare U1 against the observed one.
inline double brute_force_mwu_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size();
  const std::size_t n1 = a.size();
  const double observed = pair_count_u(a, b);
  double total = 0.0, low = 0.0, high = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != n1) continue;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1u ? x : y).push_back(pooled[i]);
    const double u = pair_count_u(x, y);
    total += 1.0;
    if (u <= observed + 1e-12) low += 1.0;
    if (u >= observed - 1e-12) high += 1.0;
  }
  return std::min(1.0, 2.0 * std::min(low / total, high / total));
}

// Pearson r from raw sums (a different algebraic route from centered sums).
inline double raw_sum_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

// Central finite differences of f at params.
inline std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                               std::vector<double> params, double h = 1e-5) {
  std::vector<double> grad(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double keep = params[k];
    params[k] = keep + h;
    const double up = f(params);
    params[k] = keep - h;
    const double down = f(params);
    params[k] = keep;
    grad[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

// Two-sided Monte Carlo permutation p-value for a difference in means, with
// the +1 correction so it is never zero.
inline double permutation_mean_diff_p(const std::vector<double>& a, const std::vector<double>& b,
                                      std::size_t rounds, std::uint64_t seed) {
  auto mean_diff = [](const std::vector<double>& pool, std::size_t n1) {
    double s1 = 0, s2 = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) (i < n1 ? s1 : s2) += pool[i];
    return s1 / static_cast<double>(n1) - s2 / static_cast<double>(pool.size() - n1);
  };
  std::vector<double> pool(a);
  pool.insert(pool.end(), b.begin(), b.end());
  const double observed = std::abs(mean_diff(pool, a.size()));
  std::mt19937_64 gen(seed);
  std::size_t extreme = 0;
  for (std::size_t r = 0; r < rounds; ++r) {
    std::shuffle(pool.begin(), pool.end(), gen);
    if (std::abs(mean_diff(pool, a.size())) >= observed - 1e-12) ++extreme;
  }
  return static_cast<double>(extreme + 1) / static_cast<double>(rounds + 1);
}

}  // namespace facework::testkit
