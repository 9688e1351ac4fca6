#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "facework/error.hpp"
#include "facework/faceacts.hpp"

namespace facework::stats {

// ---------------------------------------------------------------------------
// Ranks

// 1-based ranks with ties sharing their midrank.
inline std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

// ---------------------------------------------------------------------------
// Mann-Whitney U

enum class MwuMethod { Exact, NormalApprox };

// Auto picks exact enumeration for small tie-free samples.
enum class MwuMode { Auto, Exact, NormalApprox };

struct MwuResult {
  double u1 = 0.0;
  double u2 = 0.0;
  double p_two_sided = 1.0;
  MwuMethod method = MwuMethod::NormalApprox;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  bool zero_variance = false;
};

inline constexpr std::size_t kExactMwuMaxTotal = 16;

// Number of rank arrangements of n1 vs n2 tie-free observations giving each
// value of U1, indexed 0..n1*n2.
inline std::vector<double> mwu_null_counts(std::size_t n1, std::size_t n2) {
  // counts[a][b] holds the distribution for sizes (a, b); built up in b.
  const std::size_t umax = n1 * n2;
  std::vector<std::vector<double>> prev(n1 + 1), cur(n1 + 1);
  for (std::size_t a = 0; a <= n1; ++a) prev[a] = {1.0};  // b = 0: U = 0 only
  for (std::size_t b = 1; b <= n2; ++b) {
    cur[0] = {1.0};
    for (std::size_t a = 1; a <= n1; ++a) {
      // f(a, b, u) = f(a-1, b, u-b) + f(a, b-1, u)
      std::vector<double> dist(a * b + 1, 0.0);
      for (std::size_t u = 0; u < prev[a].size(); ++u) dist[u] += prev[a][u];
      for (std::size_t u = 0; u < cur[a - 1].size(); ++u) dist[u + b] += cur[a - 1][u];
      cur[a] = std::move(dist);
    }
    std::swap(prev, cur);
  }
  std::vector<double> out = prev[n1];
  out.resize(umax + 1, 0.0);
  return out;
}

inline double standard_normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

inline MwuResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                                MwuMode mode = MwuMode::Auto) {
  if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney_u: empty sample");
  MwuResult r;
  r.n1 = a.size();
  r.n2 = b.size();
  const double n1 = static_cast<double>(r.n1);
  const double n2 = static_cast<double>(r.n2);

  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::vector<double> ranks = midranks(pooled);
  double rank_sum_a = 0.0;
  for (std::size_t i = 0; i < r.n1; ++i) rank_sum_a += ranks[i];
  r.u1 = rank_sum_a - n1 * (n1 + 1.0) / 2.0;
  r.u2 = n1 * n2 - r.u1;

  // Tie groups: sum of (t^3 - t).
  std::vector<double> sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  bool has_ties = false;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    if (j - i > 1) has_ties = true;
    tie_term += t * t * t - t;
    i = j;
  }

  const std::size_t total = r.n1 + r.n2;
  const bool exact = mode == MwuMode::Exact ||
                     (mode == MwuMode::Auto && total <= kExactMwuMaxTotal && !has_ties);
  if (exact) {
    if (has_ties) throw std::invalid_argument("mann_whitney_u: exact mode requires tie-free samples");
    r.method = MwuMethod::Exact;
    const std::vector<double> counts = mwu_null_counts(r.n1, r.n2);
    const double arrangements = std::accumulate(counts.begin(), counts.end(), 0.0);
    const auto u_small = static_cast<std::size_t>(std::llround(std::min(r.u1, r.u2)));
    double tail = 0.0;
    for (std::size_t u = 0; u <= u_small; ++u) tail += counts[u];
    tail /= arrangements;
    r.p_two_sided = std::min(1.0, 2.0 * std::min(tail, 0.5));
    return r;
  }

  r.method = MwuMethod::NormalApprox;
  const double big_n = n1 + n2;
  const double variance =
      big_n > 1.0 ? (n1 * n2 / 12.0) * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0))) : 0.0;
  if (!(variance > 0.0)) {
    r.zero_variance = true;
    r.p_two_sided = 1.0;
    return r;
  }
  const double mu = n1 * n2 / 2.0;
  const double z = std::max(0.0, std::abs(r.u1 - mu) - 0.5) / std::sqrt(variance);
  const double tail = standard_normal_upper_tail(z);
  r.p_two_sided = std::min(1.0, 2.0 * std::min(tail, 0.5));
  return r;
}

inline MwuResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b,
                                MwuMode mode = MwuMode::Auto) {
  return mann_whitney_u(std::span<const double>(a), std::span<const double>(b), mode);
}

// Significance marker used in tables: * p<0.05, † p<0.001, ‡ p<0.0001.
inline std::string significance_marker(double p) {
  if (p < 0.0001) return "‡";
  if (p < 0.001) return "†";
  if (p < 0.05) return "*";
  return "";
}

// ---------------------------------------------------------------------------
// Pearson correlation

inline double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("pearson_r: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("pearson_r: need at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw std::domain_error("undefined correlation: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson_r(std::span<const double>(x), std::span<const double>(y));
}

// ---------------------------------------------------------------------------
// Cohen's kappa

struct KappaResult {
  double kappa = 0.0;
  double observed = 0.0;
  double expected = 0.0;
  // Both raters used one identical constant label, so chance agreement is 1.
  bool degenerate = false;
};

template <typename Label>
KappaResult cohen_kappa(std::span<const Label> a, std::span<const Label> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cohen_kappa: length mismatch");
  if (a.empty()) throw std::invalid_argument("cohen_kappa: no items");
  std::map<Label, double> marg_a, marg_b;
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    marg_a[a[i]] += 1.0;
    marg_b[b[i]] += 1.0;
    if (a[i] == b[i]) agree += 1.0;
  }
  const double n = static_cast<double>(a.size());
  KappaResult r;
  r.observed = agree / n;
  for (const auto& [label, count] : marg_a) {
    auto it = marg_b.find(label);
    if (it != marg_b.end()) r.expected += (count / n) * (it->second / n);
  }
  if (r.expected >= 1.0) {
    r.degenerate = true;
    r.kappa = 1.0;
    return r;
  }
  r.kappa = (r.observed - r.expected) / (1.0 - r.expected);
  return r;
}

template <typename Label>
KappaResult cohen_kappa(const std::vector<Label>& a, const std::vector<Label>& b) {
  return cohen_kappa(std::span<const Label>(a), std::span<const Label>(b));
}

// ---------------------------------------------------------------------------
// Percentiles and politeness bins

// Nearest-rank percentile: the value at 1-based position ceil(q/100 * n) of
// the sorted values (position clamped to [1, n]).
inline double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile: empty input");
  if (!(q >= 0.0 && q <= 100.0)) throw std::invalid_argument("percentile: q outside [0, 100]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  // Guard against q/100*n landing a hair above an integer.
  const double pos = std::ceil(q / 100.0 * n - 1e-9);
  const auto rank = static_cast<std::size_t>(std::clamp(pos, 1.0, n));
  return sorted[rank - 1];
}

inline double percentile(const std::vector<double>& values, double q) {
  return percentile(std::span<const double>(values), q);
}

enum class PolitenessBin { Impolite, Neutral, Polite };

inline const char* to_string(PolitenessBin b) {
  switch (b) {
    case PolitenessBin::Impolite: return "impolite";
    case PolitenessBin::Neutral: return "neutral";
    case PolitenessBin::Polite: return "polite";
  }
  return "?";
}

struct PolitenessBins {
  std::map<std::string, PolitenessBin> assignment;
  double cut_low = 0.0;   // 25th percentile
  double cut_high = 0.0;  // 75th percentile

  PolitenessBin classify(double score) const {
    if (score > cut_high) return PolitenessBin::Polite;
    if (score < cut_low) return PolitenessBin::Impolite;
    return PolitenessBin::Neutral;
  }
};

inline constexpr std::size_t kMinBinnedTurns = 4;

// Polite iff strictly above the 75th percentile, impolite iff strictly below
// the 25th; scores equal to a cut are neutral.
inline PolitenessBins politeness_bins(const std::map<std::string, double>& scores) {
  if (scores.size() < kMinBinnedTurns) {
    throw DataError("politeness binning needs at least " + std::to_string(kMinBinnedTurns) +
                    " scored turns, got " + std::to_string(scores.size()));
  }
  std::vector<double> values;
  values.reserve(scores.size());
  for (const auto& [id, s] : scores) values.push_back(s);
  PolitenessBins bins;
  bins.cut_low = percentile(values, 25.0);
  bins.cut_high = percentile(values, 75.0);
  for (const auto& [id, s] : scores) bins.assignment.emplace(id, bins.classify(s));
  return bins;
}

// ---------------------------------------------------------------------------
// Label distributions

using FaceDistribution = std::array<double, kNumFaceActs>;

inline FaceDistribution label_distribution(std::span<const FaceAct> labels) {
  if (labels.empty()) throw std::invalid_argument("label_distribution: empty input");
  std::array<std::size_t, kNumFaceActs> counts{};
  for (FaceAct a : labels) ++counts[index_of(a)];
  FaceDistribution out{};
  for (std::size_t k = 0; k < kNumFaceActs; ++k) {
    out[k] = static_cast<double>(counts[k]) / static_cast<double>(labels.size());
  }
  return out;
}

inline FaceDistribution label_distribution(const std::vector<FaceAct>& labels) {
  return label_distribution(std::span<const FaceAct>(labels));
}

inline double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace facework::stats
