#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "facework/rng.hpp"
#include "facework/stats.hpp"
#include "support/oracles.hpp"

using namespace facework;
using namespace facework::stats;

TEST(MannWhitney, CompleteSeparationExact) {
  const auto r = mann_whitney_u({1, 2, 3}, {4, 5, 6});
  EXPECT_EQ(r.method, MwuMethod::Exact);
  EXPECT_DOUBLE_EQ(r.u1, 0.0);
  EXPECT_DOUBLE_EQ(r.u2, 9.0);
  // 1 of C(6,3)=20 arrangements is this extreme on each side.
  EXPECT_NEAR(r.p_two_sided, 0.1, 1e-12);
  EXPECT_NEAR(testkit::brute_force_mwu_p({1, 2, 3}, {4, 5, 6}), 0.1, 1e-12);
}

TEST(MannWhitney, IdenticalSamples) {
  const auto r = mann_whitney_u({1, 2, 3}, {1, 2, 3});
  EXPECT_DOUBLE_EQ(r.u1, 4.5);
  EXPECT_DOUBLE_EQ(r.u2, 4.5);
  EXPECT_DOUBLE_EQ(r.p_two_sided, 1.0);
  EXPECT_DOUBLE_EQ(testkit::brute_force_mwu_p({1, 2, 3}, {1, 2, 3}), 1.0);
}

TEST(MannWhitney, TiedDataAgainstPermutationOracle) {
  const std::vector<double> a{1, 1, 2}, b{1, 2, 2};
  const auto r = mann_whitney_u(a, b);
  EXPECT_EQ(r.method, MwuMethod::NormalApprox);
  EXPECT_DOUBLE_EQ(r.u1, testkit::pair_count_u(a, b));
  EXPECT_DOUBLE_EQ(r.u1, 3.0);
  EXPECT_DOUBLE_EQ(r.u2, 6.0);
  // Tie-corrected normal approximation with continuity correction; reference
  // value from scipy.stats.mannwhitneyu(method="asymptotic").
  EXPECT_NEAR(r.p_two_sided, 0.6192567541768621, 1e-12);
  // The exhaustive permutation test over midranks is far coarser here.
  EXPECT_DOUBLE_EQ(testkit::brute_force_mwu_p(a, b), 1.0);
}

TEST(MannWhitney, ZeroVarianceIsFlagged) {
  const auto r = mann_whitney_u({2, 2, 2, 2, 2, 2, 2, 2, 2}, {2, 2, 2, 2, 2, 2, 2, 2});
  EXPECT_TRUE(r.zero_variance);
  EXPECT_DOUBLE_EQ(r.p_two_sided, 1.0);
}

TEST(MannWhitney, EmptyInputThrows) {
  EXPECT_THROW(mann_whitney_u(std::vector<double>{}, {1.0}), std::invalid_argument);
  EXPECT_THROW(mann_whitney_u({1.0}, std::vector<double>{}), std::invalid_argument);
}

TEST(MannWhitney, ExactModeRejectsTies) {
  EXPECT_THROW(mann_whitney_u({1, 1}, {2, 3}, MwuMode::Exact), std::invalid_argument);
}

TEST(MannWhitney, NullCountsSumToBinomial) {
  for (std::size_t n1 = 1; n1 <= 7; ++n1) {
    for (std::size_t n2 = 1; n2 <= 7; ++n2) {
      const auto counts = mwu_null_counts(n1, n2);
      double total = 0;
      for (double c : counts) total += c;
      EXPECT_DOUBLE_EQ(total, std::round(std::tgamma(n1 + n2 + 1) / (std::tgamma(n1 + 1) * std::tgamma(n2 + 1))));
      for (std::size_t u = 0; u < counts.size(); ++u) EXPECT_DOUBLE_EQ(counts[u], counts[counts.size() - 1 - u]);
    }
  }
}

TEST(MannWhitney, SymmetryAndInvariantsProperty) {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> a(1 + rng.below(12)), b(1 + rng.below(12));
    for (auto& v : a) v = static_cast<double>(rng.below(10));
    for (auto& v : b) v = static_cast<double>(rng.below(10));
    const auto ab = mann_whitney_u(a, b);
    const auto ba = mann_whitney_u(b, a);
    EXPECT_NEAR(ab.u1 + ab.u2, static_cast<double>(a.size() * b.size()), 1e-9);
    EXPECT_NEAR(ab.p_two_sided, ba.p_two_sided, 1e-12);
    EXPECT_NEAR(ab.u1, ba.u2, 1e-9);
    EXPECT_GT(ab.p_two_sided, 0.0);
    EXPECT_LE(ab.p_two_sided, 1.0);
    EXPECT_NEAR(ab.u1, testkit::pair_count_u(a, b), 1e-9);
  }
}

TEST(MannWhitney, ExactMatchesBruteForceOnRandomTieFreeSamples) {
  Rng rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n1 = 1 + rng.below(6), n2 = 1 + rng.below(6);
    std::vector<double> pool(n1 + n2);
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = static_cast<double>(i) + 0.5;
    rng.shuffle(pool);
    const std::vector<double> a(pool.begin(), pool.begin() + static_cast<long>(n1));
    const std::vector<double> b(pool.begin() + static_cast<long>(n1), pool.end());
    const auto r = mann_whitney_u(a, b);
    ASSERT_EQ(r.method, MwuMethod::Exact);
    EXPECT_NEAR(r.p_two_sided, testkit::brute_force_mwu_p(a, b), 1e-9);
  }
}

TEST(MannWhitney, LargeSamplesDetectShift) {
  Rng rng(3);
  std::vector<double> a(400), b(400);
  for (auto& v : a) v = rng.normal(0.6, 0.1);
  for (auto& v : b) v = rng.normal(0.4, 0.1);
  const auto r = mann_whitney_u(a, b);
  EXPECT_EQ(r.method, MwuMethod::NormalApprox);
  EXPECT_LT(r.p_two_sided, 1e-10);
  EXPECT_GT(r.u1, r.u2);
}

TEST(Pearson, PerfectLinear) {
  EXPECT_NEAR(pearson_r({1, 2, 3}, {2, 4, 6}), 1.0, 1e-12);
  EXPECT_NEAR(pearson_r({1, 2, 3}, {3, 2, 1}), -1.0, 1e-12);
}

TEST(Pearson, ConstantInputThrows) {
  EXPECT_THROW(pearson_r({1, 2, 3}, {5, 5, 5}), std::domain_error);
  EXPECT_THROW(pearson_r({1, 2}, {1, 2, 3}), std::invalid_argument);
  EXPECT_THROW(pearson_r({1}, {1}), std::invalid_argument);
}

TEST(Pearson, AffineInvarianceProperty) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(2 + rng.below(30)), y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rng.normal();
      y[i] = 0.3 * x[i] + rng.normal();
    }
    const double r = pearson_r(x, y);
    EXPECT_GE(r, -1.0 - 1e-12);
    EXPECT_LE(r, 1.0 + 1e-12);
    EXPECT_NEAR(r, testkit::raw_sum_pearson(x, y), 1e-9);
    const double alpha = rng.uniform(0.1, 10.0), beta = rng.uniform(-5, 5);
    std::vector<double> xp(x.size()), xn(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      xp[i] = alpha * x[i] + beta;
      xn[i] = -alpha * x[i] + beta;
    }
    EXPECT_NEAR(pearson_r(xp, y), r, 1e-12);
    EXPECT_NEAR(pearson_r(xn, y), -r, 1e-12);
  }
}

TEST(Kappa, PerfectAgreement) {
  const std::vector<std::string> a{"x", "y", "z", "x"};
  EXPECT_DOUBLE_EQ(cohen_kappa(a, a).kappa, 1.0);
}

TEST(Kappa, FixedBinaryConfusion) {
  // Rows = rater A, cols = rater B: [[20,5],[10,15]].
  // p_o = 35/50 = 0.7; A marginals (25,25), B marginals (30,20):
  // p_e = 0.5*0.6 + 0.5*0.4 = 0.5; kappa = (0.7-0.5)/(1-0.5) = 0.4.
  std::vector<int> a, b;
  auto add = [&](int x, int y, int n) {
    for (int i = 0; i < n; ++i) {
      a.push_back(x);
      b.push_back(y);
    }
  };
  add(0, 0, 20);
  add(0, 1, 5);
  add(1, 0, 10);
  add(1, 1, 15);
  const auto k = cohen_kappa(a, b);
  EXPECT_NEAR(k.observed, 0.7, 1e-12);
  EXPECT_NEAR(k.expected, 0.5, 1e-12);
  EXPECT_NEAR(k.kappa, 0.4, 1e-9);
}

TEST(Kappa, DegenerateConstantRaters) {
  const std::vector<int> a{1, 1, 1};
  const auto k = cohen_kappa(a, a);
  EXPECT_TRUE(k.degenerate);
  EXPECT_DOUBLE_EQ(k.kappa, 1.0);
}

TEST(Kappa, LengthMismatchThrows) {
  EXPECT_THROW(cohen_kappa(std::vector<int>{1, 2}, std::vector<int>{1}), std::invalid_argument);
}

TEST(Kappa, IndependentRatersNearZero) {
  Rng rng(23);
  std::vector<int> a(20000), b(20000);
  for (auto& v : a) v = static_cast<int>(rng.below(4));
  for (auto& v : b) v = static_cast<int>(rng.below(4));
  // Standard error of kappa here is about 0.004; 0.03 is > 7 sigma.
  EXPECT_NEAR(cohen_kappa(a, b).kappa, 0.0, 0.03);
}

TEST(Kappa, RelabelingInvarianceProperty) {
  Rng rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> a(5 + rng.below(40)), b(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = static_cast<int>(rng.below(5));
      b[i] = rng.bernoulli(0.6) ? a[i] : static_cast<int>(rng.below(5));
    }
    std::vector<int> perm{0, 1, 2, 3, 4};
    rng.shuffle(perm);
    std::vector<int> pa(a.size()), pb(b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      pa[i] = perm[a[i]];
      pb[i] = perm[b[i]];
    }
    EXPECT_NEAR(cohen_kappa(a, b).kappa, cohen_kappa(pa, pb).kappa, 1e-12);
    EXPECT_NEAR(cohen_kappa(a, b).kappa, cohen_kappa(b, a).kappa, 1e-12);
  }
}

TEST(Percentile, NearestRank) {
  const std::vector<double> v{8, 3, 1, 5, 2, 7, 4, 6};
  EXPECT_DOUBLE_EQ(percentile(v, 75), 6);
  EXPECT_DOUBLE_EQ(percentile(v, 25), 2);
  EXPECT_DOUBLE_EQ(percentile(v, 0), 1);
  EXPECT_DOUBLE_EQ(percentile(v, 100), 8);
  EXPECT_DOUBLE_EQ(percentile(std::vector<double>{4.2}, 37), 4.2);
  EXPECT_THROW(percentile(std::vector<double>{}, 50), std::invalid_argument);
}

TEST(Percentile, MedianWithinRangeProperty) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + rng.below(50));
    for (auto& x : v) x = rng.normal();
    const double m = percentile(v, 50);
    EXPECT_GE(m, *std::min_element(v.begin(), v.end()));
    EXPECT_LE(m, *std::max_element(v.begin(), v.end()));
  }
}

TEST(PolitenessBins, QuartileCutsAndTieRule) {
  std::map<std::string, double> scores;
  for (int i = 1; i <= 8; ++i) scores["t" + std::to_string(i)] = i;
  const auto bins = politeness_bins(scores);
  EXPECT_DOUBLE_EQ(bins.cut_low, 2);
  EXPECT_DOUBLE_EQ(bins.cut_high, 6);
  for (int i = 1; i <= 8; ++i) {
    const auto b = bins.assignment.at("t" + std::to_string(i));
    if (i == 1) EXPECT_EQ(b, PolitenessBin::Impolite);
    else if (i >= 7) EXPECT_EQ(b, PolitenessBin::Polite);
    else EXPECT_EQ(b, PolitenessBin::Neutral);
  }
  EXPECT_EQ(bins.assignment.size(), scores.size());
}

TEST(PolitenessBins, AllEqualIsNeutral) {
  std::map<std::string, double> scores{{"a", .5}, {"b", .5}, {"c", .5}, {"d", .5}, {"e", .5}};
  for (const auto& [id, b] : politeness_bins(scores).assignment) EXPECT_EQ(b, PolitenessBin::Neutral);
}

TEST(PolitenessBins, TooFewTurns) {
  EXPECT_THROW(politeness_bins({{"a", 1}, {"b", 2}, {"c", 3}}), DataError);
}

TEST(LabelDistribution, Proportions) {
  const auto d = label_distribution({FaceAct::None, FaceAct::None, FaceAct::Indebtedness, FaceAct::Indebtedness});
  EXPECT_DOUBLE_EQ(d[index_of(FaceAct::None)], 0.5);
  EXPECT_DOUBLE_EQ(d[index_of(FaceAct::Indebtedness)], 0.5);
  for (FaceAct a : kAllFaceActs)
    if (a != FaceAct::None && a != FaceAct::Indebtedness) EXPECT_DOUBLE_EQ(d[index_of(a)], 0.0);
  const auto single = label_distribution({FaceAct::Autonomy});
  EXPECT_DOUBLE_EQ(single[index_of(FaceAct::Autonomy)], 1.0);
  EXPECT_THROW(label_distribution(std::vector<FaceAct>{}), std::invalid_argument);
}

TEST(LabelDistribution, OrderIndependentAndNormalizedProperty) {
  Rng rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<FaceAct> labels(1 + rng.below(60));
    for (auto& l : labels) l = face_act_at(rng.below(kNumFaceActs));
    const auto d = label_distribution(labels);
    double total = 0;
    for (double p : d) total += p;
    EXPECT_NEAR(total, 1.0, 1e-9);
    rng.shuffle(labels);
    EXPECT_EQ(label_distribution(labels), d);
  }
}

TEST(Significance, Markers) {
  EXPECT_EQ(significance_marker(0.2), "");
  EXPECT_EQ(significance_marker(0.01), "*");
  EXPECT_EQ(significance_marker(0.0005), "†");
  EXPECT_EQ(significance_marker(0.00001), "‡");
}
