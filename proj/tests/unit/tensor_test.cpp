#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "viewrank/bilinear.hpp"
#include "viewrank/gradcheck.hpp"
#include "viewrank/tensor.hpp"

using namespace viewrank;

namespace {

FeatureMap corners() { return FeatureMap({1, 2, 2}, {0, 1, 2, 3}); }

}  // namespace

TEST(FeatureMap, RejectsZeroExtentsAndBadLength) {
  EXPECT_THROW(FeatureMap({0, 2, 2}), std::invalid_argument);
  EXPECT_THROW(FeatureMap({1, 0, 2}), std::invalid_argument);
  EXPECT_THROW(FeatureMap({1, 2, 2}, std::vector<double>(3)), std::invalid_argument);
}

TEST(FeatureMap, ChannelMajorLayout) {
  FeatureMap m({2, 2, 3}, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
  EXPECT_EQ(m(0, 1, 2), 5.0);
  EXPECT_EQ(m(1, 0, 0), 6.0);
  EXPECT_EQ(m.channel(1)[4], 10.0);
}

TEST(GradMap, StartsZeroAndAccumulates) {
  GradMap g({1, 2, 2});
  for (double v : g.values()) EXPECT_EQ(v, 0.0);
  g.add(0, 1, 1, 2.0);
  g.add(0, 1, 1, 0.5);
  GradMap h({1, 2, 2});
  h.add(0, 1, 1, 1.0);
  g += h;
  EXPECT_EQ(g(0, 1, 1), 3.5);
  EXPECT_THROW(g += GradMap({1, 3, 2}), std::invalid_argument);
}

TEST(BilinearSample, CentreOfTwoByTwo) { EXPECT_DOUBLE_EQ(bilinear_sample(corners(), 0, 0.5, 0.5), 1.5); }

TEST(BilinearSample, ExactAtGridPoint) { EXPECT_EQ(bilinear_sample(corners(), 0, 1.0, 0.0), 1.0); }

TEST(BilinearSample, ConstantMap) {
  FeatureMap m({2, 5, 4}, 0.7);
  for (double x : {-3.0, 0.0, 0.3, 2.9, 7.0})
    for (double y : {-1.0, 1.25, 4.0, 9.5}) EXPECT_DOUBLE_EQ(bilinear_sample(m, 1, x, y), 0.7);
}

TEST(BilinearSample, ClampsOutsideGrid) {
  EXPECT_EQ(bilinear_sample(corners(), 0, -5.0, -5.0), 0.0);
  EXPECT_EQ(bilinear_sample(corners(), 0, 9.0, 9.0), 3.0);
  EXPECT_DOUBLE_EQ(bilinear_sample(corners(), 0, 0.5, 7.0), 2.5);
}

TEST(BilinearSample, BadChannelThrows) { EXPECT_THROW(bilinear_sample(corners(), 1, 0, 0), std::invalid_argument); }

TEST(BilinearSample, ExactAtEveryIntegerCoordinate) {
  const FeatureMap m = oracle::random_map(3, {2, 4, 5});
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 0; x < 5; ++x)
        EXPECT_EQ(bilinear_sample(m, c, static_cast<double>(x), static_cast<double>(y)), m(c, y, x));
}

TEST(BilinearSample, MatchesOracleAndStaysInNeighbourRange) {
  const FeatureMap m = oracle::random_map(11, {1, 6, 7});
  const oracle::Plane p = oracle::plane_of(m, 0);
  toy::Rng rng(5);
  for (int k = 0; k < 500; ++k) {
    const double x = rng.uniform(0.0, 6.0), y = rng.uniform(0.0, 5.0);
    const double v = bilinear_sample(m, 0, x, y);
    EXPECT_NEAR(v, oracle::bilinear(p, x, y), 1e-14);
    const long x0 = static_cast<long>(std::floor(x)), y0 = static_cast<long>(std::floor(y));
    const long x1 = std::min(x0 + 1, 6L), y1 = std::min(y0 + 1, 5L);
    const double lo = std::min({p.at(y0, x0), p.at(y0, x1), p.at(y1, x0), p.at(y1, x1)});
    const double hi = std::max({p.at(y0, x0), p.at(y0, x1), p.at(y1, x0), p.at(y1, x1)});
    EXPECT_GE(v, lo - 1e-15);
    EXPECT_LE(v, hi + 1e-15);
  }
}

TEST(BilinearSample, TapsAreConvex) {
  toy::Rng rng(2);
  for (int k = 0; k < 200; ++k) {
    const BilinearTaps t = bilinear_taps(5, 8, rng.uniform(-2.0, 10.0), rng.uniform(-2.0, 7.0));
    double sum = 0.0;
    for (double w : t.weight) {
      EXPECT_GE(w, 0.0);
      sum += w;
    }
    EXPECT_NEAR(sum, 1.0, 1e-15);
  }
}

TEST(BilinearSample, GradientMatchesFiniteDifferences) {
  const FeatureMap m = oracle::random_map(17, {1, 3, 3});
  const std::vector<std::pair<double, double>> pts{{0.3, 1.7}, {1.5, 0.25}, {2.0, 2.0}, {0.9, 0.1}};
  const std::vector<double> weights{1.0, -0.5, 2.0, 0.75};
  auto f = [&](const FeatureMap& x) {
    double s = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) s += weights[k] * bilinear_sample(x, 0, pts[k].first, pts[k].second);
    return s;
  };
  GradMap g(m.shape());
  for (std::size_t k = 0; k < pts.size(); ++k) bilinear_sample_backward(g, 0, pts[k].first, pts[k].second, weights[k]);
  const GradCheckReport r = finite_diff_check(f, m, g, 1e-4, 1e-6);
  EXPECT_TRUE(r.passed) << r.diagnostic;
  EXPECT_EQ(r.checked, 9u);
}

TEST(Upsample, FactorOneIsBitwiseIdentity) {
  const FeatureMap m = oracle::random_map(8, {3, 5, 7});
  EXPECT_EQ(upsample_bilinear(m, 1), m);
}

TEST(Upsample, FactorZeroThrows) { EXPECT_THROW(upsample_bilinear(corners(), 0), std::invalid_argument); }

TEST(Upsample, ConstantMapDoubles) {
  const FeatureMap u = upsample_bilinear(FeatureMap({2, 3, 4}, -1.25), 2);
  EXPECT_EQ(u.shape(), (Shape{2, 6, 8}));
  for (double v : u.values()) EXPECT_DOUBLE_EQ(v, -1.25);
}

TEST(Upsample, TwoByTwoByHand) {
  // Output index i samples input coordinate i / 3; value = x + 2 y.
  const FeatureMap u = upsample_bilinear(corners(), 2);
  ASSERT_EQ(u.shape(), (Shape{1, 4, 4}));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      EXPECT_NEAR(u(0, i, j), static_cast<double>(j) / 3.0 + 2.0 * static_cast<double>(i) / 3.0, 1e-15);
  EXPECT_EQ(u(0, 0, 0), 0.0);
  EXPECT_EQ(u(0, 0, 3), 1.0);
  EXPECT_EQ(u(0, 3, 0), 2.0);
  EXPECT_EQ(u(0, 3, 3), 3.0);
}

TEST(Upsample, MatchesOracle) {
  const FeatureMap m = oracle::random_map(21, {2, 5, 6});
  for (std::size_t f : {2u, 3u, 5u}) {
    const FeatureMap u = upsample_bilinear(m, f);
    for (std::size_t c = 0; c < 2; ++c) {
      const oracle::Plane o = oracle::upsample(oracle::plane_of(m, c), f);
      for (std::size_t k = 0; k < o.v.size(); ++k) EXPECT_NEAR(u.channel(c)[k], o.v[k], 1e-14);
    }
  }
}

// Outputs never leave the input range, and the four corners map onto each
// other, so extremes sitting on a corner survive exactly.
TEST(Upsample, StaysWithinInputRangeAndKeepsCorners) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t h = 3 + seed % 5, w = 2 + seed % 7, f = 2 + seed % 3;
    FeatureMap m = oracle::random_map(seed, {1, h, w});
    m(0, 0, 0) = 2.0;
    m(0, h - 1, w - 1) = -2.0;
    const FeatureMap u = upsample_bilinear(m, f);
    const auto [ulo, uhi] = std::minmax_element(u.values().begin(), u.values().end());
    EXPECT_EQ(*uhi, 2.0);
    EXPECT_EQ(*ulo, -2.0);
    EXPECT_EQ(u(0, 0, w * f - 1), m(0, 0, w - 1));
    EXPECT_EQ(u(0, h * f - 1, 0), m(0, h - 1, 0));
    const FeatureMap r = oracle::random_map(seed + 50, {1, h, w});
    const auto [mlo, mhi] = std::minmax_element(r.values().begin(), r.values().end());
    const FeatureMap ur = upsample_bilinear(r, f);
    for (double v : ur.values()) {
      EXPECT_GE(v, *mlo);
      EXPECT_LE(v, *mhi);
    }
  }
}

TEST(Upsample, BackwardMatchesFiniteDifferences) {
  const FeatureMap m = oracle::random_map(4, {2, 3, 4});
  const FeatureMap w = oracle::random_map(5, {2, 9, 12});
  auto f = [&](const FeatureMap& x) {
    const FeatureMap u = upsample_bilinear(x, 3);
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) s += u.values()[k] * w.values()[k];
    return s;
  };
  GradMap gout(w.shape());
  for (std::size_t k = 0; k < w.size(); ++k) gout.values()[k] = w.values()[k];
  const GradMap g = upsample_bilinear_backward(gout, m.shape(), 3);
  const GradCheckReport r = finite_diff_check(f, m, g, 1e-4, 1e-6);
  EXPECT_TRUE(r.passed) << r.diagnostic;
}

TEST(FiniteDiffCheck, SumOfElements) {
  const FeatureMap m = oracle::random_map(1, {2, 3, 3});
  GradMap g(m.shape());
  for (double& v : g.values()) v = 1.0;
  auto f = [](const FeatureMap& x) {
    double s = 0.0;
    for (double v : x.values()) s += v;
    return s;
  };
  const GradCheckReport r = finite_diff_check(f, m, g, 1e-3, 1e-8);
  EXPECT_TRUE(r.passed) << r.diagnostic;
  EXPECT_EQ(r.checked, 18u);
}

TEST(FiniteDiffCheck, SumOfSquares) {
  const FeatureMap m = oracle::random_map(2, {1, 4, 4});
  GradMap g(m.shape());
  for (std::size_t k = 0; k < m.size(); ++k) g.values()[k] = 2.0 * m.values()[k];
  auto f = [](const FeatureMap& x) {
    double s = 0.0;
    for (double v : x.values()) s += v * v;
    return s;
  };
  EXPECT_TRUE(finite_diff_check(f, m, g, 1e-4, 1e-5).passed);
}

TEST(FiniteDiffCheck, DetectsWrongGradient) {
  const FeatureMap m = oracle::random_map(2, {1, 3, 3});
  GradMap g(m.shape());
  for (std::size_t k = 0; k < m.size(); ++k) g.values()[k] = 3.0 * m.values()[k];
  auto f = [](const FeatureMap& x) {
    double s = 0.0;
    for (double v : x.values()) s += v * v;
    return s;
  };
  const GradCheckReport r = finite_diff_check(f, m, g, 1e-4, 1e-5);
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.max_rel_error, 0.1);
  EXPECT_FALSE(r.diagnostic.empty());
}

TEST(FiniteDiffCheck, NonFiniteOutputFails) {
  const FeatureMap m = oracle::random_map(2, {1, 2, 2});
  const GradMap g(m.shape());
  auto f = [](const FeatureMap& x) { return x(0, 0, 0) > 0.5 ? std::numeric_limits<double>::quiet_NaN() : std::log(-1.0); };
  const GradCheckReport r = finite_diff_check(f, m, g, 1e-4, 1e-3);
  EXPECT_FALSE(r.passed);
  EXPECT_NE(r.diagnostic.find("finite"), std::string::npos) << r.diagnostic;
}

TEST(FiniteDiffCheck, RestoresParameters) {
  std::vector<double> p{0.1, -0.2, 0.3};
  const std::vector<double> before = p;
  const std::vector<double> grad{1.0, 1.0, 1.0};
  auto f = [&] { return p[0] + p[1] + p[2]; };
  EXPECT_TRUE(finite_diff_check(f, p, grad, 1e-5, 1e-8).passed);
  EXPECT_EQ(p, before);
}

TEST(FiniteDiffCheck, RejectsBadArguments) {
  std::vector<double> p{1.0};
  const std::vector<double> grad{1.0};
  auto f = [&] { return p[0]; };
  EXPECT_THROW(finite_diff_check(f, p, grad, 0.0, 1e-3), std::invalid_argument);
  EXPECT_THROW(finite_diff_check(f, p, std::vector<double>{1.0, 2.0}, 1e-5, 1e-3), std::invalid_argument);
}
