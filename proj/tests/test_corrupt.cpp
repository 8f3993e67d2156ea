#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lplace/corrupt.hpp"

namespace lplace {
namespace {

LabeledCloud random_cloud(std::size_t n, std::uint64_t seed, double r_max = 50.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-r_max, r_max);
  std::uniform_int_distribution<int> label(0, 4);
  std::vector<Eigen::Vector3d> pts;
  std::vector<ClassId> labels;
  for (std::size_t i = 0; i < n; ++i) {
    pts.emplace_back(u(rng), u(rng), u(rng) * 0.1);
    labels.push_back(static_cast<ClassId>(label(rng)));
  }
  return LabeledCloud::from_points(pts, labels, 3);
}

CorruptionSpec one(CorruptionKind kind, double param, std::uint64_t seed = 1) {
  CorruptionSpec s;
  s.steps = {{kind, param}};
  s.seed = seed;
  return s;
}

TEST(Corruption, Defaults) {
  EXPECT_EQ(Corruption::default_param(CorruptionKind::kMotionBlur), 0.30);
  EXPECT_EQ(Corruption::default_param(CorruptionKind::kCrosstalk), 0.07);
  EXPECT_EQ(Corruption::default_param(CorruptionKind::kIncompleteEcho), 0.85);
}

TEST(Corruption, ZeroBlurIsIdentity) {
  const LabeledCloud c = random_cloud(500, 1);
  EXPECT_EQ(apply(c, one(CorruptionKind::kMotionBlur, 0.0)), c);
}

TEST(Corruption, EmptySpecIsIdentity) {
  const LabeledCloud c = random_cloud(100, 2);
  EXPECT_EQ(apply(c, CorruptionSpec{}), c);
}

TEST(Corruption, FullDropEmptiesCloud) {
  const LabeledCloud out = apply(random_cloud(500, 1), one(CorruptionKind::kIncompleteEcho, 1.0));
  EXPECT_EQ(out.size(), 0u);
  EXPECT_EQ(out.points.cols(), 0);
  EXPECT_EQ(out.frame_id, 3u);
}

TEST(Corruption, BlurJitterHasRequestedSpread) {
  const LabeledCloud c = random_cloud(20000, 4);
  const LabeledCloud out = apply(c, one(CorruptionKind::kMotionBlur, 0.3));
  ASSERT_EQ(out.size(), c.size());
  EXPECT_EQ(out.labels, c.labels);
  const Eigen::Matrix3Xd d = out.points - c.points;
  const double var = d.squaredNorm() / (3.0 * static_cast<double>(d.cols()));
  EXPECT_NEAR(std::sqrt(var), 0.3, 0.01);
  EXPECT_NEAR(d.mean(), 0.0, 0.01);
}

TEST(Corruption, CrosstalkReplacesFractionWithNoise) {
  const LabeledCloud c = random_cloud(20000, 5);
  CorruptionSpec s = one(CorruptionKind::kCrosstalk, 0.07);
  s.noise_class = 9;
  s.sensor_range = 30.0;
  const LabeledCloud out = apply(c, s);
  ASSERT_EQ(out.size(), c.size());
  std::size_t noise = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.labels[i] == 9) {
      ++noise;
      EXPECT_LE(out.points.col(static_cast<Eigen::Index>(i)).norm(), 30.0);
    } else {
      EXPECT_EQ(out.labels[i], c.labels[i]);
      EXPECT_EQ(out.points.col(static_cast<Eigen::Index>(i)), c.points.col(static_cast<Eigen::Index>(i)));
    }
  }
  const double se = std::sqrt(0.07 * 0.93 / 20000.0);
  EXPECT_NEAR(static_cast<double>(noise) / 20000.0, 0.07, 4 * se);
}

TEST(Corruption, FogSurvivalFollowsExponentialLaw) {
  // 1e5 points uniform in range [0, 100] along random directions.
  const std::size_t n = 100000;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::Vector3d> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d d = Eigen::Vector3d(normal(rng), normal(rng), normal(rng)).normalized();
    pts.push_back(d * (100.0 * u(rng)));
  }
  const LabeledCloud cloud = LabeledCloud::from_points(pts, std::vector<ClassId>(n, 1));
  const LabeledCloud out = apply(cloud, one(CorruptionKind::kFog, 0.01, 17));

  std::array<double, 10> total{}, kept{}, expected{};
  for (const auto& p : pts) {
    const double r = p.norm();
    const auto bin = std::min<std::size_t>(9, static_cast<std::size_t>(r / 10.0));
    total[bin] += 1;
    expected[bin] += std::exp(-0.01 * r);
  }
  for (Eigen::Index i = 0; i < out.points.cols(); ++i)
    kept[std::min<std::size_t>(9, static_cast<std::size_t>(out.points.col(i).norm() / 10.0))] += 1;
  for (std::size_t b = 0; b < 10; ++b) {
    const double p = expected[b] / total[b];
    const double se = std::sqrt(p * (1 - p) / total[b]);
    EXPECT_NEAR(kept[b] / total[b], p, 3 * se) << "bin " << b;
  }
}

TEST(Corruption, Deterministic) {
  const LabeledCloud c = random_cloud(2000, 6);
  const CorruptionSpec s = parse_corruption("motion_blur,crosstalk,incomplete_echo=0.3,fog,seed=12");
  EXPECT_EQ(apply(c, s), apply(c, s));
  CorruptionSpec other = s;
  other.seed = 13;
  EXPECT_FALSE(apply(c, s) == apply(c, other));
}

TEST(Corruption, ThinningPreservesLabels) {
  const LabeledCloud c = random_cloud(5000, 7);
  for (const auto& s : {one(CorruptionKind::kIncompleteEcho, 0.5), one(CorruptionKind::kFog, 0.02)}) {
    const LabeledCloud out = apply(c, s);
    // Survivors keep their order, so a merge walk pairs them with their sources.
    std::size_t j = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      while (j < c.size() && c.points.col(static_cast<Eigen::Index>(j)) != out.points.col(static_cast<Eigen::Index>(i))) ++j;
      ASSERT_LT(j, c.size());
      EXPECT_EQ(out.labels[i], c.labels[j]);
      ++j;
    }
  }
}

TEST(Corruption, StrongerFogThinsMore) {
  const LabeledCloud c = random_cloud(5000, 9);
  double low = 0, high = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    low += static_cast<double>(apply(c, one(CorruptionKind::kFog, 0.01, seed)).size());
    high += static_cast<double>(apply(c, one(CorruptionKind::kFog, 0.03, seed)).size());
  }
  EXPECT_LT(high, low);
}

TEST(Corruption, Validation) {
  EXPECT_THROW(one(CorruptionKind::kMotionBlur, -0.1).validate(), ConfigError);
  EXPECT_THROW(one(CorruptionKind::kIncompleteEcho, 1.5).validate(), ConfigError);
  EXPECT_THROW(one(CorruptionKind::kCrosstalk, 1.1).validate(), ConfigError);
  EXPECT_NO_THROW(one(CorruptionKind::kFog, 3.0).validate());
}

TEST(ParseCorruption, DefaultsAndValues) {
  const CorruptionSpec s = parse_corruption("fog=0.02,motion_blur,seed=7");
  ASSERT_EQ(s.steps.size(), 2u);
  EXPECT_EQ(s.steps[0].kind, CorruptionKind::kFog);
  EXPECT_EQ(s.steps[0].param, 0.02);
  EXPECT_EQ(s.steps[1].kind, CorruptionKind::kMotionBlur);
  EXPECT_EQ(s.steps[1].param, 0.30);
  EXPECT_EQ(s.seed, 7u);
  const CorruptionSpec back = parse_corruption(format_corruption(s));
  EXPECT_EQ(back.seed, s.seed);
  ASSERT_EQ(back.steps.size(), 2u);
  EXPECT_EQ(back.steps[0].param, 0.02);
}

TEST(ParseCorruption, Errors) {
  for (const char* bad : {"snow", "fog=abc", "seed=x", "fog=-1", "incomplete_echo=2", "fog,,blur"})
    EXPECT_THROW(parse_corruption(bad), ConfigError) << bad;
}

}  // namespace
}  // namespace lplace
