#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "viewrank/io/json_io.hpp"
#include "viewrank/views.hpp"

using namespace viewrank;

namespace {

SlidingWindowConfig single(double scale, AspectRatio r, double stride) {
  SlidingWindowConfig c;
  c.scales = {scale};
  c.aspect_ratios = {r};
  c.stride = stride;
  return c;
}

std::vector<Box> random_boxes(toy::Rng& rng, std::size_t n) {
  std::vector<Box> b;
  for (std::size_t i = 0; i < n; ++i) b.push_back(oracle::random_box(rng, 0.05));
  return b;
}

// Area-based IoU computed by rasterless interval arithmetic.
double iou_ref(const Box& a, const Box& b) {
  const double iw = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double ih = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = iw * ih;
  return inter / ((a.x1 - a.x0) * (a.y1 - a.y0) + (b.x1 - b.x0) * (b.y1 - b.y0) - inter);
}

}  // namespace

TEST(Box, Validity) {
  EXPECT_TRUE((Box{0, 0, 1, 1}).valid());
  EXPECT_FALSE((Box{0.5, 0, 0.5, 1}).valid());
  EXPECT_FALSE((Box{0, 0, 1.1, 1}).valid());
  EXPECT_FALSE((Box{-0.1, 0, 1, 1}).valid());
  EXPECT_FALSE((Box{0, NAN, 1, 1}).valid());
  EXPECT_THROW(require_valid(Box{0, 0.6, 1, 0.4}), std::invalid_argument);
}

TEST(GenerateWindows, FullScaleGivesWholeImage) {
  for (double stride : {0.01, 0.3, 1.0}) {
    const auto w = generate_windows(single(1.0, {1, 1}, stride));
    ASSERT_EQ(w.size(), 1u);
    EXPECT_EQ(w[0], (Box{0, 0, 1, 1}));
  }
}

TEST(GenerateWindows, HalfScaleHalfStride) {
  const auto w = generate_windows(single(0.5, {1, 1}, 0.5));
  const std::vector<Box> expected{{0, 0, 0.5, 0.5}, {0.5, 0, 1, 0.5}, {0, 0.5, 0.5, 1}, {0.5, 0.5, 1, 1}};
  ASSERT_EQ(w.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(w[i].x0, expected[i].x0, 1e-12);
    EXPECT_NEAR(w[i].y0, expected[i].y0, 1e-12);
    EXPECT_NEAR(w[i].x1, expected[i].x1, 1e-12);
    EXPECT_NEAR(w[i].y1, expected[i].y1, 1e-12);
  }
}

TEST(GenerateWindows, AreaAndRatio) {
  const auto w = generate_windows(single(0.7, {16, 9}, 0.1));
  ASSERT_FALSE(w.empty());
  for (const Box& b : w) {
    EXPECT_NEAR(b.width() / b.height(), 16.0 / 9.0, 1e-9);
    EXPECT_NEAR(b.area(), 0.49, 1e-9);
  }
}

TEST(GenerateWindows, ClippingKeepsRatio) {
  // 16:9 at scale 0.9 would be wider than the image; it shrinks to width 1.
  const auto w = generate_windows(single(0.9, {16, 9}, 0.05));
  ASSERT_FALSE(w.empty());
  for (const Box& b : w) {
    EXPECT_NEAR(b.width(), 1.0, 1e-12);
    EXPECT_NEAR(b.height(), 9.0 / 16.0, 1e-12);
  }
}

TEST(GenerateWindows, LastAnchorTouchesFarEdge) {
  const auto w = generate_windows(single(0.6, {1, 1}, 0.3));
  // Anchors 0, 0.3 and the clamped 0.4 on each axis.
  EXPECT_EQ(w.size(), 9u);
  const bool touches = std::any_of(w.begin(), w.end(), [](const Box& b) { return std::abs(b.x1 - 1.0) < 1e-12 && std::abs(b.y1 - 1.0) < 1e-12; });
  EXPECT_TRUE(touches);
}

TEST(GenerateWindows, DefaultConfigBoxesAreValidAndDistinct) {
  const SlidingWindowConfig cfg;
  const auto w = generate_windows(cfg);
  EXPECT_EQ(w.size(), generate_windows(cfg).size());
  for (const Box& b : w) {
    EXPECT_TRUE(b.valid());
    EXPECT_GE(b.x0, 0.0);
    EXPECT_LE(b.x1, 1.0);
  }
  for (std::size_t i = 1; i < w.size(); ++i) EXPECT_NE(w[i], w[i - 1]);
}

TEST(GenerateWindows, MinCoverageDropsSmallWindows) {
  SlidingWindowConfig c;
  c.min_coverage = 0.5;
  for (const Box& b : generate_windows(c)) EXPECT_GE(b.area(), 0.5 - 1e-12);
}

TEST(SlidingWindowConfig, Validation) {
  SlidingWindowConfig c;
  c.scales = {0.9, 0.6};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.scales = {1.2};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.stride = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.nms_iou_threshold = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Nms, IdenticalBoxesCollapse) {
  const std::vector<Box> b(5, Box{0.1, 0.1, 0.5, 0.6});
  EXPECT_EQ(nms(b, 0.5).size(), 1u);
  EXPECT_EQ(nms(b, 1.0).size(), 1u);
}

TEST(Nms, DisjointBoxesSurvive) {
  const std::vector<Box> b{{0, 0, 0.4, 0.4}, {0.5, 0.5, 1, 1}};
  for (double t : {0.01, 0.5, 1.0}) EXPECT_EQ(nms(b, t).size(), 2u);
}

TEST(Nms, GreedyInInputOrder) {
  const std::vector<Box> b{{0, 0, 0.5, 1}, {0.25, 0, 0.75, 1}, {0.5, 0, 1, 1}};
  // IoU(0,1) = IoU(1,2) = 1/3, IoU(0,2) = 0.
  EXPECT_EQ(nms(b, 0.3), (std::vector<Box>{b[0], b[2]}));
  EXPECT_EQ(nms(b, 0.34), b);
  EXPECT_THROW(nms(b, 0.0), std::invalid_argument);
}

TEST(Nms, SubsetOrderStableIdempotent) {
  toy::Rng rng(1000);
  for (int t = 0; t < 1000; ++t) {
    const auto boxes = random_boxes(rng, 1 + rng.below(30));
    const double thr = rng.uniform(0.05, 1.0);
    const auto kept = nms(boxes, thr);
    EXPECT_EQ(nms(kept, thr), kept);
    std::size_t pos = 0;
    for (const Box& k : kept) {
      while (pos < boxes.size() && !(boxes[pos] == k)) ++pos;
      ASSERT_LT(pos, boxes.size());
      ++pos;
    }
    for (std::size_t i = 0; i < kept.size(); ++i)
      for (std::size_t j = i + 1; j < kept.size(); ++j) EXPECT_LT(iou_ref(kept[i], kept[j]), thr);
  }
}

TEST(Iou, Examples) {
  const Box a{0.1, 0.2, 0.6, 0.9};
  EXPECT_EQ(iou(a, a), 1.0);
  EXPECT_EQ(iou({0, 0, 0.5, 0.5}, {0, 0, 1, 1}), 0.25);
  EXPECT_EQ(iou({0, 0, 0.4, 0.4}, {0.5, 0.5, 1, 1}), 0.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 0.5, 1}, {0.25, 0, 0.75, 1}), 1.0 / 3.0);
}

TEST(Iou, Properties) {
  toy::Rng rng(2);
  for (int t = 0; t < 500; ++t) {
    const Box a = oracle::random_box(rng), b = oracle::random_box(rng);
    const double v = iou(a, b);
    EXPECT_NEAR(v, iou_ref(a, b), 1e-12);
    EXPECT_EQ(v, iou(b, a));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    if (!(a == b)) {
      EXPECT_LT(v, 1.0);
    }
    const double s = rng.uniform(0.2, 1.0), ox = rng.uniform(0.0, 1.0 - s), oy = rng.uniform(0.0, 1.0 - s);
    auto m = [&](const Box& q) { return Box{ox + s * q.x0, oy + s * q.y0, ox + s * q.x1, oy + s * q.y1}; };
    EXPECT_NEAR(iou(m(a), m(b)), v, 1e-9);
  }
}

TEST(BoundaryDisplacement, Examples) {
  const Box a{0.1, 0.2, 0.6, 0.9};
  EXPECT_EQ(boundary_displacement(a, a), 0.0);
  EXPECT_NEAR(boundary_displacement({0.1, 0.2, 0.6, 0.9}, {0.2, 0.2, 0.7, 0.9}), 0.05, 1e-15);
  EXPECT_NEAR(boundary_displacement({0, 0, 1, 1}, {0.1, 0.1, 0.9, 0.9}), 0.1, 1e-15);
}

TEST(BoundaryDisplacement, IsMetric) {
  toy::Rng rng(3);
  for (int t = 0; t < 500; ++t) {
    const Box a = oracle::random_box(rng), b = oracle::random_box(rng), c = oracle::random_box(rng);
    EXPECT_EQ(boundary_displacement(a, b), boundary_displacement(b, a));
    EXPECT_LE(boundary_displacement(a, c), boundary_displacement(a, b) + boundary_displacement(b, c) + 1e-15);
    EXPECT_GT(boundary_displacement(a, b), 0.0);
  }
}

TEST(Top1MaxIou, Examples) {
  toy::Rng rng(4);
  Annotation ten{"img", random_boxes(rng, 10)};
  EXPECT_EQ(top1_max_iou(ten.gt_boxes[6], ten), 1.0);
  const Box p = oracle::random_box(rng);
  double best = 0.0;
  for (const Box& g : ten.gt_boxes) best = std::max(best, iou_ref(p, g));
  EXPECT_NEAR(top1_max_iou(p, ten), best, 1e-12);
  const Annotation one{"one", {Box{0.2, 0.2, 0.9, 0.7}}};
  EXPECT_EQ(top1_max_iou(p, one), iou(p, one.gt_boxes[0]));
  const Annotation two{"two", {Box{0, 0, 0.5, 0.5}, Box{0.5, 0.5, 1, 1}}};
  EXPECT_EQ(top1_max_iou(Box{0, 0, 0.5, 0.5}, two), 1.0);
  EXPECT_THROW(top1_max_iou(p, Annotation{"empty", {}}), std::invalid_argument);
}

TEST(PickBestView, Examples) {
  const std::vector<Box> b{{0, 0, 0.5, 0.5}, {0.5, 0, 1, 0.5}, {0, 0.5, 0.5, 1}};
  EXPECT_EQ(pick_best_view(std::vector<Box>{b[2]}, std::vector<double>{-4.0}), b[2]);
  EXPECT_EQ(pick_best_view(b, std::vector<double>{1, 3, 2}), b[1]);
  EXPECT_EQ(pick_best_view(b, std::vector<double>{7, 7, 7}), b[0]);
  EXPECT_THROW(pick_best_view(b, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST(PickBestView, InvariantUnderIncreasingTransforms) {
  toy::Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(20);
    const auto boxes = random_boxes(rng, n);
    std::vector<double> s(n);
    for (double& v : s) v = rng.uniform(-3, 3);
    const Box best = pick_best_view(boxes, s);
    std::vector<double> e = s, c = s;
    for (double& v : e) v = std::exp(v);
    for (double& v : c) v = 2.0 * v * v * v + 5.0;
    EXPECT_EQ(pick_best_view(boxes, e), best);
    EXPECT_EQ(pick_best_view(boxes, c), best);
  }
}

TEST(CommittedWindowConfigs, ProduceTheirCounts) {
  for (std::size_t n : {344u, 919u, 1745u}) {
    const auto f = io::read_window_config(std::string(VIEWRANK_SOURCE_DIR) + "/configs/views/candidates_" +
                                          std::to_string(n) + ".json");
    ASSERT_TRUE(f.expected_count.has_value());
    EXPECT_EQ(*f.expected_count, n);
    const auto boxes = generate_candidates(f.config);
    EXPECT_EQ(boxes.size(), n);
    for (const Box& b : boxes) EXPECT_TRUE(b.valid());
  }
}

TEST(Calibration, FindsSmallTarget) {
  SlidingWindowConfig base;
  base.scales = {0.7, 0.9};
  base.aspect_ratios = {{1, 1}, {4, 3}};
  CalibrationSearch search;
  search.stride_max = 0.2;
  search.stride_min = 0.05;
  search.stride_step = 0.01;
  const auto cal = calibrate_window_config(base, 20, search);
  ASSERT_TRUE(cal.has_value());
  EXPECT_EQ(cal->count, 20u);
  EXPECT_EQ(generate_candidates(cal->config).size(), 20u);
  EXPECT_LE(cal->threshold_lo, cal->config.nms_iou_threshold);
  EXPECT_GE(cal->threshold_hi, cal->config.nms_iou_threshold);
}
