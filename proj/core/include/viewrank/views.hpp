#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "viewrank/box.hpp"

namespace viewrank {

/// Aspect ratio as width:height.
struct AspectRatio {
  double w = 1.0;
  double h = 1.0;
  double value() const { return w / h; }
  bool operator==(const AspectRatio&) const = default;
};

/// Sliding-window candidate generator settings. A window of scale s covers
/// an s^2 fraction of the image area at the requested aspect ratio; windows
/// that would exceed the image are shrunk along the binding axis with the
/// ratio kept.
struct SlidingWindowConfig {
  std::vector<double> scales{0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9};
  std::vector<AspectRatio> aspect_ratios{{1, 1}, {3, 4}, {4, 3}, {9, 16}, {16, 9}};
  double stride = 0.05;
  double nms_iou_threshold = 1.0;
  /// Windows covering less than this fraction of the image area are dropped.
  double min_coverage = 0.0;

  void validate() const;
};

struct Annotation {
  std::string image_id;
  std::vector<Box> gt_boxes;
};

/// Enumerates every window placement (scale-major, then ratio, row, column),
/// drops near-duplicates and windows under the coverage floor. No NMS.
std::vector<Box> generate_windows(const SlidingWindowConfig& cfg);

/// generate_windows followed by nms at the configured threshold.
std::vector<Box> generate_candidates(const SlidingWindowConfig& cfg);

/// Greedy suppression in input order: a box is kept iff its IoU with every
/// previously kept box is below the threshold.
std::vector<Box> nms(std::span<const Box> boxes, double iou_threshold);

double iou(const Box& a, const Box& b);

/// Mean absolute offset of the four box edges.
double boundary_displacement(const Box& a, const Box& b);

/// Largest IoU between the prediction and any of the annotated boxes.
double top1_max_iou(const Box& pred, const Annotation& ann);

/// Box with the highest score; the lowest index wins ties.
std::size_t best_view_index(std::span<const double> scores);
Box pick_best_view(std::span<const Box> boxes, std::span<const double> scores);

struct WindowCalibration {
  SlidingWindowConfig config;
  std::size_t count = 0;
  /// Range of NMS thresholds (at the chosen stride) that reproduce the count;
  /// the config uses its midpoint.
  double threshold_lo = 0.0;
  double threshold_hi = 0.0;
};

struct CalibrationSearch {
  double stride_max = 0.06;
  double stride_min = 0.015;
  double stride_step = 1e-4;
  double threshold_min = 0.5;
  /// Smallest acceptable width of the threshold interval.
  double min_threshold_width = 1e-4;
};

/// Finds a (stride, NMS threshold) pair for which generate_candidates yields
/// exactly `target` boxes. Strides are scanned from stride_max downward; the
/// first stride whose matching threshold interval is wide enough wins.
std::optional<WindowCalibration> calibrate_window_config(const SlidingWindowConfig& base,
                                                         std::size_t target,
                                                         const CalibrationSearch& search = {});

}  // namespace viewrank
