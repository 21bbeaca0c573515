#include "viewrank/views.hpp"

#include "viewrank/errors.hpp"
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

namespace viewrank {

namespace {

constexpr double kDuplicateEps = 1e-9;

// Anchor positions along one axis for a window of the given extent. The
// first anchor is 0; the last touches the far edge.
std::vector<double> anchors(double extent, double stride) {
  std::vector<double> out;
  const double last = 1.0 - extent;
  if (last < -kDuplicateEps) return out;
  for (std::size_t i = 0;; ++i) {
    const double p = static_cast<double>(i) * stride;
    if (p > last + kDuplicateEps) break;
    out.push_back(std::min(p, std::max(last, 0.0)));
  }
  if (out.empty() || out.back() < last - kDuplicateEps) out.push_back(std::max(last, 0.0));
  return out;
}

std::pair<double, double> window_shape(double scale, const AspectRatio& ratio) {
  const double r = ratio.value();
  double w = scale * std::sqrt(r);
  double h = scale / std::sqrt(r);
  if (w > 1.0) {
    w = 1.0;
    h = 1.0 / r;
  }
  if (h > 1.0) {
    h = 1.0;
    w = r;
  }
  return {w, h};
}

Box clamp_box(double x0, double y0, double w, double h) {
  return {std::max(0.0, x0), std::max(0.0, y0), std::min(1.0, x0 + w), std::min(1.0, y0 + h)};
}

}  // namespace

void SlidingWindowConfig::validate() const {
  if (scales.empty()) throw InvalidField("scales", "must not be empty");
  for (double s : scales) {
    if (!(s > 0.0 && s <= 1.0)) throw InvalidField("scales", "every scale must be in (0, 1]");
  }
  if (!std::is_sorted(scales.begin(), scales.end())) {
    throw InvalidField("scales", "must be ascending");
  }
  if (aspect_ratios.empty()) throw InvalidField("aspect_ratios", "must not be empty");
  for (const auto& r : aspect_ratios) {
    if (!(r.w > 0.0 && r.h > 0.0)) throw InvalidField("aspect_ratios", "sides must be positive");
  }
  if (!(stride > 0.0 && stride <= 1.0)) throw InvalidField("stride", "must be in (0, 1]");
  if (!(nms_iou_threshold > 0.0 && nms_iou_threshold <= 1.0)) {
    throw InvalidField("nms_iou_threshold", "must be in (0, 1]");
  }
  if (!(min_coverage >= 0.0 && min_coverage <= 1.0)) {
    throw InvalidField("min_coverage", "must be in [0, 1]");
  }
}

std::vector<Box> generate_windows(const SlidingWindowConfig& cfg) {
  cfg.validate();
  std::vector<Box> out;
  // Keys quantized well below the duplicate tolerance; neighbours are probed
  // so boxes straddling a quantization boundary still collide.
  std::map<std::tuple<long long, long long, long long, long long>, std::size_t> seen;
  auto key = [](const Box& b) {
    auto q = [](double v) { return std::llround(v / kDuplicateEps); };
    return std::tuple{q(b.x0), q(b.y0), q(b.x1), q(b.y1)};
  };
  auto is_duplicate = [&](const Box& b) {
    const auto [a, c, d, e] = key(b);
    for (long long da = -1; da <= 1; ++da)
      for (long long dc = -1; dc <= 1; ++dc)
        for (long long dd = -1; dd <= 1; ++dd)
          for (long long de = -1; de <= 1; ++de)
            if (seen.contains({a + da, c + dc, d + dd, e + de})) return true;
    return false;
  };

  for (double scale : cfg.scales) {
    for (const AspectRatio& ratio : cfg.aspect_ratios) {
      const auto [w, h] = window_shape(scale, ratio);
      if (w * h < cfg.min_coverage) continue;
      const auto xs = anchors(w, cfg.stride);
      const auto ys = anchors(h, cfg.stride);
      for (double y : ys) {
        for (double x : xs) {
          const Box b = clamp_box(x, y, w, h);
          if (!b.valid() || is_duplicate(b)) continue;
          seen.emplace(key(b), out.size());
          out.push_back(b);
        }
      }
    }
  }
  return out;
}

std::vector<Box> generate_candidates(const SlidingWindowConfig& cfg) {
  return nms(generate_windows(cfg), cfg.nms_iou_threshold);
}

std::vector<Box> nms(std::span<const Box> boxes, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw std::invalid_argument("nms: threshold outside (0, 1]");
  }
  std::vector<Box> kept;
  for (const Box& b : boxes) {
    const bool keep = std::none_of(kept.begin(), kept.end(),
                                   [&](const Box& k) { return iou(b, k) >= iou_threshold; });
    if (keep) kept.push_back(b);
  }
  return kept;
}

double iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double ih = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double boundary_displacement(const Box& a, const Box& b) {
  return (std::abs(a.x0 - b.x0) + std::abs(a.y0 - b.y0) + std::abs(a.x1 - b.x1) +
          std::abs(a.y1 - b.y1)) /
         4.0;
}

double top1_max_iou(const Box& pred, const Annotation& ann) {
  if (ann.gt_boxes.empty()) {
    throw std::invalid_argument("top1_max_iou: annotation '" + ann.image_id + "' has no boxes");
  }
  double best = 0.0;
  for (const Box& gt : ann.gt_boxes) best = std::max(best, iou(pred, gt));
  return best;
}

std::size_t best_view_index(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("best_view_index: empty score list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

Box pick_best_view(std::span<const Box> boxes, std::span<const double> scores) {
  if (boxes.size() != scores.size()) {
    throw std::invalid_argument("pick_best_view: " + std::to_string(boxes.size()) + " boxes vs " +
                                std::to_string(scores.size()) + " scores");
  }
  return boxes[best_view_index(scores)];
}

namespace {

// Threshold at which the kept count equals target, searched by bisection on
// [a, b] where the count brackets the target.
std::optional<double> bisect_to_target(std::span<const Box> windows, std::size_t target, double a,
                                       std::size_t na, double b, std::size_t nb) {
  for (int iter = 0; iter < 60; ++iter) {
    if (na == target) return a;
    if (nb == target) return b;
    const bool brackets = (na < target && nb > target) || (na > target && nb < target);
    if (!brackets || b - a < 1e-9) return std::nullopt;
    const double m = 0.5 * (a + b);
    const std::size_t nm = nms(windows, m).size();
    if ((na < target) == (nm < target) && nm != target) {
      a = m;
      na = nm;
    } else {
      b = m;
      nb = nm;
    }
  }
  return std::nullopt;
}

// Moves from `inside` (count == target) toward `outside` (count != target)
// and returns the last threshold still producing the target.
double interval_edge(std::span<const Box> windows, std::size_t target, double inside,
                     double outside) {
  for (int iter = 0; iter < 40 && std::abs(outside - inside) > 1e-9; ++iter) {
    const double m = 0.5 * (inside + outside);
    if (nms(windows, m).size() == target) {
      inside = m;
    } else {
      outside = m;
    }
  }
  return inside;
}

}  // namespace

std::optional<WindowCalibration> calibrate_window_config(const SlidingWindowConfig& base,
                                                         std::size_t target,
                                                         const CalibrationSearch& search) {
  const auto steps = static_cast<long>(
      std::floor((search.stride_max - search.stride_min) / search.stride_step + 0.5));
  // With a step like 1e-4, strides are formed as m / 10000 so they print as
  // short decimals.
  const double inv_step = std::round(1.0 / search.stride_step);
  const bool decimal_step = std::abs(inv_step * search.stride_step - 1.0) < 1e-12;
  for (long k = 0; k <= steps; ++k) {
    SlidingWindowConfig cfg = base;
    const double m = std::round((search.stride_max - static_cast<double>(k) * search.stride_step) /
                                search.stride_step);
    cfg.stride = decimal_step ? m / inv_step : m * search.stride_step;
    cfg.nms_iou_threshold = 1.0;
    const std::vector<Box> windows = generate_windows(cfg);
    if (windows.size() < target) continue;

    constexpr double kCoarse = 0.005;
    double prev = search.threshold_min;
    std::size_t n_prev = nms(windows, prev).size();
    for (double t = prev + kCoarse; t <= 1.0 + 1e-12; t += kCoarse) {
      const double tc = std::min(t, 1.0);
      const std::size_t n = nms(windows, tc).size();
      const auto hit = bisect_to_target(windows, target, prev, n_prev, tc, n);
      prev = tc;
      n_prev = n;
      if (!hit) continue;
      const double lo = interval_edge(windows, target, *hit, search.threshold_min);
      const double hi = interval_edge(windows, target, *hit, 1.0);
      if (hi - lo < search.min_threshold_width) continue;
      WindowCalibration result;
      result.config = cfg;
      result.config.nms_iou_threshold = 0.5 * (lo + hi);
      result.threshold_lo = lo;
      result.threshold_hi = hi;
      result.count = generate_candidates(result.config).size();
      if (result.count == target) return result;
    }
  }
  return std::nullopt;
}

}  // namespace viewrank
