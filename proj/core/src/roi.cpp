#include "viewrank/roi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "viewrank/bilinear.hpp"
#include "viewrank/errors.hpp"

namespace viewrank {

std::string_view to_string(RoIKind kind) {
  switch (kind) {
    case RoIKind::Pool: return "pool";
    case RoIKind::Align: return "align";
    case RoIKind::Warp: return "warp";
    case RoIKind::Refine: return "refine";
  }
  return "?";
}

std::string_view to_string(PoolMode mode) {
  return mode == PoolMode::Max ? "max" : "average";
}

std::optional<RoIKind> parse_roi_kind(std::string_view name) {
  for (RoIKind k : {RoIKind::Pool, RoIKind::Align, RoIKind::Warp, RoIKind::Refine}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

RoIConfig RoIConfig::defaults(RoIKind kind) {
  RoIConfig cfg;
  cfg.kind = kind;
  cfg.pool_mode = kind == RoIKind::Pool ? PoolMode::Max : PoolMode::Average;
  return cfg;
}

void RoIConfig::validate() const {
  if (output_size == 0) throw InvalidField("output_size", "must be >= 1");
  if (upsample_factor == 0) throw InvalidField("upsample_factor", "must be >= 1");
  if (samples_per_bin == 0) throw InvalidField("samples_per_bin", "must be >= 1");
}

namespace {

// Sampling plan for one box: output cell k aggregates samples
// [cell_begin[k], cell_begin[k + 1]), each a bilinear blend of source cells.
struct SamplePlan {
  std::vector<BilinearTaps> samples;
  std::vector<std::uint32_t> cell_begin;
};

struct Span1D {
  double lo;
  double hi;
};

// Widens [lo, hi] to at least one cell, staying inside [0, n - 1].
Span1D min_extent(double lo, double hi, std::size_t n) {
  const double maxv = static_cast<double>(n - 1);
  if (hi - lo >= 1.0 || maxv < 1.0) return {lo, hi};
  const double center = 0.5 * (lo + hi);
  lo = std::clamp(center - 0.5, 0.0, maxv - 1.0);
  return {lo, lo + 1.0};
}

double round_half_away(double v) { return std::round(v); }

BilinearTaps single_cell(std::size_t index) {
  BilinearTaps t;
  t.index = {index, index, index, index};
  t.weight = {1.0, 0.0, 0.0, 0.0};
  return t;
}

// Integer bins of a quantized RoI, Fast R-CNN style.
SamplePlan plan_pool(const Box& box, std::size_t h, std::size_t w, std::size_t out) {
  auto quantize = [](double lo, double hi, std::size_t n) {
    const double maxv = static_cast<double>(n - 1);
    const double qlo = std::clamp(round_half_away(lo * maxv), 0.0, maxv);
    const double qhi = std::clamp(round_half_away(hi * maxv), qlo, maxv);
    return std::pair<long, long>{static_cast<long>(qlo), static_cast<long>(qhi)};
  };
  const auto [rx0, rx1] = quantize(box.x0, box.x1, w);
  const auto [ry0, ry1] = quantize(box.y0, box.y1, h);
  const double bin_w = static_cast<double>(rx1 - rx0 + 1) / static_cast<double>(out);
  const double bin_h = static_cast<double>(ry1 - ry0 + 1) / static_cast<double>(out);

  auto bin_range = [](std::size_t j, double bin, long origin, std::size_t n) {
    long start = static_cast<long>(std::floor(static_cast<double>(j) * bin)) + origin;
    long end = static_cast<long>(std::ceil(static_cast<double>(j + 1) * bin)) + origin;
    start = std::clamp(start, 0L, static_cast<long>(n));
    end = std::clamp(end, 0L, static_cast<long>(n));
    return std::pair<long, long>{start, end};
  };

  SamplePlan plan;
  plan.cell_begin.reserve(out * out + 1);
  for (std::size_t by = 0; by < out; ++by) {
    const auto [ys, ye] = bin_range(by, bin_h, ry0, h);
    for (std::size_t bx = 0; bx < out; ++bx) {
      const auto [xs, xe] = bin_range(bx, bin_w, rx0, w);
      plan.cell_begin.push_back(static_cast<std::uint32_t>(plan.samples.size()));
      if (ys >= ye || xs >= xe) {
        const auto ay = static_cast<std::size_t>(std::clamp(ys, 0L, static_cast<long>(h) - 1));
        const auto ax = static_cast<std::size_t>(std::clamp(xs, 0L, static_cast<long>(w) - 1));
        plan.samples.push_back(single_cell(ay * w + ax));
        continue;
      }
      for (long y = ys; y < ye; ++y) {
        for (long x = xs; x < xe; ++x) {
          plan.samples.push_back(single_cell(static_cast<std::size_t>(y) * w +
                                             static_cast<std::size_t>(x)));
        }
      }
    }
  }
  plan.cell_begin.push_back(static_cast<std::uint32_t>(plan.samples.size()));
  return plan;
}

// Regular interior sample points per bin over the unquantized RoI.
SamplePlan plan_align(const Box& box, std::size_t h, std::size_t w, std::size_t out,
                      std::size_t per_bin) {
  const Span1D sx = min_extent(box.x0 * static_cast<double>(w - 1),
                               box.x1 * static_cast<double>(w - 1), w);
  const Span1D sy = min_extent(box.y0 * static_cast<double>(h - 1),
                               box.y1 * static_cast<double>(h - 1), h);
  const double bin_w = (sx.hi - sx.lo) / static_cast<double>(out);
  const double bin_h = (sy.hi - sy.lo) / static_cast<double>(out);
  const double n = static_cast<double>(per_bin);

  SamplePlan plan;
  plan.samples.reserve(out * out * per_bin * per_bin);
  plan.cell_begin.reserve(out * out + 1);
  for (std::size_t by = 0; by < out; ++by) {
    for (std::size_t bx = 0; bx < out; ++bx) {
      plan.cell_begin.push_back(static_cast<std::uint32_t>(plan.samples.size()));
      for (std::size_t iy = 0; iy < per_bin; ++iy) {
        const double y =
            sy.lo + bin_h * (static_cast<double>(by) + (static_cast<double>(iy) + 0.5) / n);
        for (std::size_t ix = 0; ix < per_bin; ++ix) {
          const double x =
              sx.lo + bin_w * (static_cast<double>(bx) + (static_cast<double>(ix) + 0.5) / n);
          plan.samples.push_back(bilinear_taps(h, w, x, y));
        }
      }
    }
  }
  plan.cell_begin.push_back(static_cast<std::uint32_t>(plan.samples.size()));
  return plan;
}

// Resamples [sx, sy] onto a (2 out)^2 grid with coincident endpoints, then
// groups 2x2 blocks into output cells.
SamplePlan plan_resample(Span1D sx, Span1D sy, std::size_t h, std::size_t w, std::size_t out) {
  const std::size_t grid = 2 * out;
  const double step_x = (sx.hi - sx.lo) / static_cast<double>(grid - 1);
  const double step_y = (sy.hi - sy.lo) / static_cast<double>(grid - 1);

  SamplePlan plan;
  plan.samples.reserve(grid * grid);
  plan.cell_begin.reserve(out * out + 1);
  for (std::size_t by = 0; by < out; ++by) {
    for (std::size_t bx = 0; bx < out; ++bx) {
      plan.cell_begin.push_back(static_cast<std::uint32_t>(plan.samples.size()));
      for (std::size_t a = 0; a < 2; ++a) {
        const double y = sy.lo + step_y * static_cast<double>(2 * by + a);
        for (std::size_t b = 0; b < 2; ++b) {
          const double x = sx.lo + step_x * static_cast<double>(2 * bx + b);
          plan.samples.push_back(bilinear_taps(h, w, x, y));
        }
      }
    }
  }
  plan.cell_begin.push_back(static_cast<std::uint32_t>(plan.samples.size()));
  return plan;
}

SamplePlan plan_warp(const Box& box, std::size_t h, std::size_t w, std::size_t out) {
  auto quantized = [](double lo, double hi, std::size_t n) {
    const double maxv = static_cast<double>(n - 1);
    const double qlo = std::clamp(round_half_away(lo * maxv), 0.0, maxv);
    const double qhi = std::clamp(round_half_away(hi * maxv), qlo, maxv);
    return min_extent(qlo, qhi, n);
  };
  return plan_resample(quantized(box.x0, box.x1, w), quantized(box.y0, box.y1, h), h, w, out);
}

// Box mapped onto the (already upsampled) source grid without quantization.
SamplePlan plan_refine(const Box& box, std::size_t h, std::size_t w, std::size_t out) {
  const Span1D sx = min_extent(box.x0 * static_cast<double>(w - 1),
                               box.x1 * static_cast<double>(w - 1), w);
  const Span1D sy = min_extent(box.y0 * static_cast<double>(h - 1),
                               box.y1 * static_cast<double>(h - 1), h);
  return plan_resample(sx, sy, h, w, out);
}

SamplePlan make_plan(const Box& box, const Shape& source, const RoIConfig& cfg) {
  switch (cfg.kind) {
    case RoIKind::Pool: return plan_pool(box, source.height, source.width, cfg.output_size);
    case RoIKind::Align:
      return plan_align(box, source.height, source.width, cfg.output_size, cfg.samples_per_bin);
    case RoIKind::Warp: return plan_warp(box, source.height, source.width, cfg.output_size);
    case RoIKind::Refine: return plan_refine(box, source.height, source.width, cfg.output_size);
  }
  throw std::invalid_argument("unknown RoI kind");
}

std::size_t source_factor(const RoIConfig& cfg) {
  return cfg.kind == RoIKind::Refine ? cfg.upsample_factor : 1;
}

void check_boxes(std::span<const Box> boxes) {
  for (const Box& b : boxes) require_valid(b);
}

// Index of the first maximal sample in cell k of one channel.
std::size_t argmax_sample(const SamplePlan& plan, std::size_t k, std::span<const double> plane) {
  std::size_t best = plan.cell_begin[k];
  double best_v = plan.samples[best].apply(plane);
  for (std::size_t s = best + 1; s < plan.cell_begin[k + 1]; ++s) {
    const double v = plan.samples[s].apply(plane);
    if (v > best_v) {
      best_v = v;
      best = s;
    }
  }
  return best;
}

GradMap backward_impl(const Shape& map_shape, const FeatureMap* source, std::span<const Box> boxes,
                      const RoIConfig& cfg, std::span<const FeatureMap> grad_out) {
  cfg.validate();
  check_boxes(boxes);
  if (grad_out.size() != boxes.size()) {
    throw std::invalid_argument("roi_backward: " + std::to_string(grad_out.size()) +
                                " gradients for " + std::to_string(boxes.size()) + " boxes");
  }
  const Shape out_shape{map_shape.channels, cfg.output_size, cfg.output_size};
  for (const FeatureMap& g : grad_out) {
    if (g.shape() != out_shape) {
      throw std::invalid_argument("roi_backward: gradient shape " + to_string(g.shape()) +
                                  " expected " + to_string(out_shape));
    }
  }

  const std::size_t factor = source_factor(cfg);
  const Shape src_shape{map_shape.channels, map_shape.height * factor, map_shape.width * factor};
  GradMap src_grad(src_shape);
  const std::size_t cells = cfg.output_size * cfg.output_size;

  for (std::size_t b = 0; b < boxes.size(); ++b) {
    const SamplePlan plan = make_plan(boxes[b], src_shape, cfg);
    for (std::size_t c = 0; c < src_shape.channels; ++c) {
      auto go = grad_out[b].channel(c);
      auto dst = src_grad.channel(c);
      for (std::size_t k = 0; k < cells; ++k) {
        const double g = go[k];
        if (g == 0.0) continue;
        if (cfg.pool_mode == PoolMode::Max) {
          plan.samples[argmax_sample(plan, k, source->channel(c))].scatter(dst, g);
        } else {
          const std::size_t begin = plan.cell_begin[k];
          const std::size_t end = plan.cell_begin[k + 1];
          const double share = g / static_cast<double>(end - begin);
          for (std::size_t s = begin; s < end; ++s) plan.samples[s].scatter(dst, share);
        }
      }
    }
  }
  return factor == 1 ? src_grad : upsample_bilinear_backward(src_grad, map_shape, factor);
}

}  // namespace

std::vector<RoIFeature> roi_forward(const FeatureMap& map, std::span<const Box> boxes,
                                    const RoIConfig& cfg) {
  cfg.validate();
  check_boxes(boxes);
  const std::size_t factor = source_factor(cfg);
  const FeatureMap upsampled = factor == 1 ? FeatureMap{} : upsample_bilinear(map, factor);
  const FeatureMap& source = factor == 1 ? map : upsampled;
  const std::size_t cells = cfg.output_size * cfg.output_size;
  const Shape out_shape{map.channels(), cfg.output_size, cfg.output_size};

  std::vector<RoIFeature> result;
  result.reserve(boxes.size());
  for (const Box& box : boxes) {
    const SamplePlan plan = make_plan(box, source.shape(), cfg);
    FeatureMap out(out_shape);
    for (std::size_t c = 0; c < map.channels(); ++c) {
      auto src = source.channel(c);
      auto dst = out.channel(c);
      for (std::size_t k = 0; k < cells; ++k) {
        const std::size_t begin = plan.cell_begin[k];
        const std::size_t end = plan.cell_begin[k + 1];
        if (cfg.pool_mode == PoolMode::Max) {
          double best = plan.samples[begin].apply(src);
          for (std::size_t s = begin + 1; s < end; ++s) best = std::max(best, plan.samples[s].apply(src));
          dst[k] = best;
        } else {
          double sum = 0.0;
          for (std::size_t s = begin; s < end; ++s) sum += plan.samples[s].apply(src);
          dst[k] = sum / static_cast<double>(end - begin);
        }
      }
    }
    result.push_back({box, std::move(out)});
  }
  return result;
}

GradMap roi_backward(const FeatureMap& map, std::span<const Box> boxes, const RoIConfig& cfg,
                     std::span<const FeatureMap> grad_out) {
  if (cfg.pool_mode != PoolMode::Max) {
    return backward_impl(map.shape(), nullptr, boxes, cfg, grad_out);
  }
  const std::size_t factor = source_factor(cfg);
  const FeatureMap source = factor == 1 ? map : upsample_bilinear(map, factor);
  return backward_impl(map.shape(), &source, boxes, cfg, grad_out);
}

GradMap roi_backward(const Shape& map_shape, std::span<const Box> boxes, const RoIConfig& cfg,
                     std::span<const FeatureMap> grad_out) {
  if (cfg.pool_mode == PoolMode::Max) {
    throw std::invalid_argument("roi_backward: max pooling needs the input map");
  }
  return backward_impl(map_shape, nullptr, boxes, cfg, grad_out);
}

}  // namespace viewrank
