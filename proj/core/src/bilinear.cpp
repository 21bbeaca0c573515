#include "viewrank/bilinear.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace viewrank {

namespace {

struct AxisTap {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

AxisTap axis_tap(std::size_t n, double v) {
  const double maxv = static_cast<double>(n - 1);
  v = std::clamp(v, 0.0, maxv);
  auto lo = static_cast<std::size_t>(std::floor(v));
  if (lo >= n - 1) return {n - 1, n - 1, 0.0};
  return {lo, lo + 1, v - static_cast<double>(lo)};
}

void check_channel(const Shape& shape, std::size_t c) {
  if (c >= shape.channels) {
    throw std::invalid_argument("channel index " + std::to_string(c) + " out of range for " +
                                to_string(shape));
  }
}

}  // namespace

BilinearTaps bilinear_taps(std::size_t height, std::size_t width, double x, double y) {
  const AxisTap ax = axis_tap(width, x);
  const AxisTap ay = axis_tap(height, y);
  BilinearTaps t;
  t.index = {ay.lo * width + ax.lo, ay.lo * width + ax.hi, ay.hi * width + ax.lo,
             ay.hi * width + ax.hi};
  t.weight = {(1.0 - ay.frac) * (1.0 - ax.frac), (1.0 - ay.frac) * ax.frac,
              ay.frac * (1.0 - ax.frac), ay.frac * ax.frac};
  return t;
}

double bilinear_sample(const FeatureMap& map, std::size_t c, double x, double y) {
  check_channel(map.shape(), c);
  return bilinear_taps(map.height(), map.width(), x, y).apply(map.channel(c));
}

void bilinear_sample_backward(GradMap& grad, std::size_t c, double x, double y, double g) {
  check_channel(grad.shape(), c);
  bilinear_taps(grad.shape().height, grad.shape().width, x, y).scatter(grad.channel(c), g);
}

FeatureMap upsample_bilinear(const FeatureMap& map, std::size_t factor) {
  if (factor == 0) throw std::invalid_argument("upsample factor must be >= 1");
  if (factor == 1) return map;
  const Shape in = map.shape();
  const Shape out{in.channels, in.height * factor, in.width * factor};
  FeatureMap result(out);

  std::vector<BilinearTaps> taps;
  taps.reserve(out.plane());
  for (std::size_t i = 0; i < out.height; ++i) {
    const double y = align_corners_coord(i, in.height, out.height);
    for (std::size_t j = 0; j < out.width; ++j) {
      taps.push_back(bilinear_taps(in.height, in.width,
                                   align_corners_coord(j, in.width, out.width), y));
    }
  }
  for (std::size_t c = 0; c < in.channels; ++c) {
    auto src = map.channel(c);
    auto dst = result.channel(c);
    for (std::size_t p = 0; p < taps.size(); ++p) dst[p] = taps[p].apply(src);
  }
  return result;
}

GradMap upsample_bilinear_backward(const GradMap& grad_out, const Shape& input_shape,
                                   std::size_t factor) {
  if (factor == 0) throw std::invalid_argument("upsample factor must be >= 1");
  const Shape expected{input_shape.channels, input_shape.height * factor,
                       input_shape.width * factor};
  if (grad_out.shape() != expected) {
    throw std::invalid_argument("upsample backward: gradient shape " +
                                to_string(grad_out.shape()) + " expected " + to_string(expected));
  }
  if (factor == 1) return grad_out;
  GradMap grad(input_shape);
  for (std::size_t c = 0; c < input_shape.channels; ++c) {
    auto src = grad_out.channel(c);
    auto dst = grad.channel(c);
    std::size_t p = 0;
    for (std::size_t i = 0; i < expected.height; ++i) {
      const double y = align_corners_coord(i, input_shape.height, expected.height);
      for (std::size_t j = 0; j < expected.width; ++j, ++p) {
        bilinear_taps(input_shape.height, input_shape.width,
                      align_corners_coord(j, input_shape.width, expected.width), y)
            .scatter(dst, src[p]);
      }
    }
  }
  return grad;
}

}  // namespace viewrank
