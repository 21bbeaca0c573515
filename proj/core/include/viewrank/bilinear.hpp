#pragma once

#include <array>
#include <cstddef>

#include "viewrank/tensor.hpp"

namespace viewrank {

/// The four grid cells (flat indices within one channel plane) and weights
/// that a bilinear sample blends. Weights are non-negative and sum to one.
struct BilinearTaps {
  std::array<std::size_t, 4> index{};
  std::array<double, 4> weight{};

  double apply(std::span<const double> plane) const {
    return weight[0] * plane[index[0]] + weight[1] * plane[index[1]] +
           weight[2] * plane[index[2]] + weight[3] * plane[index[3]];
  }
  void scatter(std::span<double> plane, double g) const {
    for (int k = 0; k < 4; ++k) plane[index[k]] += weight[k] * g;
  }
};

/// Taps for pixel coordinate (x, y) on a height x width grid. Grid point
/// (i, j) sits at coordinate (i, j); coordinates are clamped to the border.
BilinearTaps bilinear_taps(std::size_t height, std::size_t width, double x, double y);

double bilinear_sample(const FeatureMap& map, std::size_t c, double x, double y);

/// Adds g times the interpolation weights of sample (x, y) into channel c.
void bilinear_sample_backward(GradMap& grad, std::size_t c, double x, double y, double g);

/// Align-corners resize of every channel by an integer factor.
FeatureMap upsample_bilinear(const FeatureMap& map, std::size_t factor);

/// Gradient of upsample_bilinear with respect to its input, given the
/// gradient with respect to its output.
GradMap upsample_bilinear_backward(const GradMap& grad_out, const Shape& input_shape,
                                   std::size_t factor);

/// Source coordinate for output index i when resampling n_in points onto
/// n_out points with coincident endpoints.
inline double align_corners_coord(std::size_t i, std::size_t n_in, std::size_t n_out) {
  if (n_out <= 1 || n_in <= 1) return 0.0;
  return static_cast<double>(i) * static_cast<double>(n_in - 1) / static_cast<double>(n_out - 1);
}

}  // namespace viewrank
