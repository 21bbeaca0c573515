#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "viewrank/box.hpp"
#include "viewrank/tensor.hpp"

namespace viewrank {

/// The four RoI-aware sampling kernels, differing in where bilinear
/// interpolation happens relative to the crop:
///   Pool    crop (quantized) + pool
///   Align   interp + crop + pool
///   Warp    crop (quantized) + interp + pool
///   Refine  interp (full-map upsample) + crop + interp + pool
enum class RoIKind { Pool, Align, Warp, Refine };
enum class PoolMode { Max, Average };

std::string_view to_string(RoIKind kind);
std::string_view to_string(PoolMode mode);
std::optional<RoIKind> parse_roi_kind(std::string_view name);

struct RoIConfig {
  RoIKind kind = RoIKind::Refine;
  std::size_t output_size = 14;
  std::size_t upsample_factor = 2;  // Refine only
  PoolMode pool_mode = PoolMode::Average;
  std::size_t samples_per_bin = 2;  // Align only, per axis

  /// Default configuration for a kernel: max pooling for Pool, average
  /// pooling for the interpolating kernels.
  static RoIConfig defaults(RoIKind kind);

  void validate() const;
};

struct RoIFeature {
  Box box;
  FeatureMap data;  // channels x output_size x output_size
};

std::vector<RoIFeature> roi_forward(const FeatureMap& map, std::span<const Box> boxes,
                                    const RoIConfig& cfg);

/// Gradient of the RoI outputs with respect to `map`, accumulated over all
/// boxes. Max pooling routes each output's gradient to its first-encountered
/// maximal sample, which is why the input values are needed.
GradMap roi_backward(const FeatureMap& map, std::span<const Box> boxes, const RoIConfig& cfg,
                     std::span<const FeatureMap> grad_out);

/// Shape-only variant; valid for average pooling, where the backward pass
/// does not depend on input values. Throws for max pooling.
GradMap roi_backward(const Shape& map_shape, std::span<const Box> boxes, const RoIConfig& cfg,
                     std::span<const FeatureMap> grad_out);

}  // namespace viewrank
