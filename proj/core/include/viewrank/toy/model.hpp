#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "viewrank/box.hpp"
#include "viewrank/ranking.hpp"
#include "viewrank/roi.hpp"
#include "viewrank/tensor.hpp"

namespace viewrank::toy {

/// How per-view features are obtained. None is the classic baseline: crop the
/// view out of the image, warp it to a fixed size and run the backbone on the
/// crop. The other kinds run the backbone once and sample its feature map.
enum class SamplerKind { None, Pool, Align, Warp, Refine };

std::string_view to_string(SamplerKind kind);
std::optional<SamplerKind> parse_sampler_kind(std::string_view name);
std::optional<RoIConfig> roi_config_for(SamplerKind kind, std::size_t output_size);

/// Tiny backbone (3x3 convs, padding 1, ReLU) followed by an FC scoring head
/// whose last layer has exactly one output.
struct ModelConfig {
  std::size_t input_channels = 3;
  std::vector<std::size_t> conv_channels{8, 16, 16};
  std::vector<std::size_t> conv_strides{1, 2, 1};
  std::vector<std::size_t> fc_hidden{64, 32};
  std::size_t roi_output_size = 14;
  double fc_init_std = 0.05;
  /// Subtracted from every input pixel before the first convolution (mean
  /// pixel removal).
  double input_shift = 0.5;

  void validate() const;
  /// Flattened per-view feature length feeding the first FC layer.
  std::size_t feature_size() const;
  /// Side of the square crop fed to the backbone by SamplerKind::None.
  std::size_t crop_input_size() const;
};

struct ParamTensor {
  std::string name;
  std::vector<std::size_t> dims;
  std::vector<double> values;
};

struct ModelParams {
  ModelConfig config;
  std::vector<ParamTensor> tensors;  // conv{i}.weight/bias, then fc{i}.weight/bias

  std::size_t parameter_count() const;
  bool operator==(const ModelParams& other) const;
};

/// Same layout as ModelParams::tensors.
using ModelGrad = std::vector<std::vector<double>>;

ModelGrad zero_grad(const ModelParams& params);

/// Conv weights use He-normal initialization; FC weights are drawn from
/// normal(0, fc_init_std). All biases start at zero.
ModelParams init_model(const ModelConfig& config, std::uint64_t seed);

/// One score per view, in view order.
ScoreList forward_score(const ModelParams& params, const FeatureMap& image,
                        std::span<const Box> views, const std::optional<RoIConfig>& roi);
ScoreList forward_score(const ModelParams& params, const FeatureMap& image,
                        std::span<const Box> views, SamplerKind kind);

using ListLoss = std::function<LossResult(const ScoreList&)>;

/// Scores the views, applies `loss`, and adds weight * dLoss/dParams into
/// `grad`. Returns the unweighted loss value.
double accumulate_gradient(const ModelParams& params, const FeatureMap& image,
                           std::span<const Box> views, const std::optional<RoIConfig>& roi,
                           const ListLoss& loss, double weight, ModelGrad& grad);

/// Image resized to a new height and width (align-corners bilinear).
FeatureMap resize_image(const FeatureMap& image, std::size_t height, std::size_t width);

}  // namespace viewrank::toy
