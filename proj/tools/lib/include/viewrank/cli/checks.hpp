#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "viewrank/gradcheck.hpp"
#include "viewrank/roi.hpp"
#include "viewrank/toy/train.hpp"

namespace viewrank::cli {

/// What a gradient check exercises:
///   "bilinear", "roi:<pool|align|warp|refine>", "loss:<listwise|hinge>",
///   "model" (small toy model, all parameters, sampler and loss vary with
///   the seed), "model:<sampler>:<loss kind>" (fixed combination).
struct CheckTarget {
  enum class Kind { Bilinear, RoI, Loss, Model };
  Kind kind = Kind::Bilinear;
  RoIKind roi = RoIKind::Refine;
  bool hinge = false;  // Loss: hinge instead of listwise
  std::optional<toy::SamplerKind> sampler;  // Model: fixed sampler
  std::optional<toy::LossKind> loss;        // Model: fixed loss
};

std::optional<CheckTarget> parse_check_target(std::string_view text);
std::string to_string(const CheckTarget& target);

/// Tolerance used when none is given: 1e-6 for losses, 1e-3 otherwise.
double default_tolerance(const CheckTarget& target);

/// Builds one random instance from `seed` and compares its analytic gradient
/// with central finite differences.
GradCheckReport run_gradcheck(const CheckTarget& target, std::uint64_t seed, double tol);

/// The small model used by the "model" targets: 16x16 input, 4 views.
toy::ModelConfig small_model_config();

}  // namespace viewrank::cli
