#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "viewrank/box.hpp"
#include "viewrank/ranking.hpp"
#include "viewrank/tensor.hpp"

namespace viewrank::toy {

/// Synthetic composition data: a smooth background with one bright subject
/// blob, plus candidate views scored by a fixed composition rule.
struct SynthConfig {
  std::size_t height = 64;
  std::size_t width = 64;
  /// Fraction of views placed so the subject lands near a rule-of-thirds
  /// point; the rest are placed uniformly at random.
  double guided_fraction = 0.5;
  double thirds_weight = 0.5;      // lambda
  double truncation_weight = 1.0;  // mu
};

struct SynthImage {
  FeatureMap image;  // 3 x height x width, values in [0, 1]
  Box subject_box;
  std::uint64_t seed = 0;
};

struct ViewList {
  std::string image_ref;
  std::vector<Box> views;
  ScoreList gt_scores;
};

struct SynthSample {
  SynthImage image;
  ViewList list;
};

/// Fraction of the subject's area inside the view.
double subject_coverage(const Box& subject, const Box& view);

/// Distance from the subject centre, in view-relative coordinates, to the
/// nearest rule-of-thirds intersection, normalized so a view corner scores 1
/// and clamped to [0, 1].
double thirds_distance(const Box& subject, const Box& view);

/// 0 when the subject is fully inside the view, rising linearly to 1 once a
/// quarter or more of it is cut away.
double truncation_penalty(const Box& subject, const Box& view);

/// coverage - thirds_weight * thirds_distance - truncation_weight * truncation.
double composition_score(const Box& subject, const Box& view, const SynthConfig& cfg = {});

/// Renders the image for one seed (background + subject blob).
SynthImage render_synth_image(std::uint64_t seed, const SynthConfig& cfg = {});

/// Deterministic dataset: image i uses seed mix_seed(seed, i). Throws if
/// n_views < 2.
std::vector<SynthSample> synth_generate(std::uint64_t seed, std::size_t n_images,
                                        std::size_t n_views, const SynthConfig& cfg = {});

}  // namespace viewrank::toy
