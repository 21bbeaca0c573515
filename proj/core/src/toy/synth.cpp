#include "viewrank/toy/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "viewrank/toy/rng.hpp"
#include "viewrank/views.hpp"

namespace viewrank::toy {

namespace {

constexpr double kSubjectMargin = 0.05;
constexpr double kTieJitter = 1e-6;

const std::array<AspectRatio, 5> kViewRatios{{{1, 1}, {3, 4}, {4, 3}, {9, 16}, {16, 9}}};

double intersection_area(const Box& a, const Box& b) {
  const double iw = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double ih = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  return iw > 0.0 && ih > 0.0 ? iw * ih : 0.0;
}

Box sample_view(Rng& rng, const Box& subject, bool guided) {
  const double scale = rng.uniform(0.45, 0.9);
  const double ratio = kViewRatios[rng.below(kViewRatios.size())].value();
  double w = std::min(1.0, scale * std::sqrt(ratio));
  double h = std::min(1.0, scale / std::sqrt(ratio));

  double x0 = 0.0;
  double y0 = 0.0;
  if (guided) {
    const double ax = rng.below(2) == 0 ? 1.0 / 3.0 : 2.0 / 3.0;
    const double ay = rng.below(2) == 0 ? 1.0 / 3.0 : 2.0 / 3.0;
    x0 = subject.center_x() - ax * w + rng.normal(0.0, 0.08 * w);
    y0 = subject.center_y() - ay * h + rng.normal(0.0, 0.08 * h);
  } else {
    x0 = rng.uniform() * (1.0 - w);
    y0 = rng.uniform() * (1.0 - h);
  }
  x0 = std::clamp(x0, 0.0, 1.0 - w);
  y0 = std::clamp(y0, 0.0, 1.0 - h);
  return {x0, y0, std::min(1.0, x0 + w), std::min(1.0, y0 + h)};
}

}  // namespace

double subject_coverage(const Box& subject, const Box& view) {
  return intersection_area(subject, view) / subject.area();
}

double thirds_distance(const Box& subject, const Box& view) {
  const double u = (subject.center_x() - view.x0) / view.width();
  const double v = (subject.center_y() - view.y0) / view.height();
  double best = std::numeric_limits<double>::infinity();
  for (double a : {1.0 / 3.0, 2.0 / 3.0}) {
    for (double b : {1.0 / 3.0, 2.0 / 3.0}) best = std::min(best, std::hypot(u - a, v - b));
  }
  return std::min(1.0, best / (std::numbers::sqrt2 / 3.0));
}

double truncation_penalty(const Box& subject, const Box& view) {
  return std::min(1.0, 4.0 * (1.0 - subject_coverage(subject, view)));
}

double composition_score(const Box& subject, const Box& view, const SynthConfig& cfg) {
  return subject_coverage(subject, view) - cfg.thirds_weight * thirds_distance(subject, view) -
         cfg.truncation_weight * truncation_penalty(subject, view);
}

SynthImage render_synth_image(std::uint64_t seed, const SynthConfig& cfg) {
  Rng rng(seed);
  const double sw = rng.uniform(0.15, 0.3);
  const double sh = rng.uniform(0.15, 0.3);
  const double sx = rng.uniform(kSubjectMargin, 1.0 - kSubjectMargin - sw);
  const double sy = rng.uniform(kSubjectMargin, 1.0 - kSubjectMargin - sh);
  const Box subject{sx, sy, sx + sw, sy + sh};

  std::array<double, 3> base{}, grad_x{}, grad_y{}, color{};
  for (int c = 0; c < 3; ++c) {
    base[c] = rng.uniform(0.25, 0.45);
    grad_x[c] = rng.uniform(-0.15, 0.15);
    grad_y[c] = rng.uniform(-0.15, 0.15);
  }
  const std::uint64_t bright = 1 + rng.below(7);  // non-empty channel subset
  for (int c = 0; c < 3; ++c) {
    color[c] = (bright >> c) & 1U ? rng.uniform(0.85, 1.0) : rng.uniform(0.0, 0.1);
  }
  const double wave_fx = rng.uniform(1.0, 3.0);
  const double wave_fy = rng.uniform(1.0, 3.0);
  const double wave_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  FeatureMap img({3, cfg.height, cfg.width});
  const double hx = static_cast<double>(std::max<std::size_t>(cfg.width - 1, 1));
  const double hy = static_cast<double>(std::max<std::size_t>(cfg.height - 1, 1));
  for (std::size_t i = 0; i < cfg.height; ++i) {
    const double y = static_cast<double>(i) / hy;
    for (std::size_t j = 0; j < cfg.width; ++j) {
      const double x = static_cast<double>(j) / hx;
      const double wave =
          0.04 * std::sin(2.0 * std::numbers::pi * (wave_fx * x + wave_fy * y) + wave_phase);
      // Elliptical blob inscribed in the subject box with a soft rim.
      const double du = (x - subject.center_x()) / (0.5 * subject.width());
      const double dv = (y - subject.center_y()) / (0.5 * subject.height());
      const double alpha = std::clamp((1.0 - std::hypot(du, dv)) / 0.2, 0.0, 1.0);
      for (std::size_t c = 0; c < 3; ++c) {
        const double bg = base[c] + grad_x[c] * (x - 0.5) + grad_y[c] * (y - 0.5) + wave;
        img(c, i, j) = std::clamp((1.0 - alpha) * bg + alpha * color[c], 0.0, 1.0);
      }
    }
  }
  return {std::move(img), subject, seed};
}

std::vector<SynthSample> synth_generate(std::uint64_t seed, std::size_t n_images,
                                        std::size_t n_views, const SynthConfig& cfg) {
  if (n_views < 2) throw std::invalid_argument("synth_generate: n_views must be >= 2");
  std::vector<SynthSample> out;
  out.reserve(n_images);
  for (std::size_t i = 0; i < n_images; ++i) {
    const std::uint64_t image_seed = mix_seed(seed, i);
    SynthSample sample;
    sample.image = render_synth_image(image_seed, cfg);
    sample.list.image_ref = "synth-" + std::to_string(image_seed);

    Rng rng(mix_seed(image_seed, 1));
    const Box& subject = sample.image.subject_box;
    const auto guided = static_cast<std::size_t>(std::lround(cfg.guided_fraction *
                                                             static_cast<double>(n_views)));
    std::vector<bool> is_guided(n_views, false);
    std::fill_n(is_guided.begin(), std::min(guided, n_views), true);
    for (std::size_t v = n_views; v > 1; --v) {
      const std::size_t k = rng.below(v);
      const bool tmp = is_guided[v - 1];
      is_guided[v - 1] = is_guided[k];
      is_guided[k] = tmp;
    }
    for (std::size_t v = 0; v < n_views; ++v) {
      const Box view = sample_view(rng, subject, is_guided[v]);
      sample.list.views.push_back(view);
      sample.list.gt_scores.push_back(composition_score(subject, view, cfg) +
                                      kTieJitter * (rng.uniform() - 0.5));
    }
    out.push_back(std::move(sample));
  }
  return out;
}

}  // namespace viewrank::toy
