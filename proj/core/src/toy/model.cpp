#include "viewrank/toy/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "viewrank/bilinear.hpp"
#include "viewrank/errors.hpp"
#include "viewrank/toy/rng.hpp"

namespace viewrank::toy {

std::string_view to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::None: return "none";
    case SamplerKind::Pool: return "pool";
    case SamplerKind::Align: return "align";
    case SamplerKind::Warp: return "warp";
    case SamplerKind::Refine: return "refine";
  }
  return "?";
}

std::optional<SamplerKind> parse_sampler_kind(std::string_view name) {
  for (SamplerKind k : {SamplerKind::None, SamplerKind::Pool, SamplerKind::Align,
                        SamplerKind::Warp, SamplerKind::Refine}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

std::optional<RoIConfig> roi_config_for(SamplerKind kind, std::size_t output_size) {
  RoIKind roi{};
  switch (kind) {
    case SamplerKind::None: return std::nullopt;
    case SamplerKind::Pool: roi = RoIKind::Pool; break;
    case SamplerKind::Align: roi = RoIKind::Align; break;
    case SamplerKind::Warp: roi = RoIKind::Warp; break;
    case SamplerKind::Refine: roi = RoIKind::Refine; break;
  }
  RoIConfig cfg = RoIConfig::defaults(roi);
  cfg.output_size = output_size;
  return cfg;
}

void ModelConfig::validate() const {
  if (input_channels == 0) throw InvalidField("input_channels", "must be >= 1");
  if (conv_channels.empty()) throw InvalidField("conv_channels", "need at least one conv layer");
  if (conv_channels.size() != conv_strides.size()) {
    throw InvalidField("conv_strides", "must have one entry per conv layer");
  }
  for (std::size_t c : conv_channels) {
    if (c == 0) throw InvalidField("conv_channels", "every entry must be >= 1");
  }
  for (std::size_t s : conv_strides) {
    if (s == 0) throw InvalidField("conv_strides", "every entry must be >= 1");
  }
  for (std::size_t h : fc_hidden) {
    if (h == 0) throw InvalidField("fc_hidden", "every entry must be >= 1");
  }
  if (roi_output_size == 0) throw InvalidField("roi_output_size", "must be >= 1");
  if (!(fc_init_std >= 0.0)) throw InvalidField("fc_init_std", "must be >= 0");
}

std::size_t ModelConfig::feature_size() const {
  return conv_channels.back() * roi_output_size * roi_output_size;
}

std::size_t ModelConfig::crop_input_size() const {
  std::size_t total = 1;
  for (std::size_t s : conv_strides) total *= s;
  return roi_output_size * total;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.values.size();
  return n;
}

bool ModelParams::operator==(const ModelParams& other) const {
  if (tensors.size() != other.tensors.size()) return false;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].name != other.tensors[i].name || tensors[i].dims != other.tensors[i].dims ||
        tensors[i].values != other.tensors[i].values) {
      return false;
    }
  }
  return true;
}

ModelGrad zero_grad(const ModelParams& params) {
  ModelGrad g;
  g.reserve(params.tensors.size());
  for (const auto& t : params.tensors) g.emplace_back(t.values.size(), 0.0);
  return g;
}

ModelParams init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ModelParams p;
  p.config = config;

  std::size_t in = config.input_channels;
  for (std::size_t l = 0; l < config.conv_channels.size(); ++l) {
    const std::size_t out = config.conv_channels[l];
    ParamTensor w{"conv" + std::to_string(l) + ".weight", {out, in, 3, 3}, {}};
    const double stddev = std::sqrt(2.0 / static_cast<double>(in * 9));
    w.values.resize(out * in * 9);
    for (double& v : w.values) v = rng.normal(0.0, stddev);
    p.tensors.push_back(std::move(w));
    p.tensors.push_back({"conv" + std::to_string(l) + ".bias", {out}, std::vector<double>(out, 0.0)});
    in = out;
  }

  std::vector<std::size_t> widths{config.feature_size()};
  widths.insert(widths.end(), config.fc_hidden.begin(), config.fc_hidden.end());
  widths.push_back(1);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    ParamTensor w{"fc" + std::to_string(l) + ".weight", {widths[l + 1], widths[l]}, {}};
    w.values.resize(widths[l + 1] * widths[l]);
    for (double& v : w.values) v = rng.normal(0.0, config.fc_init_std);
    p.tensors.push_back(std::move(w));
    p.tensors.push_back(
        {"fc" + std::to_string(l) + ".bias", {widths[l + 1]}, std::vector<double>(widths[l + 1], 0.0)});
  }
  return p;
}

FeatureMap resize_image(const FeatureMap& image, std::size_t height, std::size_t width) {
  FeatureMap out({image.channels(), height, width});
  for (std::size_t i = 0; i < height; ++i) {
    const double y = align_corners_coord(i, image.height(), height);
    for (std::size_t j = 0; j < width; ++j) {
      const auto taps =
          bilinear_taps(image.height(), image.width(), align_corners_coord(j, image.width(), width), y);
      for (std::size_t c = 0; c < image.channels(); ++c) out(c, i, j) = taps.apply(image.channel(c));
    }
  }
  return out;
}

namespace {

std::size_t conv_out(std::size_t n, std::size_t stride) { return (n - 1) / stride + 1; }

// Four independent partial sums so the compiler can vectorize.
double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

// 3x3 convolution, zero padding 1, followed by ReLU (applied in place).
FeatureMap conv_relu_forward(const FeatureMap& x, const std::vector<double>& w,
                             const std::vector<double>& b, std::size_t out_c, std::size_t stride) {
  const std::size_t in_c = x.channels(), h = x.height(), wd = x.width();
  const std::size_t ho = conv_out(h, stride), wo = conv_out(wd, stride);
  FeatureMap y({out_c, ho, wo});
  for (std::size_t o = 0; o < out_c; ++o) {
    auto dst = y.channel(o);
    std::fill(dst.begin(), dst.end(), b[o]);
    for (std::size_t c = 0; c < in_c; ++c) {
      auto src = x.channel(c);
      for (std::size_t ky = 0; ky < 3; ++ky) {
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const double wv = w[((o * in_c + c) * 3 + ky) * 3 + kx];
          // ox range whose input column ox*stride + kx - 1 lies in [0, wd).
          const std::size_t ox_lo = kx == 0 ? 1 : 0;
          const std::size_t ox_hi = std::min(wo, (wd + 1 - kx - 1) / stride + 1);
          for (std::size_t oy = 0; oy < ho; ++oy) {
            const long iy = static_cast<long>(oy * stride + ky) - 1;
            if (iy < 0 || iy >= static_cast<long>(h)) continue;
            const double* row = src.data() + static_cast<std::size_t>(iy) * wd;
            double* out = dst.data() + oy * wo;
            for (std::size_t ox = ox_lo; ox < ox_hi; ++ox) {
              out[ox] += wv * row[ox * stride + kx - 1];
            }
          }
        }
      }
    }
  }
  for (double& v : y.values()) v = std::max(v, 0.0);
  return y;
}

// Backward through ReLU + conv. `dy` is the gradient w.r.t. the ReLU output
// and is masked in place. dx is skipped when null.
void conv_relu_backward(const FeatureMap& x, const FeatureMap& y, FeatureMap& dy,
                        const std::vector<double>& w, std::size_t stride, std::vector<double>& dw,
                        std::vector<double>& db, FeatureMap* dx, double weight) {
  const std::size_t in_c = x.channels(), h = x.height(), wd = x.width();
  const std::size_t out_c = y.channels(), ho = y.height(), wo = y.width();
  auto yv = y.values();
  auto dyv = dy.values();
  for (std::size_t i = 0; i < dyv.size(); ++i) dyv[i] = yv[i] > 0.0 ? dyv[i] * weight : 0.0;

  for (std::size_t o = 0; o < out_c; ++o) {
    auto g = dy.channel(o);
    double bsum = 0.0;
    for (double v : g) bsum += v;
    db[o] += bsum;
    for (std::size_t c = 0; c < in_c; ++c) {
      auto src = x.channel(c);
      for (std::size_t ky = 0; ky < 3; ++ky) {
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const std::size_t widx = ((o * in_c + c) * 3 + ky) * 3 + kx;
          const double wv = w[widx];
          const std::size_t ox_lo = kx == 0 ? 1 : 0;
          const std::size_t ox_hi = std::min(wo, (wd + 1 - kx - 1) / stride + 1);
          double acc = 0.0;
          for (std::size_t oy = 0; oy < ho; ++oy) {
            const long iy = static_cast<long>(oy * stride + ky) - 1;
            if (iy < 0 || iy >= static_cast<long>(h)) continue;
            const std::size_t row_off = static_cast<std::size_t>(iy) * wd;
            const double* row = src.data() + row_off;
            const double* grow = g.data() + oy * wo;
            if (stride == 1) {
              acc += dot(grow + ox_lo, row + ox_lo + kx - 1, ox_hi - ox_lo);
            } else {
              for (std::size_t ox = ox_lo; ox < ox_hi; ++ox) acc += grow[ox] * row[ox * stride + kx - 1];
            }
            if (dx != nullptr) {
              double* drow = dx->channel(c).data() + row_off;
              for (std::size_t ox = ox_lo; ox < ox_hi; ++ox) drow[ox * stride + kx - 1] += wv * grow[ox];
            }
          }
          dw[widx] += acc;
        }
      }
    }
  }
}

struct BackboneTrace {
  std::vector<FeatureMap> acts;  // acts[0] = input, acts[l + 1] = output of layer l
};

BackboneTrace backbone_forward(const ModelParams& p, const FeatureMap& input) {
  const auto& cfg = p.config;
  if (input.channels() != cfg.input_channels) {
    throw std::invalid_argument("model: image has " + std::to_string(input.channels()) +
                                " channels, model expects " + std::to_string(cfg.input_channels));
  }
  BackboneTrace t;
  t.acts.reserve(cfg.conv_channels.size() + 1);
  t.acts.push_back(input);
  if (cfg.input_shift != 0.0) {
    for (double& v : t.acts.back().values()) v -= cfg.input_shift;
  }
  for (std::size_t l = 0; l < cfg.conv_channels.size(); ++l) {
    t.acts.push_back(conv_relu_forward(t.acts.back(), p.tensors[2 * l].values,
                                       p.tensors[2 * l + 1].values, cfg.conv_channels[l],
                                       cfg.conv_strides[l]));
  }
  return t;
}

// d_out: gradient w.r.t. the backbone output (consumed).
void backbone_backward(const ModelParams& p, const BackboneTrace& t, FeatureMap d_out,
                       double weight, ModelGrad& grad) {
  const auto& cfg = p.config;
  for (std::size_t l = cfg.conv_channels.size(); l-- > 0;) {
    FeatureMap dx;
    const bool need_dx = l > 0;
    if (need_dx) dx = FeatureMap(t.acts[l].shape());
    conv_relu_backward(t.acts[l], t.acts[l + 1], d_out, p.tensors[2 * l].values, cfg.conv_strides[l],
                       grad[2 * l], grad[2 * l + 1], need_dx ? &dx : nullptr, weight);
    weight = 1.0;  // applied once, at the top layer
    if (need_dx) d_out = std::move(dx);
  }
}

FeatureMap crop_and_warp(const FeatureMap& image, const Box& view, std::size_t size) {
  FeatureMap out({image.channels(), size, size});
  const double px0 = view.x0 * static_cast<double>(image.width() - 1);
  const double px1 = view.x1 * static_cast<double>(image.width() - 1);
  const double py0 = view.y0 * static_cast<double>(image.height() - 1);
  const double py1 = view.y1 * static_cast<double>(image.height() - 1);
  const double denom = size > 1 ? static_cast<double>(size - 1) : 1.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double y = py0 + (py1 - py0) * static_cast<double>(i) / denom;
    for (std::size_t j = 0; j < size; ++j) {
      const double x = px0 + (px1 - px0) * static_cast<double>(j) / denom;
      const auto taps = bilinear_taps(image.height(), image.width(), x, y);
      for (std::size_t c = 0; c < image.channels(); ++c) out(c, i, j) = taps.apply(image.channel(c));
    }
  }
  return out;
}

struct HeadTrace {
  std::vector<std::vector<double>> acts;  // acts[0] = flattened feature, last = {score}
};

std::size_t fc_base(const ModelConfig& cfg) { return 2 * cfg.conv_channels.size(); }

HeadTrace head_forward(const ModelParams& p, std::span<const double> feature) {
  const std::size_t base = fc_base(p.config);
  const std::size_t layers = (p.tensors.size() - base) / 2;
  HeadTrace t;
  t.acts.emplace_back(feature.begin(), feature.end());
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& w = p.tensors[base + 2 * l];
    const auto& b = p.tensors[base + 2 * l + 1].values;
    const std::size_t out = w.dims[0], in = w.dims[1];
    const auto& x = t.acts.back();
    std::vector<double> y(out);
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = w.values.data() + o * in;
      const double acc = b[o] + dot(row, x.data(), in);
      y[o] = l + 1 < layers ? std::max(acc, 0.0) : acc;
    }
    t.acts.push_back(std::move(y));
  }
  return t;
}

// Returns the gradient w.r.t. the flattened feature.
std::vector<double> head_backward(const ModelParams& p, const HeadTrace& t, double d_score,
                                  ModelGrad& grad) {
  const std::size_t base = fc_base(p.config);
  const std::size_t layers = (p.tensors.size() - base) / 2;
  std::vector<double> dy{d_score};
  for (std::size_t l = layers; l-- > 0;) {
    const auto& w = p.tensors[base + 2 * l];
    const std::size_t out = w.dims[0], in = w.dims[1];
    const auto& x = t.acts[l];
    auto& dw = grad[base + 2 * l];
    auto& db = grad[base + 2 * l + 1];
    std::vector<double> dx(in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dy[o];
      if (g == 0.0) continue;
      db[o] += g;
      const double* row = w.values.data() + o * in;
      double* drow = dw.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) {
        drow[i] += g * x[i];
        dx[i] += g * row[i];
      }
    }
    if (l > 0) {
      // ReLU of the previous layer's output.
      for (std::size_t i = 0; i < in; ++i) {
        if (x[i] <= 0.0) dx[i] = 0.0;
      }
    }
    dy = std::move(dx);
  }
  return dy;
}

void check_views(const ModelParams& p, std::span<const Box> views) {
  p.config.validate();
  if (views.empty()) throw std::invalid_argument("model: empty view list");
  for (const Box& v : views) require_valid(v);
}

void check_roi(const ModelParams& p, const std::optional<RoIConfig>& roi) {
  if (roi && roi->output_size != p.config.roi_output_size) {
    throw std::invalid_argument("model: RoI output size " + std::to_string(roi->output_size) +
                                " does not match model " + std::to_string(p.config.roi_output_size));
  }
}

}  // namespace

ScoreList forward_score(const ModelParams& params, const FeatureMap& image,
                        std::span<const Box> views, const std::optional<RoIConfig>& roi) {
  check_views(params, views);
  check_roi(params, roi);
  ScoreList scores;
  scores.reserve(views.size());
  if (roi) {
    const BackboneTrace trace = backbone_forward(params, image);
    const auto features = roi_forward(trace.acts.back(), views, *roi);
    for (const auto& f : features) scores.push_back(head_forward(params, f.data.values()).acts.back()[0]);
  } else {
    const std::size_t size = params.config.crop_input_size();
    for (const Box& v : views) {
      const BackboneTrace trace = backbone_forward(params, crop_and_warp(image, v, size));
      scores.push_back(head_forward(params, trace.acts.back().values()).acts.back()[0]);
    }
  }
  return scores;
}

ScoreList forward_score(const ModelParams& params, const FeatureMap& image,
                        std::span<const Box> views, SamplerKind kind) {
  return forward_score(params, image, views, roi_config_for(kind, params.config.roi_output_size));
}

double accumulate_gradient(const ModelParams& params, const FeatureMap& image,
                           std::span<const Box> views, const std::optional<RoIConfig>& roi,
                           const ListLoss& loss, double weight, ModelGrad& grad) {
  check_views(params, views);
  check_roi(params, roi);
  if (grad.size() != params.tensors.size()) {
    throw std::invalid_argument("model: gradient layout does not match parameters");
  }
  const std::size_t out = params.config.roi_output_size;
  const Shape feature_shape{params.config.conv_channels.back(), out, out};

  if (roi) {
    const BackboneTrace trace = backbone_forward(params, image);
    const FeatureMap& fmap = trace.acts.back();
    const auto features = roi_forward(fmap, views, *roi);
    std::vector<HeadTrace> heads;
    ScoreList scores;
    for (const auto& f : features) {
      heads.push_back(head_forward(params, f.data.values()));
      scores.push_back(heads.back().acts.back()[0]);
    }
    const LossResult lr = loss(scores);
    std::vector<FeatureMap> d_features;
    d_features.reserve(views.size());
    for (std::size_t v = 0; v < views.size(); ++v) {
      d_features.emplace_back(feature_shape,
                              head_backward(params, heads[v], weight * lr.grad[v], grad));
    }
    const GradMap d_map = roi_backward(fmap, views, *roi, d_features);
    backbone_backward(params, trace, FeatureMap(d_map.as_map()), 1.0, grad);
    return lr.value;
  }

  const std::size_t size = params.config.crop_input_size();
  std::vector<BackboneTrace> traces;
  std::vector<HeadTrace> heads;
  ScoreList scores;
  for (const Box& v : views) {
    traces.push_back(backbone_forward(params, crop_and_warp(image, v, size)));
    heads.push_back(head_forward(params, traces.back().acts.back().values()));
    scores.push_back(heads.back().acts.back()[0]);
  }
  const LossResult lr = loss(scores);
  for (std::size_t v = 0; v < views.size(); ++v) {
    FeatureMap d_feat(feature_shape, head_backward(params, heads[v], weight * lr.grad[v], grad));
    backbone_backward(params, traces[v], std::move(d_feat), 1.0, grad);
  }
  return lr.value;
}

}  // namespace viewrank::toy
