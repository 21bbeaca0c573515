#include "viewrank/cli/checks.hpp"

#include <cmath>

#include "viewrank/bilinear.hpp"
#include "viewrank/ranking.hpp"
#include "viewrank/toy/rng.hpp"

namespace viewrank::cli {

namespace {

constexpr double kStep = 1e-6;
constexpr double kLossStep = 1e-5;
// A smaller step makes crossing a ReLU kink inside the stencil unlikely; the
// absolute floor sits above the round-off such a step produces on an O(1) loss.
constexpr double kModelStep = 1e-7;
constexpr double kModelAbsFloor = 1e-5;

FeatureMap random_map(toy::Rng& rng, Shape s) {
  FeatureMap m(s);
  for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

Box random_box(toy::Rng& rng, double min_side = 0.1) {
  const double w = rng.uniform(min_side, 1.0), h = rng.uniform(min_side, 1.0);
  const double x0 = rng.uniform(0.0, 1.0 - w), y0 = rng.uniform(0.0, 1.0 - h);
  return {x0, y0, std::min(1.0, x0 + w), std::min(1.0, y0 + h)};
}

GradCheckReport check_bilinear(std::uint64_t seed, double tol) {
  toy::Rng rng(seed);
  const Shape s{2, 3 + rng.below(7), 3 + rng.below(7)};
  const FeatureMap map = random_map(rng, s);
  struct Query {
    std::size_t c;
    double x, y, r;
  };
  std::vector<Query> qs;
  for (int i = 0; i < 6; ++i) {
    // Includes points outside the map to exercise border clamping.
    qs.push_back({rng.below(s.channels), rng.uniform(-0.5, static_cast<double>(s.width) - 0.5),
                  rng.uniform(-0.5, static_cast<double>(s.height) - 0.5), rng.uniform(-1.0, 1.0)});
  }
  GradMap g(s);
  for (const auto& q : qs) bilinear_sample_backward(g, q.c, q.x, q.y, q.r);
  auto f = [&](const FeatureMap& m) {
    double sum = 0.0;
    for (const auto& q : qs) sum += q.r * bilinear_sample(m, q.c, q.x, q.y);
    return sum;
  };
  return finite_diff_check(f, map, g, kStep, tol);
}

GradCheckReport check_roi(RoIKind kind, std::uint64_t seed, double tol) {
  toy::Rng rng(seed);
  RoIConfig cfg = RoIConfig::defaults(kind);
  cfg.output_size = 2 + rng.below(4);
  const Shape s{2, 6 + rng.below(7), 6 + rng.below(7)};
  const FeatureMap map = random_map(rng, s);
  std::vector<Box> boxes;
  for (int i = 0; i < 3; ++i) boxes.push_back(random_box(rng));
  std::vector<FeatureMap> upstream;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    upstream.push_back(random_map(rng, {s.channels, cfg.output_size, cfg.output_size}));
  }
  const GradMap g = roi_backward(map, boxes, cfg, upstream);
  auto f = [&](const FeatureMap& m) {
    const auto out = roi_forward(m, boxes, cfg);
    double sum = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto a = out[i].data.values();
      const auto b = upstream[i].values();
      for (std::size_t k = 0; k < a.size(); ++k) sum += a[k] * b[k];
    }
    return sum;
  };
  return finite_diff_check(f, map, g, kStep, tol);
}

GradCheckReport check_loss(bool hinge, std::uint64_t seed, double tol) {
  toy::Rng rng(seed);
  GradCheckOptions opts;
  opts.abs_floor = 1e-6;
  if (hinge) {
    std::vector<double> p{rng.uniform(-2.0, 2.0), 0.0};
    // Keep the margin away from the kink at zero.
    double margin = rng.uniform(0.05, 1.5) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    p[1] = p[0] - 1.0 + margin;
    const LossResult r = pairwise_hinge_loss(p[0], p[1]);
    return finite_diff_check([&] { return pairwise_hinge_loss(p[0], p[1]).value; }, p, r.grad, kLossStep,
                             tol, opts);
  }
  const std::size_t n = 2 + rng.below(9);
  std::vector<double> pred(n), gt(n);
  for (auto& v : pred) v = rng.uniform(-3.0, 3.0);
  for (auto& v : gt) v = rng.uniform(-3.0, 3.0);
  const LossResult r = listwise_ce_loss(pred, gt);
  return finite_diff_check([&] { return listwise_ce_loss(pred, gt).value; }, pred, r.grad, kLossStep, tol,
                           opts);
}

GradCheckReport check_model(const CheckTarget& t, std::uint64_t seed, double tol) {
  toy::Rng rng(seed);
  constexpr toy::SamplerKind kSamplers[] = {toy::SamplerKind::None, toy::SamplerKind::Pool,
                                            toy::SamplerKind::Align, toy::SamplerKind::Warp,
                                            toy::SamplerKind::Refine};
  constexpr toy::LossKind kLosses[] = {toy::LossKind::Listwise, toy::LossKind::PairwiseAll,
                                       toy::LossKind::PairwiseThreshold, toy::LossKind::PairwiseAdjacent};
  toy::TrainConfig tc;
  tc.roi_kind = t.sampler.value_or(kSamplers[seed % 5]);
  tc.loss_kind = t.loss.value_or(kLosses[(seed / 5) % 4]);
  tc.model = small_model_config();
  // Larger init than the training default so hidden units are active and the
  // gradient is far from zero everywhere.
  tc.model.fc_init_std = 0.3;

  toy::ModelParams params = toy::init_model(tc.model, toy::mix_seed(seed, 1));
  for (auto& t2 : params.tensors) {
    if (t2.name.ends_with(".bias")) {
      for (double& v : t2.values) v = rng.uniform(-0.1, 0.1);
    }
  }
  FeatureMap image({3, 16, 16});
  for (double& v : image.values()) v = rng.uniform();
  std::vector<Box> views;
  std::vector<double> gt;
  for (int i = 0; i < 4; ++i) {
    views.push_back(random_box(rng, 0.3));
    gt.push_back(rng.uniform(-1.5, 1.0));
  }
  const auto roi = toy::roi_config_for(tc.roi_kind, tc.model.roi_output_size);
  const toy::ListLoss loss = [&](const ScoreList& pred) { return toy::list_loss(tc, pred, gt); };

  toy::ModelGrad grad = toy::zero_grad(params);
  toy::accumulate_gradient(params, image, views, roi, loss, 1.0, grad);
  auto f = [&] {
    const ScoreList s = toy::forward_score(params, image, views, roi);
    return loss(s).value;
  };
  GradCheckOptions opts;
  opts.abs_floor = kModelAbsFloor;
  GradCheckReport total;
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    GradCheckReport r = finite_diff_check(f, params.tensors[i].values, grad[i], kModelStep, tol, opts);
    if (!r.passed) r.diagnostic = params.tensors[i].name + (r.diagnostic.empty() ? "" : ": " + r.diagnostic);
    total.merge(r);
  }
  return total;
}

}  // namespace

toy::ModelConfig small_model_config() {
  toy::ModelConfig m;
  m.roi_output_size = 4;
  m.fc_hidden = {8, 4};
  return m;
}

std::optional<CheckTarget> parse_check_target(std::string_view text) {
  CheckTarget t;
  if (text == "bilinear") {
    t.kind = CheckTarget::Kind::Bilinear;
    return t;
  }
  if (text == "model") {
    t.kind = CheckTarget::Kind::Model;
    return t;
  }
  if (text.starts_with("roi:")) {
    auto k = parse_roi_kind(text.substr(4));
    if (!k) return std::nullopt;
    t.kind = CheckTarget::Kind::RoI;
    t.roi = *k;
    return t;
  }
  if (text.starts_with("loss:")) {
    const auto rest = text.substr(5);
    if (rest != "listwise" && rest != "hinge") return std::nullopt;
    t.kind = CheckTarget::Kind::Loss;
    t.hinge = rest == "hinge";
    return t;
  }
  if (text.starts_with("model:")) {
    const auto rest = text.substr(6);
    const auto colon = rest.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    t.kind = CheckTarget::Kind::Model;
    t.sampler = toy::parse_sampler_kind(rest.substr(0, colon));
    t.loss = toy::parse_loss_kind(rest.substr(colon + 1));
    if (!t.sampler || !t.loss) return std::nullopt;
    return t;
  }
  return std::nullopt;
}

std::string to_string(const CheckTarget& t) {
  switch (t.kind) {
    case CheckTarget::Kind::Bilinear: return "bilinear";
    case CheckTarget::Kind::RoI: return "roi:" + std::string(viewrank::to_string(t.roi));
    case CheckTarget::Kind::Loss: return t.hinge ? "loss:hinge" : "loss:listwise";
    case CheckTarget::Kind::Model:
      if (t.sampler && t.loss) {
        return "model:" + std::string(toy::to_string(*t.sampler)) + ":" + std::string(toy::to_string(*t.loss));
      }
      return "model";
  }
  return "?";
}

double default_tolerance(const CheckTarget& target) {
  return target.kind == CheckTarget::Kind::Loss ? 1e-6 : 1e-3;
}

GradCheckReport run_gradcheck(const CheckTarget& target, std::uint64_t seed, double tol) {
  switch (target.kind) {
    case CheckTarget::Kind::Bilinear: return check_bilinear(seed, tol);
    case CheckTarget::Kind::RoI: return check_roi(target.roi, seed, tol);
    case CheckTarget::Kind::Loss: return check_loss(target.hinge, seed, tol);
    case CheckTarget::Kind::Model: return check_model(target, seed, tol);
  }
  return {};
}

}  // namespace viewrank::cli
