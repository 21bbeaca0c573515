#include "viewrank/toy/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "viewrank/toy/rng.hpp"
#include "viewrank/errors.hpp"
#include "viewrank/views.hpp"

namespace viewrank::toy {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Listwise: return "listwise";
    case LossKind::PairwiseAll: return "pairwise_all";
    case LossKind::PairwiseThreshold: return "pairwise_threshold";
    case LossKind::PairwiseAdjacent: return "pairwise_adjacent";
  }
  return "?";
}

std::optional<LossKind> parse_loss_kind(std::string_view name) {
  for (LossKind k : {LossKind::Listwise, LossKind::PairwiseAll, LossKind::PairwiseThreshold,
                     LossKind::PairwiseAdjacent}) {
    if (name == to_string(k)) return k;
  }
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidField("learning_rate", "must be > 0");
  if (!(lr_decay > 0.0)) throw InvalidField("lr_decay", "must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidField("momentum", "must be in [0, 1)");
  if (batch_lists == 0) throw InvalidField("batch_lists", "must be >= 1");
  if (!(pair_threshold >= 0.0)) throw InvalidField("pair_threshold", "must be >= 0");
  if (!(rank_temperature > 0.0)) throw InvalidField("rank_temperature", "must be > 0");
  try {
    model.validate();
  } catch (const InvalidField& e) {
    throw InvalidField("model." + e.field(), e.reason());
  }
}

DataSplits make_splits(const DataConfig& cfg) {
  return {synth_generate(mix_seed(cfg.seed, 101), cfg.n_train, cfg.n_views, cfg.synth),
          synth_generate(mix_seed(cfg.seed, 202), cfg.n_val, cfg.n_views, cfg.synth),
          synth_generate(mix_seed(cfg.seed, 303), cfg.n_test, cfg.n_views, cfg.synth)};
}

std::vector<std::pair<std::size_t, std::size_t>> select_pairs(LossKind kind,
                                                              std::span<const double> gt,
                                                              double threshold) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  const std::size_t n = gt.size();
  if (kind == LossKind::PairwiseAdjacent) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return gt[a] > gt[b]; });
    for (std::size_t r = 0; r + 1 < n; ++r) {
      if (gt[order[r]] > gt[order[r + 1]]) pairs.emplace_back(order[r], order[r + 1]);
    }
    return pairs;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!(gt[i] > gt[j])) continue;
      if (kind == LossKind::PairwiseThreshold && gt[i] - gt[j] < threshold) continue;
      pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

LossResult list_loss(const TrainConfig& cfg, std::span<const double> pred,
                     std::span<const double> gt_scores) {
  if (pred.size() != gt_scores.size()) {
    throw std::invalid_argument("list_loss: prediction/target length mismatch");
  }
  if (cfg.loss_kind == LossKind::Listwise) {
    const ScoreList target = scores_to_rank_order(gt_scores, cfg.rank_temperature);
    return listwise_ce_loss(pred, target);
  }
  const auto pairs = select_pairs(cfg.loss_kind, gt_scores, cfg.pair_threshold);
  LossResult r;
  r.grad.assign(pred.size(), 0.0);
  if (pairs.empty()) return r;
  const double inv = 1.0 / static_cast<double>(pairs.size());
  for (const auto& [better, worse] : pairs) {
    const LossResult h = pairwise_hinge_loss(pred[better], pred[worse]);
    r.value += inv * h.value;
    r.grad[better] += inv * h.grad[0];
    r.grad[worse] += inv * h.grad[1];
  }
  return r;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman: length mismatch");
  const std::size_t n = a.size();
  auto ranks = [n](std::span<const double> v) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j);
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / static_cast<double>(n);
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

EvalReport evaluate_predictions(std::span<const ViewList> lists, std::span<const ScoreList> predictions) {
  if (lists.size() != predictions.size()) {
    throw std::invalid_argument("evaluate_predictions: list/prediction count mismatch");
  }
  EvalReport r;
  if (lists.empty()) return r;
  for (std::size_t i = 0; i < lists.size(); ++i) {
    const ViewList& list = lists[i];
    const ScoreList& pred = predictions[i];
    r.spearman += spearman(pred, list.gt_scores);
    const std::size_t picked = best_view_index(pred);
    const std::size_t oracle = best_view_index(list.gt_scores);
    r.top1_accuracy += picked == oracle ? 1.0 : 0.0;
    r.mean_iou_vs_oracle_best += iou(list.views[picked], list.views[oracle]);
  }
  const double n = static_cast<double>(lists.size());
  r.spearman /= n;
  r.top1_accuracy /= n;
  r.mean_iou_vs_oracle_best /= n;
  return r;
}

std::vector<ScoreList> predict_all(const ModelParams& params, SamplerKind kind,
                                   std::span<const SynthSample> data) {
  std::vector<ScoreList> out;
  out.reserve(data.size());
  for (const auto& s : data) out.push_back(forward_score(params, s.image.image, s.list.views, kind));
  return out;
}

EvalReport eval_rank_quality(const ModelParams& params, SamplerKind kind,
                             std::span<const SynthSample> data) {
  std::vector<ViewList> lists;
  lists.reserve(data.size());
  for (const auto& s : data) lists.push_back(s.list);
  return evaluate_predictions(lists, predict_all(params, kind, data));
}

TrainResult train(const TrainConfig& cfg, std::span<const SynthSample> train_data,
                  std::span<const SynthSample> val_data) {
  cfg.validate();
  if (train_data.empty()) throw std::invalid_argument("train: empty training set");

  TrainResult result;
  result.params = init_model(cfg.model, mix_seed(cfg.rng_seed, 0));
  if (cfg.epochs == 0) return result;

  ModelParams& params = result.params;
  ModelParams best = params;
  double best_val = -std::numeric_limits<double>::infinity();
  ModelGrad velocity = zero_grad(params);
  const auto roi = roi_config_for(cfg.roi_kind, cfg.model.roi_output_size);

  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle(mix_seed(cfg.rng_seed, epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);
    const double lr = cfg.learning_rate * (epoch > cfg.lr_decay_epoch ? cfg.lr_decay : 1.0);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_lists) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_lists);
      const double weight = 1.0 / static_cast<double>(end - start);
      ModelGrad grad = zero_grad(params);
      for (std::size_t k = start; k < end; ++k) {
        const SynthSample& s = train_data[order[k]];
        const ScoreList& gt = s.list.gt_scores;
        loss_sum += accumulate_gradient(
            params, s.image.image, s.list.views, roi,
            [&](const ScoreList& pred) { return list_loss(cfg, pred, gt); }, weight, grad);
      }
      for (std::size_t t = 0; t < params.tensors.size(); ++t) {
        auto& w = params.tensors[t].values;
        auto& v = velocity[t];
        const auto& g = grad[t];
        for (std::size_t i = 0; i < w.size(); ++i) {
          v[i] = cfg.momentum * v[i] + g[i];
          w[i] -= lr * v[i];
        }
      }
      ++step;
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.step = step;
    entry.loss = loss_sum / static_cast<double>(order.size());
    entry.val_spearman = val_data.empty() ? 0.0 : eval_rank_quality(params, cfg.roi_kind, val_data).spearman;
    result.log.push_back(entry);
    if (entry.val_spearman > best_val) {
      best_val = entry.val_spearman;
      best = params;
      result.best_epoch = epoch;
    }
  }
  if (cfg.keep_best) {
    params = std::move(best);
  } else {
    result.best_epoch = cfg.epochs;
  }
  return result;
}

std::vector<AblationRow> run_ablation(std::span<const TrainConfig> matrix, const DataConfig& data) {
  const DataSplits splits = make_splits(data);
  std::vector<AblationRow> rows;
  rows.reserve(matrix.size());
  for (const TrainConfig& cfg : matrix) {
    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult trained = train(cfg, splits.train, splits.val);
    AblationRow row;
    row.loss_kind = cfg.loss_kind;
    row.roi_kind = cfg.roi_kind;
    row.seed = cfg.rng_seed;
    row.report = eval_rank_quality(trained.params, cfg.roi_kind, splits.test);
    row.val_report = eval_rank_quality(trained.params, cfg.roi_kind, splits.val);
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(row);
  }
  return rows;
}

void write_ablation_csv(std::ostream& os, std::span<const AblationRow> rows) {
  os << "loss_kind,roi_kind,seed,val_spearman,spearman,top1_accuracy,mean_iou,wall_seconds\n";
  os << std::setprecision(6) << std::fixed;
  for (const auto& r : rows) {
    os << to_string(r.loss_kind) << ',' << to_string(r.roi_kind) << ',' << r.seed << ','
       << r.val_report.spearman << ',' << r.report.spearman << ',' << r.report.top1_accuracy << ','
       << r.report.mean_iou_vs_oracle_best << ',' << r.seconds << '\n';
  }
}

void write_training_log_csv(std::ostream& os, std::span<const EpochLog> log) {
  os << "epoch,step,loss,val_spearman\n";
  os << std::setprecision(9);
  for (const auto& e : log) {
    os << e.epoch << ',' << e.step << ',' << e.loss << ',' << e.val_spearman << '\n';
  }
}

}  // namespace viewrank::toy
