#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "viewrank/ranking.hpp"
#include "viewrank/toy/model.hpp"
#include "viewrank/toy/synth.hpp"

namespace viewrank::toy {

enum class LossKind { Listwise, PairwiseAll, PairwiseThreshold, PairwiseAdjacent };

std::string_view to_string(LossKind kind);
std::optional<LossKind> parse_loss_kind(std::string_view name);

struct TrainConfig {
  std::size_t epochs = 10;
  double learning_rate = 0.03;
  /// The learning rate is multiplied by lr_decay for epochs after this one.
  std::size_t lr_decay_epoch = 4;
  double lr_decay = 0.1;
  double momentum = 0.9;
  std::size_t batch_lists = 8;
  std::uint64_t rng_seed = 0;
  LossKind loss_kind = LossKind::Listwise;
  /// Minimum ground-truth score gap for LossKind::PairwiseThreshold.
  double pair_threshold = 0.5;
  SamplerKind roi_kind = SamplerKind::Refine;
  /// Scale applied to rank-order targets of the listwise loss.
  double rank_temperature = 0.25;
  /// Return the epoch checkpoint with the best validation Spearman rather
  /// than the last one.
  bool keep_best = true;
  ModelConfig model;

  void validate() const;
};

/// Seeds for the three disjoint synthetic splits derive from `seed`.
struct DataConfig {
  std::uint64_t seed = 2019;
  std::size_t n_train = 160;
  std::size_t n_val = 48;
  std::size_t n_test = 96;
  std::size_t n_views = 24;
  SynthConfig synth;
};

struct DataSplits {
  std::vector<SynthSample> train;
  std::vector<SynthSample> val;
  std::vector<SynthSample> test;
};

DataSplits make_splits(const DataConfig& cfg);

struct EpochLog {
  std::size_t epoch = 0;
  std::size_t step = 0;  // optimizer steps taken so far
  double loss = 0.0;     // mean per-list training loss over the epoch
  double val_spearman = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;  // 0 when no epoch ran
};

/// Per-list training loss for the configured loss kind. Listwise compares the
/// Top-1 distributions of the prediction and of the rank-order targets;
/// pairwise kinds average the hinge loss over the selected pairs.
LossResult list_loss(const TrainConfig& cfg, std::span<const double> pred,
                     std::span<const double> gt_scores);

/// Preferred/worse index pairs the pairwise kinds train on.
std::vector<std::pair<std::size_t, std::size_t>> select_pairs(LossKind kind,
                                                              std::span<const double> gt_scores,
                                                              double threshold);

/// SGD with momentum (v = m v + g; w -= lr v) over batches of view lists.
/// Deterministic for a given config and data.
TrainResult train(const TrainConfig& cfg, std::span<const SynthSample> train_data,
                  std::span<const SynthSample> val_data);

struct EvalReport {
  double spearman = 0.0;
  double top1_accuracy = 0.0;
  double mean_iou_vs_oracle_best = 0.0;
};

/// Spearman rank correlation with average ranks for ties; 0 when either side
/// is constant.
double spearman(std::span<const double> a, std::span<const double> b);

EvalReport evaluate_predictions(std::span<const ViewList> lists, std::span<const ScoreList> predictions);

EvalReport eval_rank_quality(const ModelParams& params, SamplerKind kind,
                             std::span<const SynthSample> data);

std::vector<ScoreList> predict_all(const ModelParams& params, SamplerKind kind,
                                   std::span<const SynthSample> data);

struct AblationRow {
  LossKind loss_kind = LossKind::Listwise;
  SamplerKind roi_kind = SamplerKind::Refine;
  std::uint64_t seed = 0;
  EvalReport report;      // test split
  EvalReport val_report;  // validation split
  double seconds = 0.0;
};

/// Trains and evaluates every config on the same data splits.
std::vector<AblationRow> run_ablation(std::span<const TrainConfig> matrix, const DataConfig& data);

void write_ablation_csv(std::ostream& os, std::span<const AblationRow> rows);
void write_training_log_csv(std::ostream& os, std::span<const EpochLog> log);

}  // namespace viewrank::toy
