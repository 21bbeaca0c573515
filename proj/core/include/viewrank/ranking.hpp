#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace viewrank {

using ScoreList = std::vector<double>;
using ProbDist = std::vector<double>;

struct LossResult {
  double value = 0.0;
  std::vector<double> grad;  // dL/ds_j per input score
};

/// Top-1 probability of each item under the exp transform, i.e. a softmax
/// evaluated with a max shift so large scores do not overflow.
ProbDist top1_probability(std::span<const double> scores);

/// Top-1 probability computed the long way: the probability of every
/// permutation of the list, summed over the permutations that place item j
/// first. Factorial cost, limited to n <= 8.
ProbDist permutation_oracle(std::span<const double> scores);

inline constexpr std::size_t kPermutationOracleMaxItems = 8;

/// Shannon entropy in nats.
double entropy(std::span<const double> probs);

/// Cross entropy between the Top-1 distributions of the ground truth and
/// the predictions: -sum_j P_gt(j) log P_pred(j). Gradient is P_pred - P_gt.
LossResult listwise_ce_loss(std::span<const double> pred, std::span<const double> gt);

/// Margin ranking loss max(0, 1 + s_worse - s_better). grad = {d/ds_better, d/ds_worse}.
LossResult pairwise_hinge_loss(double s_better, double s_worse);

/// Ground-truth scores for a best-first list of n views: rank r (1 = best)
/// scores scale * (n - r).
ScoreList rank_order_score(std::size_t n, double scale = 1.0);

/// Converts arbitrary distinct scores to rank-order scores: the highest
/// score maps to scale * (n - 1), the lowest to 0. Ties keep input order.
ScoreList scores_to_rank_order(std::span<const double> scores, double scale = 1.0);

}  // namespace viewrank
