#include "viewrank/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace viewrank {

namespace {

void require_finite(std::span<const double> s, const char* what) {
  for (double v : s) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite score");
  }
}

}  // namespace

ProbDist top1_probability(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("top1_probability: empty score list");
  require_finite(scores, "top1_probability");
  const double shift = *std::max_element(scores.begin(), scores.end());
  ProbDist p(scores.size());
  double total = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    p[j] = std::exp(scores[j] - shift);
    total += p[j];
  }
  for (double& v : p) v /= total;
  return p;
}

ProbDist permutation_oracle(std::span<const double> scores) {
  const std::size_t n = scores.size();
  if (n == 0) throw std::invalid_argument("permutation_oracle: empty score list");
  if (n > kPermutationOracleMaxItems) {
    throw std::invalid_argument("permutation_oracle: n = " + std::to_string(n) + " exceeds " +
                                std::to_string(kPermutationOracleMaxItems));
  }
  require_finite(scores, "permutation_oracle");

  // Shifting by the max leaves every permutation probability unchanged.
  const double shift = *std::max_element(scores.begin(), scores.end());
  std::vector<double> phi(n);
  for (std::size_t j = 0; j < n; ++j) phi[j] = std::exp(scores[j] - shift);

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  ProbDist top1(n, 0.0);
  do {
    // P(pi) = prod_j phi(pi(j)) / sum_{k >= j} phi(pi(k))
    double prob = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      double rest = 0.0;
      for (std::size_t k = j; k < n; ++k) rest += phi[perm[k]];
      prob *= phi[perm[j]] / rest;
    }
    top1[perm[0]] += prob;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return top1;
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

LossResult listwise_ce_loss(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) {
    throw std::invalid_argument("listwise_ce_loss: " + std::to_string(pred.size()) +
                                " predictions vs " + std::to_string(gt.size()) + " targets");
  }
  if (pred.size() < 2) throw std::invalid_argument("listwise_ce_loss: need at least 2 items");
  require_finite(pred, "listwise_ce_loss");
  const ProbDist p_gt = top1_probability(gt);

  // log P_pred(j) = s_j - logsumexp(s)
  const double shift = *std::max_element(pred.begin(), pred.end());
  double total = 0.0;
  for (double s : pred) total += std::exp(s - shift);
  const double log_z = shift + std::log(total);

  LossResult r;
  r.grad.resize(pred.size());
  for (std::size_t j = 0; j < pred.size(); ++j) {
    const double log_p = pred[j] - log_z;
    r.value -= p_gt[j] * log_p;
    r.grad[j] = std::exp(log_p) - p_gt[j];
  }
  return r;
}

LossResult pairwise_hinge_loss(double s_better, double s_worse) {
  if (!std::isfinite(s_better) || !std::isfinite(s_worse)) {
    throw std::invalid_argument("pairwise_hinge_loss: non-finite score");
  }
  const double margin = 1.0 + s_worse - s_better;
  if (margin > 0.0) return {margin, {-1.0, 1.0}};
  return {0.0, {0.0, 0.0}};
}

ScoreList rank_order_score(std::size_t n, double scale) {
  if (n == 0) throw std::invalid_argument("rank_order_score: n must be >= 1");
  ScoreList s(n);
  for (std::size_t r = 0; r < n; ++r) s[r] = scale * static_cast<double>(n - 1 - r);
  return s;
}

ScoreList scores_to_rank_order(std::span<const double> scores, double scale) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const ScoreList by_rank = rank_order_score(n, scale);
  ScoreList out(n);
  for (std::size_t r = 0; r < n; ++r) out[order[r]] = by_rank[r];
  return out;
}

}  // namespace viewrank
