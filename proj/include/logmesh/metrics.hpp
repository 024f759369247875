#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "logmesh/error.hpp"

namespace logmesh {

/// Parallel scores and binary labels (true = anomalous).
struct ScoredSet {
  std::vector<double> scores;
  std::vector<bool> labels;
};

/// ROC AUC as the Mann–Whitney statistic with average ranks for ties.
/// `labels[i]` is true for anomalies (the positive class).
inline double roc_auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::ShapeMismatch, "scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        pos_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorCode::OneClassOnly, "ROC AUC needs both classes");
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

/// Average precision, Σ (R_n − R_{n−1}) P_n over a descending-score ranking.
/// Within tied scores positives are ranked after negatives.
inline double average_precision(const std::vector<double>& scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::ShapeMismatch, "scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return !labels[a] && labels[b];
  });
  const auto n_pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
  if (n_pos == 0) throw Error(ErrorCode::NoPositives, "average precision needs at least one positive");

  double ap = 0.0;
  std::size_t tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!labels[order[k]]) continue;
    ++tp;
    ap += static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  return ap / static_cast<double>(n_pos);
}

inline double roc_auc(const ScoredSet& s) { return roc_auc(s.scores, s.labels); }
inline double average_precision(const ScoredSet& s) { return average_precision(s.scores, s.labels); }

}  // namespace logmesh
