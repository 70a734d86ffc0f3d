#pragma once

#include <algorithm>
#include <vector>

#include "salseg/core/array2d.hpp"
#include "salseg/core/errors.hpp"

namespace salseg {

// AUC-ROC over scored binary labels via the rank-sum (Mann-Whitney U)
// formulation; tied scores contribute 0.5 through average ranks.
inline double auc_roc_scores(std::vector<std::pair<float, std::uint8_t>>& scored) {
  long long n_pos = 0;
  for (const auto& [score, label] : scored) n_pos += label != 0;
  const long long n_neg = static_cast<long long>(scored.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw ValidationError("auc_roc: fold contains a single class after pooling");
  }

  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < scored.size()) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].first == scored[i].first) ++j;
    // Average rank of the tie group [i, j), 1-based ranks.
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) {
      if (scored[k].second) rank_sum_pos += avg_rank;
    }
    i = j;
  }

  const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// Pools every pixel of the fold's probability maps against the ground truth.
inline double auc_roc(const std::vector<ImageF>& prob_maps, const std::vector<MaskU8>& truths) {
  if (prob_maps.size() != truths.size() || prob_maps.empty()) {
    throw ValidationError("auc_roc: batch size mismatch or empty fold");
  }
  std::vector<std::pair<float, std::uint8_t>> scored;
  std::size_t total = 0;
  for (const auto& m : prob_maps) total += m.size();
  scored.reserve(total);
  for (std::size_t k = 0; k < prob_maps.size(); ++k) {
    if (prob_maps[k].rows() != truths[k].rows() || prob_maps[k].cols() != truths[k].cols()) {
      throw ValidationError("auc_roc: shape mismatch");
    }
    for (std::size_t i = 0; i < prob_maps[k].size(); ++i) {
      scored.emplace_back(prob_maps[k].data()[i], truths[k].data()[i]);
    }
  }
  return auc_roc_scores(scored);
}

}  // namespace salseg
