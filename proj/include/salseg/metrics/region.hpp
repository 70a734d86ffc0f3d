#pragma once

#include <vector>

#include "salseg/core/array2d.hpp"
#include "salseg/core/errors.hpp"

namespace salseg {

// Per-image region-overlap metrics. FPR is normalized by the number of
// ground-truth positives, not negatives: tumor regions are small relative to
// the image, so positives-normalization is the informative choice here.
struct RegionMetrics {
  double dsc = 0.0;
  double ji = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
};

inline RegionMetrics region_metrics(const MaskU8& pred, const MaskU8& truth) {
  if (!pred.same_shape(truth)) throw ValidationError("region_metrics: shape mismatch");
  long long n_truth = 0, n_pred = 0, n_inter = 0;
  const std::size_t total = truth.size();
  for (std::size_t i = 0; i < total; ++i) {
    const bool t = truth.data()[i] != 0;
    const bool p = pred.data()[i] != 0;
    n_truth += t;
    n_pred += p;
    n_inter += t && p;
  }
  if (n_truth == 0) throw ValidationError("region_metrics: empty ground-truth mask");

  RegionMetrics m;
  if (n_pred == 0) return m;  // all four metrics are zero for an empty prediction
  m.dsc = 2.0 * static_cast<double>(n_inter) / static_cast<double>(n_truth + n_pred);
  m.ji = static_cast<double>(n_inter) / static_cast<double>(n_truth + n_pred - n_inter);
  m.tpr = static_cast<double>(n_inter) / static_cast<double>(n_truth);
  m.fpr = static_cast<double>(n_pred - n_inter) / static_cast<double>(n_truth);
  return m;
}

// Pooled pixel accuracy over a fold: correct pixels (true positives plus true
// negatives) over all pixels of all images.
inline double global_accuracy(const std::vector<MaskU8>& preds, const std::vector<MaskU8>& truths) {
  if (preds.size() != truths.size() || preds.empty()) {
    throw ValidationError("global_accuracy: batch size mismatch or empty fold");
  }
  long long correct = 0, total = 0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    if (!preds[k].same_shape(truths[k])) throw ValidationError("global_accuracy: shape mismatch");
    const std::size_t n = truths[k].size();
    for (std::size_t i = 0; i < n; ++i) {
      const bool t = truths[k].data()[i] != 0;
      const bool p = preds[k].data()[i] != 0;
      correct += t == p;
    }
    total += static_cast<long long>(n);
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

// Binarizes a probability map at the given threshold.
inline MaskU8 threshold_mask(const ImageF& probs, double threshold = 0.5) {
  MaskU8 out(probs.rows(), probs.cols());
  for (int r = 0; r < probs.rows(); ++r) {
    for (int c = 0; c < probs.cols(); ++c) out(r, c) = probs(r, c) >= threshold ? 1 : 0;
  }
  return out;
}

}  // namespace salseg
