#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "salseg/core/errors.hpp"

namespace salseg {

// Metrics for one (model, image) pair. Accuracy and AUC-ROC exist only at
// fold scope, so per-image records carry the six per-image values; boundary
// distances are absent when either region was empty.
struct PerImageMetrics {
  std::string id;
  int fold = 0;
  std::string variant;
  double dsc = 0.0, ji = 0.0, tpr = 0.0, fpr = 0.0;
  std::optional<double> hd, md;
};

struct FoldMetrics {
  int fold = 0;
  std::string variant;
  int n_images = 0;
  double dsc = 0.0, ji = 0.0, tpr = 0.0, fpr = 0.0;
  double hd = 0.0, md = 0.0;
  int n_boundary_defined = 0;  // images contributing to hd/md means
  double acc = 0.0;
  double auc_roc = 0.0;
};

// Mean of the per-image metrics within one fold. Undefined boundary distances
// are excluded from the hd/md means with their count reported.
inline FoldMetrics aggregate_fold(const std::vector<PerImageMetrics>& records, double acc,
                                  double auc) {
  if (records.empty()) throw ValidationError("aggregate_fold: empty fold");
  FoldMetrics out;
  out.fold = records.front().fold;
  out.variant = records.front().variant;
  out.n_images = static_cast<int>(records.size());
  double hd_sum = 0.0, md_sum = 0.0;
  for (const auto& r : records) {
    out.dsc += r.dsc;
    out.ji += r.ji;
    out.tpr += r.tpr;
    out.fpr += r.fpr;
    if (r.hd && r.md) {
      hd_sum += *r.hd;
      md_sum += *r.md;
      ++out.n_boundary_defined;
    }
  }
  const double n = static_cast<double>(records.size());
  out.dsc /= n;
  out.ji /= n;
  out.tpr /= n;
  out.fpr /= n;
  if (out.n_boundary_defined > 0) {
    hd_sum /= out.n_boundary_defined;
    md_sum /= out.n_boundary_defined;
  }
  out.hd = hd_sum;
  out.md = md_sum;
  out.acc = acc;
  out.auc_roc = auc;
  return out;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n-1)
};

inline MeanStd mean_std(const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("mean_std: empty input");
  MeanStd out;
  for (const double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

// Cross-fold mean +/- sample standard deviation of fold means, one entry per
// metric, in report order.
struct CrossFoldSummary {
  std::string variant;
  MeanStd dsc, ji, tpr, fpr, acc, auc_roc, hd, md;
  int n_folds = 0;
};

inline CrossFoldSummary summarize_folds(const std::vector<FoldMetrics>& folds) {
  if (folds.empty()) throw ValidationError("summarize_folds: no folds");
  CrossFoldSummary out;
  out.variant = folds.front().variant;
  out.n_folds = static_cast<int>(folds.size());
  const auto collect = [&folds](auto member) {
    std::vector<double> v;
    v.reserve(folds.size());
    for (const auto& f : folds) v.push_back(f.*member);
    return mean_std(v);
  };
  out.dsc = collect(&FoldMetrics::dsc);
  out.ji = collect(&FoldMetrics::ji);
  out.tpr = collect(&FoldMetrics::tpr);
  out.fpr = collect(&FoldMetrics::fpr);
  out.acc = collect(&FoldMetrics::acc);
  out.auc_roc = collect(&FoldMetrics::auc_roc);
  out.hd = collect(&FoldMetrics::hd);
  out.md = collect(&FoldMetrics::md);
  return out;
}

}  // namespace salseg
