#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "salseg/core/errors.hpp"
#include "salseg/dataset/sample.hpp"
#include "salseg/saliency/contours.hpp"

namespace salseg {

// Thresholding level plus the empirical rule parameters of the confidence
// decision.
struct ConfidenceParams {
  double threshold = 0.3;
  double a1 = 2.0;
  double a2 = 3.0;
  double a3 = 0.2;
  double a4 = 0.55;

  void validate() const {
    if (!(threshold > 0.0 && threshold < 1.0)) {
      throw ValidationError("confidence params: threshold must be in (0,1)");
    }
    if (!(a1 > 1.0)) throw ValidationError("confidence params: a1 must be > 1");
    if (!(a2 > a1)) throw ValidationError("confidence params: a2 must be > a1");
    if (!(a3 > 0.0 && a3 < 1.0)) throw ValidationError("confidence params: a3 must be in (0,1)");
    if (!(a4 > 0.0 && a4 < 1.0)) throw ValidationError("confidence params: a4 must be in (0,1)");
  }
};

struct ContourSummary {
  long long area = 0;
  double cum_intensity = 0.0;
  double mean_intensity = 0.0;
};

// Outcome of the three-rule confidence decision for one saliency map.
struct ConfidenceReport {
  std::string id;
  std::vector<ContourSummary> contours;  // sorted by descending I_c
  bool rejected = false;
  std::optional<int> fired_rule;         // 1, 2 or 3 when rejected

  double i_max = 0.0;
  double i_second = 0.0;
  double m_of_imax = 0.0;
  double m_max = 0.0;
};

namespace detail {

// Composite orderings so that argmax selection is deterministic and invariant
// under permutation of the contour list. Ties in mean intensity resolve
// toward the contour with the larger cumulative intensity, so a map whose
// intensity champion also tops the mean ranking is never flagged by rule 3 on
// account of an exact tie.
inline bool better_by_intensity(const SaliencyContour& a, const SaliencyContour& b) {
  if (a.cum_intensity != b.cum_intensity) return a.cum_intensity > b.cum_intensity;
  if (a.mean_intensity != b.mean_intensity) return a.mean_intensity > b.mean_intensity;
  return a.anchor() < b.anchor();
}

inline bool better_by_mean(const SaliencyContour& a, const SaliencyContour& b) {
  if (a.mean_intensity != b.mean_intensity) return a.mean_intensity > b.mean_intensity;
  if (a.cum_intensity != b.cum_intensity) return a.cum_intensity > b.cum_intensity;
  return a.anchor() < b.anchor();
}

}  // namespace detail

// Evaluates the three rejection rules on extracted contours. The first rule
// whose predicate holds decides the outcome. With fewer than two contours all
// rules are vacuously false.
inline ConfidenceReport confidence_decision(const std::vector<SaliencyContour>& contours,
                                            const ConfidenceParams& p) {
  p.validate();
  ConfidenceReport report;
  report.contours.reserve(contours.size());

  std::vector<const SaliencyContour*> by_intensity;
  by_intensity.reserve(contours.size());
  for (const auto& c : contours) by_intensity.push_back(&c);
  std::sort(by_intensity.begin(), by_intensity.end(),
            [](const SaliencyContour* a, const SaliencyContour* b) {
              return detail::better_by_intensity(*a, *b);
            });
  for (const auto* c : by_intensity) {
    report.contours.push_back({c->area, c->cum_intensity, c->mean_intensity});
  }

  if (contours.size() < 2) {
    if (!contours.empty()) {
      report.i_max = by_intensity[0]->cum_intensity;
      report.m_of_imax = by_intensity[0]->mean_intensity;
      report.m_max = by_intensity[0]->mean_intensity;
    }
    return report;
  }

  const SaliencyContour* top_i = by_intensity[0];
  const SaliencyContour* top_m = top_i;
  for (const auto& c : contours) {
    if (detail::better_by_mean(c, *top_m)) top_m = &c;
  }

  report.i_max = top_i->cum_intensity;
  report.i_second = by_intensity[1]->cum_intensity;
  report.m_of_imax = top_i->mean_intensity;
  report.m_max = top_m->mean_intensity;

  const bool distinct_argmax = top_m != top_i;
  if (report.i_max < p.a1 * report.i_second && report.m_of_imax < report.m_max) {
    report.rejected = true;
    report.fired_rule = 1;
  } else if (report.i_max < p.a2 * report.i_second && report.m_of_imax + p.a3 < report.m_max) {
    report.rejected = true;
    report.fired_rule = 2;
  } else if (report.m_max > p.a4 && distinct_argmax) {
    report.rejected = true;
    report.fired_rule = 3;
  }
  return report;
}

inline ConfidenceReport assess_saliency(const std::string& id, const ImageF& saliency,
                                        const ConfidenceParams& p) {
  ConfidenceReport report = confidence_decision(extract_contours(saliency, p.threshold), p);
  report.id = id;
  return report;
}

// Splits a dataset into kept samples and per-map reports. The decision reads
// only the saliency channel.
inline std::pair<std::vector<Sample>, std::vector<ConfidenceReport>> filter_dataset(
    const std::vector<Sample>& samples, const ConfidenceParams& p) {
  std::vector<Sample> kept;
  std::vector<ConfidenceReport> reports;
  reports.reserve(samples.size());
  for (const auto& s : samples) {
    reports.push_back(assess_saliency(s.id, s.saliency, p));
    if (!reports.back().rejected) kept.push_back(s);
  }
  return {std::move(kept), std::move(reports)};
}

// Saliency map reduced to its highest-cumulative-intensity contour.
struct ReducedSaliency {
  ImageF map;
  bool had_contour = false;  // false flags the degenerate all-below-threshold case
};

// Keeps the contour with the largest cumulative intensity unchanged and
// zeroes everything else, including sub-threshold background.
inline ReducedSaliency reduce_to_top_contour(const ImageF& saliency, const ConfidenceParams& p) {
  const auto contours = extract_contours(saliency, p.threshold);
  ReducedSaliency out;
  out.map = ImageF(saliency.rows(), saliency.cols(), 0.0f);
  if (contours.empty()) return out;
  out.had_contour = true;
  for (const auto& [r, c] : contours.front().pixels) out.map(r, c) = saliency(r, c);
  return out;
}

}  // namespace salseg
