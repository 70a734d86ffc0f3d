#pragma once

// Hand-evaluated confidence-rule decision table shared by the unit and
// acceptance suites. Each case lists contour (cumulative, mean) statistics
// and the expected outcome under the default parameters
// (a1 = 2, a2 = 3, a3 = 0.2, a4 = 0.55). Every expectation below was derived
// by evaluating the three rule predicates by hand:
//   rule 1: I_max < a1 * I_2nd  and  M(I_max) < M_max
//   rule 2: I_max < a2 * I_2nd  and  M(I_max) + a3 < M_max
//   rule 3: M_max > a4          and  argmax-by-M != argmax-by-I
// evaluated in order, first hit wins.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "salseg/saliency/confidence.hpp"
#include "salseg/saliency/contours.hpp"

namespace salseg_tests {

struct DecisionCase {
  std::string name;
  std::vector<std::pair<double, double>> contours;  // (cum_intensity, mean_intensity)
  bool rejected = false;
  std::optional<int> rule;
};

// The decision reads cumulative and mean intensity (plus the anchor pixel for
// deterministic tie-breaks); area is backfilled to keep the contour
// self-consistent.
inline std::vector<salseg::SaliencyContour> contours_from_stats(
    const std::vector<std::pair<double, double>>& stats) {
  std::vector<salseg::SaliencyContour> out;
  int row = 0;
  for (const auto& [cum, mean] : stats) {
    salseg::SaliencyContour c;
    c.cum_intensity = cum;
    c.mean_intensity = mean;
    c.area = std::max(1LL, static_cast<long long>(cum / mean));
    c.pixels = {{row++, 0}};
    out.push_back(std::move(c));
  }
  return out;
}

inline const std::vector<DecisionCase>& decision_table() {
  static const std::vector<DecisionCase> cases = {
      // Each rule firing, including the ordered attribution when several hold.
      {"rule1_all_rules_hold", {{100, 0.5}, {60, 0.8}}, true, 1},
      {"rule1_alone", {{100, 0.4}, {60, 0.5}}, true, 1},
      {"rule1_wins_over_2_and_3", {{100, 0.4}, {60, 0.9}}, true, 1},
      {"rule2_alone", {{250, 0.3}, {100, 0.54}}, true, 2},
      {"rule2_wins_over_3", {{250, 0.4}, {100, 0.75}}, true, 2},
      {"rule3_alone", {{100, 0.4}, {20, 0.9}}, true, 3},
      {"rule3_strong_dominant_intensity", {{400, 0.5}, {100, 0.8}}, true, 3},
      // Boundary non-firing at exact equality, one per comparison.
      {"rule1_eq_intensity_ratio", {{120, 0.5}, {60, 0.55}}, false, std::nullopt},
      {"rule1_eq_mean", {{100, 0.6}, {60, 0.6}}, false, std::nullopt},
      {"rule2_eq_intensity_ratio", {{300, 0.3}, {100, 0.54}}, false, std::nullopt},
      {"rule2_eq_mean_plus_margin", {{250, 0.3}, {100, 0.5}}, false, std::nullopt},
      {"rule3_eq_mean_threshold", {{300, 0.5}, {60, 0.55}}, false, std::nullopt},
      // Vacuous and degenerate configurations.
      {"single_contour", {{50, 0.7}}, false, std::nullopt},
      {"empty_map", {}, false, std::nullopt},
      {"tied_intensity_and_mean", {{50, 0.5}, {50, 0.5}}, false, std::nullopt},
      // Second-largest (not last) cumulative intensity feeds rules 1-2.
      {"three_contours_second_largest", {{100, 0.5}, {60, 0.6}, {10, 0.9}}, true, 1},
      // Dominant-contour keeps.
      {"dominant_with_higher_mean", {{300, 0.8}, {60, 0.5}}, false, std::nullopt},
  };
  return cases;
}

}  // namespace salseg_tests
