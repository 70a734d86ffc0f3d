#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "salseg/core/errors.hpp"
#include "salseg/core/rng.hpp"

namespace salseg {

// Deterministic assignment of sample ids to cross-validation test folds.
// Fold membership is a pure function of (sorted ids, seed).
struct FoldPlan {
  std::uint64_t seed = 0;
  double val_fraction = 0.2;
  std::vector<std::vector<std::string>> folds;

  int fold_count() const { return static_cast<int>(folds.size()); }

  std::vector<std::string> all_ids() const {
    std::vector<std::string> ids;
    for (const auto& f : folds) ids.insert(ids.end(), f.begin(), f.end());
    std::sort(ids.begin(), ids.end());
    return ids;
  }
};

// Shuffles the sorted id list and deals it into `k` folds whose sizes differ
// by at most one. Ids inside each fold are stored sorted.
inline FoldPlan make_fold_plan(std::vector<std::string> ids, std::uint64_t seed, int k = 5) {
  if (k < 2) throw ValidationError("make_fold_plan: need at least 2 folds");
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  if (static_cast<int>(ids.size()) < k) {
    throw ValidationError("make_fold_plan: need at least " + std::to_string(k) + " ids, got " +
                          std::to_string(ids.size()));
  }

  Rng rng(mix_seed(seed, 0xf01d5));
  rng.shuffle(ids);

  FoldPlan plan;
  plan.seed = seed;
  plan.folds.resize(k);
  const std::size_t n = ids.size();
  const std::size_t base = n / k;
  const std::size_t extra = n % k;
  std::size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    const std::size_t len = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    plan.folds[f].assign(ids.begin() + pos, ids.begin() + pos + len);
    std::sort(plan.folds[f].begin(), plan.folds[f].end());
    pos += len;
  }
  return plan;
}

inline nlohmann::ordered_json fold_plan_to_json(const FoldPlan& plan) {
  nlohmann::ordered_json j;
  j["seed"] = plan.seed;
  j["val_fraction"] = plan.val_fraction;
  j["folds"] = plan.folds;
  return j;
}

inline FoldPlan fold_plan_from_json(const nlohmann::json& j) {
  FoldPlan plan;
  plan.seed = j.at("seed").get<std::uint64_t>();
  plan.val_fraction = j.at("val_fraction").get<double>();
  plan.folds = j.at("folds").get<std::vector<std::vector<std::string>>>();
  if (plan.folds.size() < 2) throw ValidationError("fold plan: fewer than 2 folds");
  std::set<std::string> seen;
  for (const auto& f : plan.folds) {
    for (const auto& id : f) {
      if (!seen.insert(id).second) throw ValidationError("fold plan: duplicate id '" + id + "'");
    }
  }
  return plan;
}

inline void save_fold_plan(const std::filesystem::path& path, const FoldPlan& plan) {
  std::ofstream out(path);
  if (!out) throw RuntimeAbort("cannot write fold plan: " + path.string());
  out << fold_plan_to_json(plan).dump(2) << "\n";
}

inline FoldPlan load_fold_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read fold plan: " + path.string());
  nlohmann::json j;
  in >> j;
  return fold_plan_from_json(j);
}

}  // namespace salseg
