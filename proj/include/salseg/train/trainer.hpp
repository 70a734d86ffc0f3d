#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "salseg/core/errors.hpp"
#include "salseg/core/rng.hpp"
#include "salseg/dataset/folds.hpp"
#include "salseg/dataset/sample.hpp"
#include "salseg/model/unet.hpp"
#include "salseg/nn/tensor.hpp"
#include "salseg/train/adam.hpp"
#include "salseg/train/dice.hpp"
#include "salseg/train/early_stopping.hpp"

namespace salseg {

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 4;
  int patience = 20;
  int max_epochs = 500;
  double loss_smoothing = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("train config: learning_rate must be > 0");
    if (batch_size < 1) throw ValidationError("train config: batch_size must be >= 1");
    if (patience < 1) throw ValidationError("train config: patience must be >= 1");
    if (max_epochs < 1) throw ValidationError("train config: max_epochs must be >= 1");
    if (loss_smoothing < 0.0) throw ValidationError("train config: loss_smoothing must be >= 0");
  }
};

struct EpochStats {
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainRecord {
  int fold = 0;
  std::string variant;
  int epochs_run = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::vector<EpochStats> history;
  double wall_time_s = 0.0;  // reported at the manifest level, not serialized with the record
};

struct TrainHooks {
  // Replaces validation-loss measurement entirely when set (test hook).
  std::function<double(int epoch)> val_loss_override;
  std::function<void(int epoch, const EpochStats&)> on_epoch;
};

namespace detail {

template <typename S>
void fill_batch(const std::vector<Sample>& samples, const std::vector<int>& order,
                std::size_t begin, std::size_t end, Tensor<S>& images, Tensor<S>& truths,
                Tensor<S>& saliencies) {
  const int n = static_cast<int>(end - begin);
  const int h = samples[order[begin]].rows();
  const int w = samples[order[begin]].cols();
  images.ensure_shape(n, 1, h, w);
  truths.ensure_shape(n, 1, h, w);
  saliencies.ensure_shape(n, 1, h, w);
  for (int i = 0; i < n; ++i) {
    const Sample& s = samples[order[begin + i]];
    if (s.rows() != h || s.cols() != w) {
      throw ValidationError("batch: sample '" + s.id + "' shape differs within dataset");
    }
    S* ip = images.plane(i, 0);
    S* tp = truths.plane(i, 0);
    S* sp = saliencies.plane(i, 0);
    const std::size_t count = static_cast<std::size_t>(h) * w;
    for (std::size_t j = 0; j < count; ++j) {
      ip[j] = static_cast<S>(s.image.data()[j]);
      tp[j] = static_cast<S>(s.mask.data()[j]);
      sp[j] = static_cast<S>(s.saliency.data()[j]);
    }
  }
}

}  // namespace detail

// Mean per-image Dice loss of a model over a sample list, batched forward only.
template <typename S>
double evaluate_loss(UNet<S>& net, const std::vector<Sample>& samples,
                     const std::vector<int>& indices, int batch_size, double eps) {
  if (indices.empty()) throw ValidationError("evaluate_loss: empty index list");
  Tensor<S> images, truths, saliencies;
  const bool wants_saliency = net.spec().variant == Variant::kUNetSA;
  double total = 0.0;
  for (std::size_t begin = 0; begin < indices.size(); begin += batch_size) {
    const std::size_t end = std::min(indices.size(), begin + batch_size);
    detail::fill_batch(samples, indices, begin, end, images, truths, saliencies);
    const Tensor<S>& pred = net.forward(images, wants_saliency ? &saliencies : nullptr);
    total += dice_loss(pred, truths, eps) * static_cast<double>(end - begin);
  }
  return total / static_cast<double>(indices.size());
}

template <typename S>
struct FoldOutcome {
  UNet<S> net;
  TrainRecord record;
};

// Trains one model on a train/validation split: Adam on the soft Dice loss,
// deterministic per-epoch shuffling, patience-based early stopping, and
// restoration of the best-validation weights at the end.
template <typename S>
FoldOutcome<S> train_one_fold(const ModelSpec& spec, const TrainConfig& cfg,
                              const std::vector<Sample>& samples,
                              const std::vector<int>& train_idx, const std::vector<int>& val_idx,
                              const TrainHooks& hooks = {}) {
  cfg.validate();
  if (train_idx.empty()) throw ValidationError("train_one_fold: empty training split");
  if (val_idx.empty() && !hooks.val_loss_override) {
    throw ValidationError("train_one_fold: empty validation split");
  }

  FoldOutcome<S> out{UNet<S>(spec), TrainRecord{}};
  UNet<S>& net = out.net;
  out.record.variant = variant_name(spec.variant);
  const bool wants_saliency = spec.variant == Variant::kUNetSA;

  Adam<S> optimizer(net.parameters(), cfg.learning_rate);
  EarlyStopper stopper(cfg.patience);

  std::vector<std::vector<S>> best_weights;
  const auto snapshot = [&net, &best_weights]() {
    best_weights.clear();
    for (const auto* p : net.parameters()) best_weights.push_back(p->value.v);
  };
  const auto restore = [&net, &best_weights]() {
    if (best_weights.empty()) return;
    auto params = net.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value.v = best_weights[i];
  };

  Tensor<S> images, truths, saliencies, d_pred;
  std::vector<int> order(train_idx);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0x5417));
    order = train_idx;
    rng.shuffle(order);

    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      detail::fill_batch(samples, order, begin, end, images, truths, saliencies);
      const Tensor<S>& pred = net.forward(images, wants_saliency ? &saliencies : nullptr);
      const double loss = dice_loss(pred, truths, cfg.loss_smoothing, &d_pred);
      if (!std::isfinite(loss)) {
        throw RuntimeAbort("non-finite training loss at epoch " + std::to_string(epoch + 1));
      }
      epoch_loss += loss * static_cast<double>(end - begin);
      net.zero_param_grads();
      net.backward(d_pred);
      optimizer.step();
    }
    epoch_loss /= static_cast<double>(order.size());

    double val_loss;
    if (hooks.val_loss_override) {
      val_loss = hooks.val_loss_override(epoch);
    } else {
      val_loss = evaluate_loss(net, samples, val_idx, cfg.batch_size, cfg.loss_smoothing);
    }
    if (!std::isfinite(val_loss)) {
      throw RuntimeAbort("non-finite validation loss at epoch " + std::to_string(epoch + 1));
    }

    out.record.history.push_back({epoch_loss, val_loss});
    if (hooks.on_epoch) hooks.on_epoch(epoch, out.record.history.back());

    const bool stop = stopper.observe(val_loss);
    if (stopper.improved_last()) snapshot();
    if (stop) break;
  }

  restore();
  out.record.epochs_run = static_cast<int>(out.record.history.size());
  out.record.best_val_loss = stopper.best();
  return out;
}

// Index split for one cross-validation fold: the fold's ids form the test
// set; the remainder is shuffled (deterministically from the plan seed and
// fold number) and the first ceil(val_fraction * n) entries become the
// validation holdout.
struct FoldSplit {
  std::vector<int> train, val, test;
};

inline FoldSplit make_fold_split(const FoldPlan& plan, int fold,
                                 const std::vector<Sample>& samples) {
  if (fold < 0 || fold >= plan.fold_count()) throw ValidationError("fold index out of range");

  std::map<std::string, int> index_by_id;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!index_by_id.emplace(samples[i].id, static_cast<int>(i)).second) {
      throw ValidationError("duplicate sample id '" + samples[i].id + "'");
    }
  }
  const auto plan_ids = plan.all_ids();
  if (plan_ids.size() != samples.size()) {
    throw ValidationError("fold plan covers " + std::to_string(plan_ids.size()) +
                          " ids but dataset has " + std::to_string(samples.size()));
  }
  for (const auto& id : plan_ids) {
    if (!index_by_id.count(id)) throw ValidationError("fold plan id '" + id + "' not in dataset");
  }

  FoldSplit split;
  std::map<std::string, bool> in_test;
  for (const auto& id : plan.folds[fold]) {
    in_test[id] = true;
    split.test.push_back(index_by_id.at(id));
  }
  std::vector<int> rest;
  for (const auto& [id, idx] : index_by_id) {
    if (!in_test.count(id)) rest.push_back(idx);
  }
  Rng rng(mix_seed(plan.seed, static_cast<std::uint64_t>(fold), 0x7a11));
  rng.shuffle(rest);
  const auto val_n = static_cast<std::size_t>(
      std::ceil(plan.val_fraction * static_cast<double>(rest.size())));
  split.val.assign(rest.begin(), rest.begin() + val_n);
  split.train.assign(rest.begin() + val_n, rest.end());
  return split;
}

// Runs the full cross-validation protocol: one independently seeded training
// per fold, no test sample ever entering its fold's train or validation set.
// The callback receives each trained fold so the caller can persist it.
template <typename S>
std::vector<TrainRecord> run_cross_validation(
    const ModelSpec& spec, const TrainConfig& cfg, const FoldPlan& plan,
    const std::vector<Sample>& samples,
    const std::function<void(int fold, UNet<S>& net, const TrainRecord&)>& on_fold = {},
    const std::function<bool(int fold)>& skip_fold = {}) {
  cfg.validate();
  spec.validate();
  std::vector<TrainRecord> records;
  for (int fold = 0; fold < plan.fold_count(); ++fold) {
    if (skip_fold && skip_fold(fold)) continue;
    const FoldSplit split = make_fold_split(plan, fold, samples);
    ModelSpec fold_spec = spec;
    fold_spec.init_seed = mix_seed(spec.init_seed, static_cast<std::uint64_t>(fold), 0x1417);
    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(fold), 0x5EED);
    auto outcome = train_one_fold<S>(fold_spec, fold_cfg, samples, split.train, split.val);
    outcome.record.fold = fold;
    if (on_fold) on_fold(fold, outcome.net, outcome.record);
    records.push_back(std::move(outcome.record));
  }
  return records;
}

}  // namespace salseg
