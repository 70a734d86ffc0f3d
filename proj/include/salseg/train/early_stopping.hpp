#pragma once

#include <limits>
#include <vector>

#include "salseg/core/errors.hpp"

namespace salseg {

// Patience-based stop rule: halt once the validation loss has gone `patience`
// consecutive epochs without a strict improvement over the best seen value.
// Ties count as non-improvement.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {
    if (patience < 1) throw ValidationError("early stopping: patience must be >= 1");
  }

  // Returns true when training should stop after the observed epoch.
  bool observe(double val_loss) {
    ++epoch_;
    if (val_loss < best_) {
      best_ = val_loss;
      best_epoch_ = epoch_;
      since_best_ = 0;
    } else {
      ++since_best_;
    }
    return since_best_ >= patience_;
  }

  double best() const { return best_; }
  int best_epoch() const { return best_epoch_; }       // 0-based
  bool improved_last() const { return since_best_ == 0; }

 private:
  int patience_;
  int epoch_ = -1;
  int best_epoch_ = -1;
  int since_best_ = 0;
  double best_ = std::numeric_limits<double>::infinity();
};

// Epochs a run would execute for a given validation-loss trace:
// index of the last strict improvement plus patience plus one, capped by
// max_epochs (and by the trace length if the trace ends first).
inline int simulate_early_stop(const std::vector<double>& val_losses, int patience,
                               int max_epochs) {
  EarlyStopper stopper(patience);
  int epochs = 0;
  for (const double loss : val_losses) {
    if (epochs >= max_epochs) break;
    ++epochs;
    if (stopper.observe(loss)) break;
  }
  return epochs;
}

}  // namespace salseg
