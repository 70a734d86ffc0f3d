#pragma once

#include "salseg/core/errors.hpp"
#include "salseg/nn/tensor.hpp"

namespace salseg {

// Soft Dice loss: per image, 1 - (2*sum(p*t) + eps) / (sum(p) + sum(t) + eps),
// averaged over the batch. The intersection uses the elementwise product so
// the loss is differentiable in the predictions; eps guards the empty/empty
// case. When d_pred is non-null it receives dLoss/dPred.
template <typename S>
double dice_loss(const Tensor<S>& pred, const Tensor<S>& truth, double eps,
                 Tensor<S>* d_pred = nullptr) {
  if (!pred.same_shape(truth)) throw ValidationError("dice_loss: shape mismatch");
  if (pred.n < 1) throw ValidationError("dice_loss: empty batch");
  if (eps < 0.0) throw ValidationError("dice_loss: eps must be >= 0");

  if (d_pred != nullptr) d_pred->ensure_shape(pred.n, pred.c, pred.h, pred.w);
  const std::size_t per_image = pred.size() / pred.n;
  double total = 0.0;
  for (int i = 0; i < pred.n; ++i) {
    const S* p = pred.v.data() + per_image * i;
    const S* t = truth.v.data() + per_image * i;
    double inter = 0.0, sum_p = 0.0, sum_t = 0.0;
    for (std::size_t j = 0; j < per_image; ++j) {
      inter += static_cast<double>(p[j]) * static_cast<double>(t[j]);
      sum_p += p[j];
      sum_t += t[j];
    }
    const double num = 2.0 * inter + eps;
    const double den = sum_p + sum_t + eps;
    if (den == 0.0) {
      throw ValidationError("dice_loss: empty prediction and truth with eps = 0");
    }
    total += 1.0 - num / den;
    if (d_pred != nullptr) {
      S* g = d_pred->v.data() + per_image * i;
      const double inv_den2 = 1.0 / (den * den);
      const double scale = 1.0 / pred.n;
      for (std::size_t j = 0; j < per_image; ++j) {
        g[j] = static_cast<S>(-(2.0 * t[j] * den - num) * inv_den2 * scale);
      }
    }
  }
  return total / pred.n;
}

}  // namespace salseg
