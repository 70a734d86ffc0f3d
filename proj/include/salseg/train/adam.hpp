#pragma once

#include <cmath>
#include <vector>

#include "salseg/nn/graph.hpp"

namespace salseg {

// Adaptive moment estimation with the canonical defaults (beta1 0.9,
// beta2 0.999, eps 1e-8) and bias correction.
template <typename S>
class Adam {
 public:
  Adam(std::vector<typename Net<S>::Param*> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.resize(params_.size());
    v_.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
      m_[i].assign(params_[i]->value.size(), 0.0);
      v_[i].assign(params_[i]->value.size(), 0.0);
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& value = params_[i]->value.v;
      const auto& grad = params_[i]->grad.v;
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t j = 0; j < value.size(); ++j) {
        const double g = static_cast<double>(grad[j]);
        m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
        v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
        const double m_hat = m[j] / bc1;
        const double v_hat = v[j] / bc2;
        value[j] = static_cast<S>(value[j] - lr_ * m_hat / (std::sqrt(v_hat) + eps_));
      }
    }
  }

 private:
  std::vector<typename Net<S>::Param*> params_;
  double lr_, beta1_, beta2_, eps_;
  long long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace salseg
