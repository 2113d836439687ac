#pragma once

#include <cmath>
#include <vector>

#include "nn.hpp"

namespace robust_grasp {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adaptive-moment gradient descent over a fixed set of parameter blocks.
template <class S>
class Adam {
 public:
  Adam(std::vector<nn::ParamBlock<S>> params, AdamOptions opts = {}) : params_(std::move(params)), opts_(opts) {
    for (const auto& p : params_) {
      m_.push_back(nn::Matrix<S>::Zero(p.value->rows(), p.value->cols()));
      v_.push_back(nn::Matrix<S>::Zero(p.value->rows(), p.value->cols()));
    }
  }

  void zero_grad() { nn::zero_grad(params_); }

  void step() {
    ++t_;
    const S b1 = S(opts_.beta1), b2 = S(opts_.beta2);
    const S c1 = S(1) - S(std::pow(opts_.beta1, t_));
    const S c2 = S(1) - S(std::pow(opts_.beta2, t_));
    const S lr = S(opts_.learning_rate), eps = S(opts_.epsilon);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& g = *params_[i].grad;
      m_[i] = b1 * m_[i] + (S(1) - b1) * g;
      v_[i] = b2 * v_[i] + (S(1) - b2) * g.cwiseProduct(g);
      params_[i].value->array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps);
    }
  }

  long steps() const { return t_; }

 private:
  std::vector<nn::ParamBlock<S>> params_;
  AdamOptions opts_;
  std::vector<nn::Matrix<S>> m_, v_;
  long t_ = 0;
};

}  // namespace robust_grasp
