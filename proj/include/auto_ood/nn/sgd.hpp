#pragma once

#include <set>
#include <string>

#include "auto_ood/nn/backward.hpp"

namespace auto_ood::nn {

struct SgdConfig {
  double learning_rate = 0.001;
  double weight_decay = 0.0;
  double momentum = 0.0;
  std::set<std::string> trainable_groups;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
    if (weight_decay < 0.0 || momentum < 0.0)
      throw ArgumentError("weight decay and momentum must be nonnegative");
  }

  bool trains(const std::string& group) const { return trainable_groups.contains(group); }
};

/// SGD restricted to the configured parameter groups. Parameters outside the
/// groups are never written, so they stay bit-identical.
///
/// With momentum the velocity buffer is kept across steps; a fresh optimizer
/// makes its first step identical to plain SGD.
class SgdOptimizer {
public:
  explicit SgdOptimizer(SgdConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

  const SgdConfig& config() const noexcept { return cfg_; }

  void step(MlpModel& model, const Gradients& grads) {
    if (!grads.shape_matches(model)) throw ArgumentError("gradient shapes do not match the model");
    if (cfg_.momentum != 0.0 && velocity_.layers.empty()) velocity_ = Gradients::zeros_like(model);
    for (std::size_t k = 0; k < model.num_layers(); ++k) {
      auto& layer = model.layer(k);
      if (!cfg_.trains(layer.group)) continue;
      update(layer.weight, grads.layers[k].weight, k, true);
      update(layer.bias, grads.layers[k].bias, k, false);
    }
    ++steps_;
  }

  std::size_t steps() const noexcept { return steps_; }

private:
  void update(Tensor& param, const Tensor& grad, std::size_t layer, bool is_weight) {
    Tensor* vel = nullptr;
    if (cfg_.momentum != 0.0) {
      vel = is_weight ? &velocity_.layers[layer].weight : &velocity_.layers[layer].bias;
    }
    for (std::size_t i = 0; i < param.size(); ++i) {
      double g = grad[i];
      if (cfg_.weight_decay != 0.0) g += cfg_.weight_decay * param[i];
      if (vel) {
        (*vel)[i] = steps_ == 0 ? g : cfg_.momentum * (*vel)[i] + g;
        g = (*vel)[i];
      }
      param[i] -= cfg_.learning_rate * g;
    }
  }

  SgdConfig cfg_;
  Gradients velocity_;
  std::size_t steps_ = 0;
};

/// One stateless update: theta <- theta - lr * (g + wd * theta) on the
/// trainable groups.
inline void sgd_step(MlpModel& model, const Gradients& grads, const SgdConfig& cfg) {
  SgdOptimizer(cfg).step(model, grads);
}

}  // namespace auto_ood::nn
