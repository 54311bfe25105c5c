#pragma once

#include <cmath>
#include <span>
#include <variant>
#include <vector>

#include "auto_ood/nn/losses.hpp"
#include "auto_ood/nn/mlp.hpp"

namespace auto_ood::nn {

struct LayerGradient {
  Tensor weight;
  Tensor bias;
};

/// One gradient tensor per model parameter tensor, shape-matched.
struct Gradients {
  std::vector<LayerGradient> layers;

  static Gradients zeros_like(const MlpModel& model) {
    Gradients g;
    for (const auto& l : model.layers())
      g.layers.push_back({Tensor(l.weight.shape()), Tensor(l.bias.shape())});
    return g;
  }

  bool shape_matches(const MlpModel& model) const {
    if (layers.size() != model.num_layers()) return false;
    for (std::size_t k = 0; k < layers.size(); ++k) {
      if (!layers[k].weight.same_shape(model.layer(k).weight) ||
          !layers[k].bias.same_shape(model.layer(k).bias))
        return false;
    }
    return true;
  }
};

// Terms of a differentiable scalar objective. Each term owns its input.

/// weight * loss_ce_label(h(x), label)
struct LabelTerm {
  std::vector<double> x;
  std::size_t label = 0;
  double weight = 1.0;
};

/// weight * loss_ce_uniform(h(x))
struct UniformTerm {
  std::vector<double> x;
  double weight = 1.0;
};

/// weight * loss_sc(softmax(h(x)), argmax h(x), pred_0, phi)
struct ConsistencyTerm {
  std::vector<double> x;
  std::size_t pred_0 = 0;
  double phi = 0.2;
  double weight = 1.0;
};

using LossTerm = std::variant<LabelTerm, UniformTerm, ConsistencyTerm>;

/// A weighted sum of loss terms.
struct LossSpec {
  std::vector<LossTerm> terms;

  LossSpec& add(LossTerm term) {
    terms.push_back(std::move(term));
    return *this;
  }
};

namespace detail {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline const std::vector<double>& term_input(const LossTerm& term) {
  return std::visit([](const auto& t) -> const std::vector<double>& { return t.x; }, term);
}

inline double term_weight(const LossTerm& term) {
  return std::visit([](const auto& t) { return t.weight; }, term);
}

inline double term_value(const LossTerm& term, std::span<const double> logits) {
  return std::visit(overloaded{
                        [&](const LabelTerm& t) { return loss_ce_label(logits, t.label); },
                        [&](const UniformTerm&) { return loss_ce_uniform(logits); },
                        [&](const ConsistencyTerm& t) {
                          const auto p = softmax(logits);
                          return loss_sc(p, argmax(logits), t.pred_0, t.phi);
                        },
                    },
                    term);
}

inline std::vector<double> term_logit_grad(const LossTerm& term, std::span<const double> logits) {
  return std::visit(overloaded{
                        [&](const LabelTerm& t) { return grad_ce_label(logits, t.label); },
                        [&](const UniformTerm&) { return grad_ce_uniform(logits); },
                        [&](const ConsistencyTerm& t) { return grad_sc(logits, t.pred_0); },
                    },
                    term);
}

}  // namespace detail

/// Backpropagates dL/dlogits through a cached forward pass, accumulating
/// into grads.
inline void accumulate_gradients(const MlpModel& model, const ForwardPass& pass,
                                 std::vector<double> delta, Gradients& grads) {
  for (std::size_t k = model.num_layers(); k-- > 0;) {
    const auto& layer = model.layer(k);
    const auto& in = pass.inputs[k];
    auto& g = grads.layers[k];
    for (std::size_t r = 0; r < delta.size(); ++r) {
      if (delta[r] == 0.0) continue;
      g.bias[r] += delta[r];
      for (std::size_t c = 0; c < in.size(); ++c) g.weight(r, c) += delta[r] * in[c];
    }
    if (k == 0) break;
    std::vector<double> prev(layer.in_dim(), 0.0);
    const auto& pre_prev = pass.pre[k - 1];
    for (std::size_t c = 0; c < prev.size(); ++c) {
      if (pre_prev[c] <= 0.0) continue;  // rectifier derivative, 0 at the kink
      double acc = 0.0;
      for (std::size_t r = 0; r < delta.size(); ++r) acc += layer.weight(r, c) * delta[r];
      prev[c] = acc;
    }
    delta = std::move(prev);
  }
}

inline double evaluate_loss(const MlpModel& model, const LossSpec& spec) {
  double total = 0.0;
  for (const auto& term : spec.terms) {
    const auto w = detail::term_weight(term);
    if (w == 0.0) continue;
    const auto logits = forward_logits(model, detail::term_input(term));
    total += w * detail::term_value(term, logits);
  }
  return total;
}

struct LossAndGradients {
  double loss = 0.0;
  Gradients grads;
};

/// Exact analytic gradient of the weighted loss sum w.r.t. every parameter.
inline LossAndGradients backward(const MlpModel& model, const LossSpec& spec) {
  LossAndGradients out{0.0, Gradients::zeros_like(model)};
  for (const auto& term : spec.terms) {
    const auto w = detail::term_weight(term);
    if (w == 0.0) continue;
    const auto pass = forward(model, detail::term_input(term));
    out.loss += w * detail::term_value(term, pass.logits());
    auto delta = detail::term_logit_grad(term, pass.logits());
    for (double& d : delta) d *= w;
    accumulate_gradients(model, pass, std::move(delta), out.grads);
  }
  return out;
}

}  // namespace auto_ood::nn
