#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "auto_ood/errors.hpp"
#include "auto_ood/random.hpp"
#include "auto_ood/tensor.hpp"

namespace auto_ood::nn {

/// Name of the group holding the output layer.
inline constexpr const char* kOutputGroup = "fc";

/// Fully connected layer: y = W x + b, W is [out, in].
struct DenseLayer {
  Tensor weight;
  Tensor bias;
  std::string group;

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }
};

/// Multilayer perceptron with rectifier hidden layers and a linear head.
///
/// Layer k (0-based) maps layer_dims[k] -> layer_dims[k+1]. Hidden layer k is
/// in group "block{k+1}" and the head is in group "fc", so the last hidden
/// layer ("blockL") is the natural partial-update target.
class MlpModel {
public:
  MlpModel() = default;

  /// All-zero parameters with the default group labels.
  explicit MlpModel(std::vector<std::size_t> layer_dims)
      : MlpModel(layer_dims, default_groups(layer_dims.size() < 2 ? 0 : layer_dims.size() - 1)) {}

  MlpModel(std::vector<std::size_t> layer_dims, std::vector<std::string> groups)
      : dims_(std::move(layer_dims)) {
    if (dims_.size() < 2)
      throw ArgumentError("an MLP needs at least an input and an output dimension");
    for (auto d : dims_)
      if (d == 0) throw ArgumentError("layer dimensions must be positive");
    if (groups.size() != dims_.size() - 1)
      throw ArgumentError("expected one group label per layer");
    layers_.reserve(dims_.size() - 1);
    for (std::size_t k = 0; k + 1 < dims_.size(); ++k) {
      if (groups[k].empty()) throw ArgumentError("empty group label");
      layers_.push_back(DenseLayer{Tensor::matrix(dims_[k + 1], dims_[k]),
                                   Tensor({dims_[k + 1]}), std::move(groups[k])});
    }
  }

  /// He-normal weights, zero biases.
  static MlpModel random(std::vector<std::size_t> layer_dims, std::uint64_t seed) {
    MlpModel model(std::move(layer_dims));
    Rng rng(seed);
    for (auto& layer : model.layers_) {
      const double scale = std::sqrt(2.0 / static_cast<double>(layer.in_dim()));
      for (double& w : layer.weight.values()) w = scale * standard_normal(rng);
    }
    return model;
  }

  static std::vector<std::string> default_groups(std::size_t num_layers) {
    std::vector<std::string> groups;
    for (std::size_t k = 0; k + 1 < num_layers; ++k) groups.push_back("block" + std::to_string(k + 1));
    if (num_layers > 0) groups.emplace_back(kOutputGroup);
    return groups;
  }

  const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
  std::size_t input_dim() const { return dims_.front(); }
  std::size_t num_classes() const { return dims_.back(); }
  std::size_t num_layers() const noexcept { return layers_.size(); }

  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  DenseLayer& layer(std::size_t k) { return layers_.at(k); }
  const DenseLayer& layer(std::size_t k) const { return layers_.at(k); }

  std::vector<std::string> group_labels() const {
    std::vector<std::string> out;
    for (const auto& l : layers_) out.push_back(l.group);
    return out;
  }

  /// Group name of the last hidden layer, or "fc" for a single-layer model.
  std::string last_block_group() const {
    return layers_.size() >= 2 ? layers_[layers_.size() - 2].group : layers_.back().group;
  }

  bool bitwise_equal(const MlpModel& other) const {
    if (dims_ != other.dims_ || layers_.size() != other.layers_.size()) return false;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      const auto& a = layers_[k];
      const auto& b = other.layers_[k];
      if (a.group != b.group || !a.weight.bitwise_equal(b.weight) || !a.bias.bitwise_equal(b.bias))
        return false;
    }
    return true;
  }

  bool all_finite() const {
    return std::all_of(layers_.begin(), layers_.end(), [](const DenseLayer& l) {
      return l.weight.all_finite() && l.bias.all_finite();
    });
  }

private:
  std::vector<std::size_t> dims_;
  std::vector<DenseLayer> layers_;
};

/// Activations cached by a forward pass. inputs[k] is the input of layer k
/// (inputs[0] = x); pre[k] is layer k's affine output. logits = pre.back().
struct ForwardPass {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> pre;

  const std::vector<double>& logits() const { return pre.back(); }
};

inline void check_input(const MlpModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw InputShapeError("input has dimension " + std::to_string(x.size()) + ", model expects " +
                          std::to_string(model.input_dim()));
  }
}

inline ForwardPass forward(const MlpModel& model, std::span<const double> x) {
  check_input(model, x);
  ForwardPass pass;
  const std::size_t n = model.num_layers();
  pass.inputs.reserve(n);
  pass.pre.reserve(n);
  pass.inputs.emplace_back(x.begin(), x.end());
  for (std::size_t k = 0; k < n; ++k) {
    const auto& layer = model.layer(k);
    const auto& in = pass.inputs.back();
    std::vector<double> out(layer.out_dim());
    for (std::size_t r = 0; r < out.size(); ++r) {
      double acc = layer.bias[r];
      for (std::size_t c = 0; c < in.size(); ++c) acc += layer.weight(r, c) * in[c];
      out[r] = acc;
    }
    if (k + 1 < n) {
      std::vector<double> act(out.size());
      std::transform(out.begin(), out.end(), act.begin(), [](double v) { return v > 0.0 ? v : 0.0; });
      pass.inputs.push_back(std::move(act));
    }
    pass.pre.push_back(std::move(out));
  }
  return pass;
}

inline std::vector<double> forward_logits(const MlpModel& model, std::span<const double> x) {
  return std::move(forward(model, x).pre.back());
}

/// Deep copy used as the frozen reference model. MlpModel is a value type,
/// so the copy shares nothing with the original.
inline MlpModel clone_frozen(const MlpModel& model) { return model; }

}  // namespace auto_ood::nn
