#pragma once

#include <cstdint>
#include <numeric>

#include "auto_ood/data/dataset.hpp"
#include "auto_ood/nn/sgd.hpp"

namespace auto_ood::nn {

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::uint64_t seed = 1;
};

struct TrainResult {
  MlpModel model;
  double train_accuracy = 0.0;
  std::size_t epochs = 0;
};

/// Fraction of labeled samples whose argmax prediction equals the label.
/// OOD-labeled samples are skipped.
inline double accuracy(const MlpModel& model, const data::Dataset& ds) {
  std::size_t n = 0, hit = 0;
  for (const auto& s : ds.samples) {
    if (s.is_ood()) continue;
    ++n;
    if (argmax(forward_logits(model, s.x)) == static_cast<std::size_t>(s.label)) ++hit;
  }
  return n == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(n);
}

/// Minibatch SGD on the mean label cross-entropy over all parameter groups,
/// with a seeded shuffle every epoch.
inline TrainResult train_offline(MlpModel model, const data::Dataset& ds, const TrainConfig& cfg) {
  if (ds.empty()) throw ArgumentError("training set is empty");
  if (cfg.batch_size == 0) throw ArgumentError("batch size must be positive");
  const std::size_t classes = model.num_classes();
  for (const auto& s : ds.samples) {
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= classes)
      throw ArgumentError("training label " + std::to_string(s.label) + " outside [0, " +
                          std::to_string(classes) + ")");
    check_input(model, s.x);
  }

  SgdConfig sgd;
  sgd.learning_rate = cfg.learning_rate;
  sgd.momentum = cfg.momentum;
  sgd.weight_decay = cfg.weight_decay;
  for (const auto& g : model.group_labels()) sgd.trainable_groups.insert(g);
  SgdOptimizer opt(sgd);

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double w = 1.0 / static_cast<double>(end - start);
      LossSpec spec;
      for (std::size_t i = start; i < end; ++i) {
        const auto& s = ds.samples[order[i]];
        spec.add(LabelTerm{s.x, static_cast<std::size_t>(s.label), w});
      }
      opt.step(model, backward(model, spec).grads);
    }
  }
  const double acc = accuracy(model, ds);
  return {std::move(model), acc, cfg.epochs};
}

}  // namespace auto_ood::nn
