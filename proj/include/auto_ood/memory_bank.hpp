#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "auto_ood/data/dataset.hpp"
#include "auto_ood/nn/backward.hpp"
#include "auto_ood/random.hpp"

namespace auto_ood {

enum class MemoryMode { Random, Prototype };
enum class IdLossReduction { Sum, Mean };

inline MemoryMode parse_memory_mode(std::string_view s) {
  if (s == "random") return MemoryMode::Random;
  if (s == "prototype") return MemoryMode::Prototype;
  throw ArgumentError("unknown memory mode '" + std::string(s) + "' (expected random or prototype)");
}

inline std::string_view to_string(MemoryMode m) { return m == MemoryMode::Random ? "random" : "prototype"; }

inline IdLossReduction parse_id_loss_reduction(std::string_view s) {
  if (s == "sum") return IdLossReduction::Sum;
  if (s == "mean") return IdLossReduction::Mean;
  throw ArgumentError("unknown id loss reduction '" + std::string(s) + "' (expected sum or mean)");
}

inline std::string_view to_string(IdLossReduction r) { return r == IdLossReduction::Sum ? "sum" : "mean"; }

/// One stored ID feature vector per class; entry c always carries label c.
class MemoryBank {
public:
  /// Uniformly random training sample of every class.
  static MemoryBank init_random(const data::Dataset& train, std::size_t num_classes, std::uint64_t seed) {
    const auto by_class = group_by_class(train, num_classes);
    Rng rng(seed);
    MemoryBank bank;
    bank.dim_ = train.dim;
    for (const auto& members : by_class) {
      const auto pick = members[static_cast<std::size_t>(uniform_index(rng, members.size()))];
      bank.entries_.push_back(train.samples[pick].x);
    }
    return bank;
  }

  /// Per-class mean of the training features. The bank is immutable.
  static MemoryBank init_prototype(const data::Dataset& train, std::size_t num_classes) {
    const auto by_class = group_by_class(train, num_classes);
    MemoryBank bank;
    bank.dim_ = train.dim;
    bank.immutable_ = true;
    for (const auto& members : by_class) {
      std::vector<double> mean(train.dim, 0.0);
      for (auto i : members)
        for (std::size_t j = 0; j < train.dim; ++j) mean[j] += train.samples[i].x[j];
      for (double& v : mean) v /= static_cast<double>(members.size());
      bank.entries_.push_back(std::move(mean));
    }
    return bank;
  }

  std::size_t num_classes() const noexcept { return entries_.size(); }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  bool immutable() const noexcept { return immutable_; }
  const std::vector<double>& feature(std::size_t cls) const { return entries_.at(cls); }
  const std::vector<std::vector<double>>& features() const noexcept { return entries_; }

  /// Overwrites the entry of class y_hat. Returns whether anything was
  /// written (false for prototype banks).
  bool replace(std::span<const double> x_hat, std::size_t y_hat) {
    if (y_hat >= entries_.size())
      throw ArgumentError("memory bank class " + std::to_string(y_hat) + " out of range for " +
                          std::to_string(entries_.size()) + " classes");
    if (x_hat.size() != dim_) throw InputShapeError("memory bank feature has the wrong dimension");
    if (immutable_) return false;
    entries_[y_hat].assign(x_hat.begin(), x_hat.end());
    return true;
  }

  /// Label cross-entropy terms for every entry, scaled by weight (and by
  /// 1/C under mean reduction).
  void append_loss_terms(nn::LossSpec& spec, IdLossReduction reduction, double weight = 1.0) const {
    const double w = reduction == IdLossReduction::Mean ? weight / static_cast<double>(entries_.size()) : weight;
    for (std::size_t c = 0; c < entries_.size(); ++c) spec.add(nn::LabelTerm{entries_[c], c, w});
  }

  friend bool operator==(const MemoryBank&, const MemoryBank&) = default;

private:
  static std::vector<std::vector<std::size_t>> group_by_class(const data::Dataset& train, std::size_t num_classes) {
    std::vector<std::vector<std::size_t>> by_class(num_classes);
    for (std::size_t i = 0; i < train.samples.size(); ++i) {
      const int label = train.samples[i].label;
      if (label >= 0 && static_cast<std::size_t>(label) < num_classes)
        by_class[static_cast<std::size_t>(label)].push_back(i);
    }
    for (std::size_t c = 0; c < num_classes; ++c)
      if (by_class[c].empty()) throw CoverageError(c);
    return by_class;
  }

  std::vector<std::vector<double>> entries_;
  std::size_t dim_ = 0;
  bool immutable_ = false;
};

/// Classification loss of the model on the bank: sum (or mean) over entries
/// of loss_ce_label(h(x_c), c).
inline double id_loss(const nn::MlpModel& model, const MemoryBank& bank,
                      IdLossReduction reduction = IdLossReduction::Sum) {
  double total = 0.0;
  for (std::size_t c = 0; c < bank.size(); ++c)
    total += nn::loss_ce_label(nn::forward_logits(model, bank.feature(c)), c);
  return reduction == IdLossReduction::Mean ? total / static_cast<double>(bank.size()) : total;
}

}  // namespace auto_ood
