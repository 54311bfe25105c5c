#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "auto_ood/data/stream.hpp"
#include "auto_ood/events.hpp"
#include "auto_ood/filter.hpp"
#include "auto_ood/memory_bank.hpp"
#include "auto_ood/nn/sgd.hpp"
#include "auto_ood/scoring.hpp"
#include "auto_ood/text.hpp"

namespace auto_ood {

/// Alias accepted in trainable group lists for the last hidden layer.
inline constexpr std::string_view kLastBlockAlias = "blockL";

/// Optional schedule beta(k) for the consistency weight, k = number of
/// completed update episodes. beta(0) = 1 and beta is non-increasing.
///   none            beta = 1
///   inv:<h>         beta = h / (h + k)
///   exp:<g>         beta = g^k, 0 < g <= 1
struct Lambda2Decay {
  enum class Kind { None, Inverse, Exponential };
  Kind kind = Kind::None;
  double rate = 1.0;

  double beta(std::size_t k) const {
    switch (kind) {
      case Kind::None: return 1.0;
      case Kind::Inverse: return rate / (rate + static_cast<double>(k));
      case Kind::Exponential: return std::pow(rate, static_cast<double>(k));
    }
    return 1.0;
  }

  static Lambda2Decay parse(std::string_view s) {
    if (s == "none" || s.empty()) return {};
    const auto colon = s.find(':');
    if (colon != std::string_view::npos) {
      const auto kind = s.substr(0, colon);
      const auto v = text::parse_double(s.substr(colon + 1));
      if (v && kind == "inv" && *v > 0.0) return {Kind::Inverse, *v};
      if (v && kind == "exp" && *v > 0.0 && *v <= 1.0) return {Kind::Exponential, *v};
    }
    throw ArgumentError("invalid lambda2 decay '" + std::string(s) + "' (expected none, inv:<h> or exp:<g>)");
  }

  std::string to_string() const {
    switch (kind) {
      case Kind::None: return "none";
      case Kind::Inverse: return "inv:" + text::format_double(rate);
      case Kind::Exponential: return "exp:" + text::format_double(rate);
    }
    return "none";
  }

  friend bool operator==(const Lambda2Decay&, const Lambda2Decay&) = default;
};

struct FilterConfig {
  double k1 = 0.0;
  double k2 = 3.0;
  std::size_t stats_subsample_n = 0;  // 0 = whole training set
  bool margin_literal_m0 = false;
  friend bool operator==(const FilterConfig&, const FilterConfig&) = default;
};

struct MemoryConfig {
  MemoryMode mode = MemoryMode::Random;
  IdLossReduction reduction = IdLossReduction::Sum;
  std::uint64_t seed = 3;
  friend bool operator==(const MemoryConfig&, const MemoryConfig&) = default;
};

struct AutoConfig {
  double lambda1 = 1.0;
  double lambda2 = 0.1;
  double phi = 0.2;
  std::size_t iters_T = 2;
  ScoreKind score = ScoreKind::msp();
  double learning_rate = 0.001;
  double weight_decay = 0.0;
  double momentum = 0.0;
  std::set<std::string> trainable_groups{std::string(kLastBlockAlias)};
  Lambda2Decay lambda2_decay;
  /// Include the memory-bank classification loss in each episode. Only
  /// switched off by the objective ablation.
  bool use_id_loss = true;
  FilterConfig filter;
  MemoryConfig memory;
  /// Evaluate the objective after every inner step (diagnostics).
  bool record_descent = false;

  void validate() const {
    if (lambda1 < 0.0 || lambda2 < 0.0) throw ArgumentError("lambda1 and lambda2 must be nonnegative");
    if (!(learning_rate > 0.0)) throw ArgumentError("learning rate must be positive");
    if (filter.k1 < 0.0 || filter.k2 < 0.0) throw ArgumentError("k1 and k2 must be nonnegative");
  }

  friend bool operator==(const AutoConfig&, const AutoConfig&) = default;
};

/// Consistency weight after `update_counter` completed episodes.
inline double lambda2_at(const AutoConfig& cfg, std::size_t update_counter) {
  return cfg.lambda2 * cfg.lambda2_decay.beta(update_counter);
}

/// Resolves the "blockL" alias and checks every group exists in the model.
inline std::set<std::string> resolve_groups(const std::set<std::string>& groups, const nn::MlpModel& model) {
  const auto labels = model.group_labels();
  std::set<std::string> out;
  for (const auto& g : groups) {
    const std::string name = g == kLastBlockAlias ? model.last_block_group() : g;
    if (std::find(labels.begin(), labels.end(), name) == labels.end())
      throw ArgumentError("model has no parameter group '" + g + "'");
    out.insert(name);
  }
  return out;
}

/// Scores of the labeled training samples under the given model.
inline std::vector<double> id_scores(const nn::MlpModel& model, const ScoreKind& kind, const data::Dataset& ds) {
  std::vector<double> out;
  for (const auto& s : ds.samples)
    if (!s.is_ood()) out.push_back(score(kind, nn::forward_logits(model, s.x)));
  return out;
}

/// ID statistics under the configured score, optionally on a seeded
/// subsample of the training set.
inline IdStats initial_id_stats(const nn::MlpModel& model, const AutoConfig& cfg, const data::Dataset& train) {
  data::Dataset used = train;
  if (cfg.filter.stats_subsample_n > 0 && cfg.filter.stats_subsample_n < train.size()) {
    Rng rng(data::derive_seed(cfg.memory.seed, 7));
    shuffle(used.samples, rng);
    used.samples.resize(cfg.filter.stats_subsample_n);
  }
  return estimate_id_stats(id_scores(model, cfg.score, used));
}

struct DescentRecord {
  std::size_t t = 0;          // stream index of the triggering sample
  std::size_t iteration = 0;  // inner iteration within the episode
  double loss_before = 0.0;
  double loss_after = 0.0;
};

struct AutoState {
  nn::MlpModel model_t;
  nn::MlpModel model_0;
  Margins margins;
  MemoryBank bank;
  std::size_t step_counter = 0;
  std::size_t update_counter = 0;
};

/// The online test-time loop. Each arrival is scored with the live model,
/// filtered, and either stored in the memory bank (pseudo-ID), used for
/// iters_T SGD steps on the combined objective (pseudo-OOD), or ignored.
class AutoEngine {
public:
  AutoEngine(AutoConfig cfg, nn::MlpModel pretrained, Margins margins, MemoryBank bank)
      : cfg_(std::move(cfg)),
        state_{pretrained, nn::clone_frozen(pretrained), margins, std::move(bank), 0, 0},
        optimizer_(make_sgd(cfg_, state_.model_t)) {
    cfg_.validate();
    if (state_.bank.num_classes() != state_.model_t.num_classes())
      throw ArgumentError("memory bank class count does not match the model");
    if (state_.bank.dim() != state_.model_t.input_dim())
      throw InputShapeError("memory bank feature dimension does not match the model");
  }

  /// Margins from the training-set score statistics and a bank built from
  /// the training set, both as configured.
  static AutoEngine create(AutoConfig cfg, nn::MlpModel pretrained, const data::Dataset& train) {
    cfg.validate();
    const auto stats = initial_id_stats(pretrained, cfg, train);
    auto margins = init_margins(stats, cfg.filter.k1, cfg.filter.k2, cfg.filter.margin_literal_m0);
    const std::size_t classes = pretrained.num_classes();
    auto bank = cfg.memory.mode == MemoryMode::Prototype ? MemoryBank::init_prototype(train, classes)
                                                         : MemoryBank::init_random(train, classes, cfg.memory.seed);
    return AutoEngine(std::move(cfg), std::move(pretrained), margins, std::move(bank));
  }

  const AutoConfig& config() const noexcept { return cfg_; }
  const AutoState& state() const noexcept { return state_; }
  const std::vector<DescentRecord>& descent_records() const noexcept { return descent_; }

  /// Processes one arrival. `truth` is copied into the event and nothing else.
  StreamEvent step(std::span<const double> x, const data::HiddenTruth& truth = {}) {
    const auto logits = nn::forward_logits(state_.model_t, x);
    StreamEvent ev;
    ev.t = state_.step_counter;
    ev.score = score(cfg_.score, logits);
    ev.prediction = predict(logits);
    ev.decision = classify(state_.margins, ev.score);
    ev.is_ood_truth = truth.is_ood;
    ev.label_truth = truth.label;
    ev.source = truth.source;

    switch (ev.decision) {
      case FilterDecision::PseudoId:
        ev.bank_replaced = state_.bank.replace(x, ev.prediction);
        break;
      case FilterDecision::PseudoOod:
        ev.optimizer_steps = optimize_on_outlier(x, ev.t);
        state_.margins = update_outlier_margin(state_.margins, ev.score);
        break;
      case FilterDecision::Abstain:
        break;
    }
    ev.m_out_after = state_.margins.m_out;
    ++state_.step_counter;
    return ev;
  }

  EventLog run_stream(const data::Stream& stream) {
    EventLog log;
    for (const auto& item : stream.items) log.append(step(item.x, item.truth));
    return log;
  }

private:
  static nn::SgdOptimizer make_sgd(const AutoConfig& cfg, const nn::MlpModel& model) {
    nn::SgdConfig sgd;
    sgd.learning_rate = cfg.learning_rate;
    sgd.weight_decay = cfg.weight_decay;
    sgd.momentum = cfg.momentum;
    sgd.trainable_groups = resolve_groups(cfg.trainable_groups, model);
    return nn::SgdOptimizer(std::move(sgd));
  }

  nn::LossSpec episode_objective(std::span<const double> x, std::size_t pred_0, double lambda2) const {
    nn::LossSpec spec;
    if (cfg_.use_id_loss) state_.bank.append_loss_terms(spec, cfg_.memory.reduction);
    const std::vector<double> xv(x.begin(), x.end());
    spec.add(nn::UniformTerm{xv, cfg_.lambda1});
    spec.add(nn::ConsistencyTerm{xv, pred_0, cfg_.phi, lambda2});
    return spec;
  }

  std::size_t optimize_on_outlier(std::span<const double> x, std::size_t t) {
    if (cfg_.iters_T == 0) return 0;
    const std::size_t pred_0 = predict(nn::forward_logits(state_.model_0, x));
    const auto spec = episode_objective(x, pred_0, lambda2_at(cfg_, state_.update_counter));
    for (std::size_t it = 0; it < cfg_.iters_T; ++it) {
      auto [loss, grads] = nn::backward(state_.model_t, spec);
      if (!std::isfinite(loss))
        throw NonFiniteLossError("non-finite test-time loss at stream index " + std::to_string(t) +
                                 ", inner iteration " + std::to_string(it));
      optimizer_.step(state_.model_t, grads);
      if (!state_.model_t.all_finite())
        throw NonFiniteLossError("non-finite parameters after update at stream index " + std::to_string(t));
      if (cfg_.record_descent) descent_.push_back({t, it, loss, nn::evaluate_loss(state_.model_t, spec)});
    }
    ++state_.update_counter;
    return cfg_.iters_T;
  }

  AutoConfig cfg_;
  AutoState state_;
  nn::SgdOptimizer optimizer_;
  std::vector<DescentRecord> descent_;
};

/// Post-hoc baseline: scores every arrival with a fixed model and classifies
/// it against fixed margins. No state changes.
inline EventLog score_frozen(const nn::MlpModel& model, const ScoreKind& kind, const Margins& margins,
                             const data::Stream& stream) {
  EventLog log;
  for (const auto& item : stream.items) {
    const auto logits = nn::forward_logits(model, item.x);
    StreamEvent ev;
    ev.score = score(kind, logits);
    ev.prediction = predict(logits);
    ev.decision = classify(margins, ev.score);
    ev.is_ood_truth = item.truth.is_ood;
    ev.label_truth = item.truth.label;
    ev.source = item.truth.source;
    ev.m_out_after = margins.m_out;
    log.append(std::move(ev));
  }
  return log;
}

}  // namespace auto_ood
