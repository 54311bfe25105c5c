#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <string_view>

#include "auto_ood/errors.hpp"
#include "auto_ood/nn/losses.hpp"

namespace auto_ood {

/// Confidence score family. Every kind is oriented so that a higher score
/// means "more in-distribution".
struct ScoreKind {
  enum class Kind { Msp, Energy, MaxLogit };

  Kind kind = Kind::Msp;
  double temperature = 1.0;  // Energy only

  static ScoreKind msp() { return {Kind::Msp, 1.0}; }
  static ScoreKind max_logit() { return {Kind::MaxLogit, 1.0}; }
  static ScoreKind energy(double temperature = 1.0) {
    if (!(temperature > 0.0)) throw ArgumentError("energy temperature must be positive");
    return {Kind::Energy, temperature};
  }

  /// "msp" | "energy" | "maxlogit"
  static ScoreKind parse(std::string_view name) {
    if (name == "msp") return msp();
    if (name == "energy") return energy();
    if (name == "maxlogit") return max_logit();
    throw ArgumentError("unknown score '" + std::string(name) + "' (expected msp, energy or maxlogit)");
  }

  std::string name() const {
    switch (kind) {
      case Kind::Msp: return "msp";
      case Kind::Energy: return "energy";
      case Kind::MaxLogit: return "maxlogit";
    }
    return "msp";
  }

  friend bool operator==(const ScoreKind&, const ScoreKind&) = default;
};

/// MSP: max softmax probability. Energy: T * logsumexp(z / T), i.e. the
/// negated free energy. MaxLogit: max z.
inline double score(const ScoreKind& kind, std::span<const double> logits) {
  switch (kind.kind) {
    case ScoreKind::Kind::Msp: {
      // max_c softmax_c = exp(max z - logsumexp z)
      const double m = *std::max_element(logits.begin(), logits.end());
      return std::exp(m - nn::logsumexp(logits));
    }
    case ScoreKind::Kind::Energy: {
      std::vector<double> scaled(logits.begin(), logits.end());
      for (double& v : scaled) v /= kind.temperature;
      return kind.temperature * nn::logsumexp(scaled);
    }
    case ScoreKind::Kind::MaxLogit:
      return *std::max_element(logits.begin(), logits.end());
  }
  return 0.0;
}

/// Argmax prediction, ties to the lowest class index.
inline std::size_t predict(std::span<const double> logits) { return nn::argmax(logits); }

}  // namespace auto_ood
