#pragma once

#include <cmath>
#include <span>
#include <string_view>

#include "auto_ood/errors.hpp"

namespace auto_ood {

/// Mean and population standard deviation of ID scores.
struct IdStats {
  double mu_in = 0.0;
  double sigma_in = 0.0;
  std::size_t n_samples = 0;
};

/// In-out-aware filter state. m_in is frozen after initialization; m_out is
/// the running mean of the initial margin and every accepted pseudo-OOD score.
struct Margins {
  double m_in = 0.0;
  double m_out = 0.0;
  std::size_t m_count = 1;  // observations folded into m_out
  double k1 = 0.0;
  double k2 = 3.0;
};

enum class FilterDecision { PseudoId, PseudoOod, Abstain };

inline std::string_view to_string(FilterDecision d) {
  switch (d) {
    case FilterDecision::PseudoId: return "pseudo_id";
    case FilterDecision::PseudoOod: return "pseudo_ood";
    case FilterDecision::Abstain: return "abstain";
  }
  return "abstain";
}

inline IdStats estimate_id_stats(std::span<const double> scores) {
  if (scores.empty()) throw ArgumentError("cannot estimate ID statistics from an empty score list");
  const double n = static_cast<double>(scores.size());
  double sum = 0.0;
  for (double s : scores) sum += s;
  const double mu = sum / n;
  double ss = 0.0;
  for (double s : scores) ss += (s - mu) * (s - mu);
  return {mu, std::sqrt(ss / n), scores.size()};
}

/// m_in = mu + k1 sigma, m_out = mu - k2 sigma.
///
/// The initial m_out counts as one observation of the running mean
/// (m_count = 1). literal_m0 starts the count at 0 instead, so the first
/// pseudo-OOD score replaces the initial margin outright.
inline Margins init_margins(const IdStats& stats, double k1, double k2, bool literal_m0 = false) {
  if (k1 < 0.0 || k2 < 0.0) throw ArgumentError("k1 and k2 must be nonnegative");
  return {stats.mu_in + k1 * stats.sigma_in, stats.mu_in - k2 * stats.sigma_in,
          literal_m0 ? std::size_t{0} : std::size_t{1}, k1, k2};
}

/// Strict inequalities: a score exactly on a margin abstains.
inline FilterDecision classify(const Margins& m, double score) {
  if (score > m.m_in) return FilterDecision::PseudoId;
  if (score < m.m_out) return FilterDecision::PseudoOod;
  return FilterDecision::Abstain;
}

/// Greedy running-mean update of the outlier margin; m_in is untouched.
inline Margins update_outlier_margin(Margins m, double score) {
  if (score < m.m_out) {
    const double count = static_cast<double>(m.m_count);
    m.m_out = (count * m.m_out + score) / (count + 1.0);
    ++m.m_count;
  }
  return m;
}

}  // namespace auto_ood
