#pragma once

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "auto_ood/errors.hpp"
#include "auto_ood/events.hpp"
#include "auto_ood/text.hpp"

namespace auto_ood::metrics {

struct SplitScores {
  std::vector<double> id;
  std::vector<double> ood;
};

inline SplitScores split_scores(const EventLog& log) {
  SplitScores s;
  for (const auto& e : log.events) (e.is_ood_truth ? s.ood : s.id).push_back(e.score);
  if (s.id.empty() || s.ood.empty())
    throw ArgumentError("detection metrics need at least one ID and one OOD event");
  return s;
}

/// FPR at the threshold tau attaining the requested ID true-positive rate.
/// A score >= tau counts as ID; tau is the largest threshold whose TPR is
/// at least the target.
inline double fpr_at_tpr(std::vector<double> id, std::vector<double> ood, double tpr_target = 0.95) {
  if (id.empty() || ood.empty()) throw ArgumentError("detection metrics need at least one ID and one OOD score");
  if (!(tpr_target > 0.0 && tpr_target <= 1.0)) throw ArgumentError("TPR target must lie in (0, 1]");
  std::sort(id.begin(), id.end(), std::greater<>());
  std::sort(ood.begin(), ood.end());
  const double n_id = static_cast<double>(id.size());
  // Smallest k with k / n_id >= target; tau is the k-th largest ID score.
  std::size_t k = 1;
  while (static_cast<double>(k) / n_id < tpr_target) ++k;
  const double tau = id[k - 1];
  const auto above = ood.end() - std::lower_bound(ood.begin(), ood.end(), tau);
  return static_cast<double>(above) / static_cast<double>(ood.size());
}

inline double fpr_at_tpr(const EventLog& log, double tpr_target = 0.95) {
  auto s = split_scores(log);
  return fpr_at_tpr(std::move(s.id), std::move(s.ood), tpr_target);
}

/// Mann-Whitney form of the ROC area with midranks for ties.
inline double auroc(const std::vector<double>& id, const std::vector<double>& ood) {
  if (id.empty() || ood.empty()) throw ArgumentError("detection metrics need at least one ID and one OOD score");
  struct Item {
    double score;
    bool is_id;
  };
  std::vector<Item> all;
  all.reserve(id.size() + ood.size());
  for (double s : id) all.push_back({s, true});
  for (double s : ood) all.push_back({s, false});
  std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.score < b.score; });
  // Rank sums are doubled so tied midranks stay integral.
  long double id_rank_sum2 = 0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const long double midrank2 = static_cast<long double>(i + 1 + j);  // 2 * (i+1 + j) / 2
    for (std::size_t m = i; m < j; ++m)
      if (all[m].is_id) id_rank_sum2 += midrank2;
    i = j;
  }
  const long double n_id = static_cast<long double>(id.size());
  const long double n_ood = static_cast<long double>(ood.size());
  const long double u = id_rank_sum2 / 2 - n_id * (n_id + 1) / 2;
  return static_cast<double>(u / (n_id * n_ood));
}

inline double auroc(const EventLog& log) {
  const auto s = split_scores(log);
  return auroc(s.id, s.ood);
}

/// Accuracy of the arrival-time predictions over labeled ID events.
inline double id_accuracy(const EventLog& log) {
  std::size_t n = 0, hit = 0;
  for (const auto& e : log.events) {
    if (e.is_ood_truth || !e.label_truth) continue;
    ++n;
    if (e.prediction == *e.label_truth) ++hit;
  }
  if (n == 0) throw ArgumentError("no labeled ID events to measure accuracy on");
  return static_cast<double>(hit) / static_cast<double>(n);
}

struct Counts {
  std::size_t events = 0;
  std::size_t pseudo_id = 0;
  std::size_t pseudo_ood = 0;
  std::size_t abstain = 0;
  std::size_t updates = 0;
  std::size_t optimizer_steps = 0;
  std::size_t bank_replacements = 0;
  std::size_t contaminated_replacements = 0;
  friend bool operator==(const Counts&, const Counts&) = default;
};

inline Counts count_events(const EventLog& log) {
  Counts c;
  c.events = log.size();
  for (const auto& e : log.events) {
    switch (e.decision) {
      case FilterDecision::PseudoId: ++c.pseudo_id; break;
      case FilterDecision::PseudoOod: ++c.pseudo_ood; break;
      case FilterDecision::Abstain: ++c.abstain; break;
    }
    if (e.optimizer_steps > 0) ++c.updates;
    c.optimizer_steps += e.optimizer_steps;
    if (e.bank_replaced) {
      ++c.bank_replacements;
      if (e.is_ood_truth) ++c.contaminated_replacements;
    }
  }
  return c;
}

struct MetricsReport {
  double fpr95 = 0.0;
  double auroc = 0.0;
  double id_acc = 0.0;
  Counts counts;
};

inline MetricsReport report(const EventLog& log) {
  return {fpr_at_tpr(log, 0.95), auroc(log), id_accuracy(log), count_events(log)};
}

/// Fixed-key JSON object. extra_fields, if given, are emitted first as
/// string members (e.g. the config hash).
inline std::string to_json(const MetricsReport& r,
                           const std::vector<std::pair<std::string, std::string>>& extra_fields = {}) {
  std::ostringstream os;
  os << "{\n";
  for (const auto& [k, v] : extra_fields) os << "  \"" << k << "\": \"" << v << "\",\n";
  os << "  \"fpr95\": " << text::format_double(r.fpr95) << ",\n";
  os << "  \"auroc\": " << text::format_double(r.auroc) << ",\n";
  os << "  \"id_acc\": " << text::format_double(r.id_acc) << ",\n";
  const auto& c = r.counts;
  os << "  \"counts\": {\n"
     << "    \"events\": " << c.events << ",\n"
     << "    \"pseudo_id\": " << c.pseudo_id << ",\n"
     << "    \"pseudo_ood\": " << c.pseudo_ood << ",\n"
     << "    \"abstain\": " << c.abstain << ",\n"
     << "    \"updates\": " << c.updates << ",\n"
     << "    \"optimizer_steps\": " << c.optimizer_steps << ",\n"
     << "    \"bank_replacements\": " << c.bank_replacements << ",\n"
     << "    \"contaminated_replacements\": " << c.contaminated_replacements << "\n"
     << "  }\n}\n";
  return os.str();
}

}  // namespace auto_ood::metrics
