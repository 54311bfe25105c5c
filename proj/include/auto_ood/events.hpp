#pragma once

#include <optional>
#include <vector>

#include "auto_ood/filter.hpp"

namespace auto_ood {

/// Record of one stream arrival. score and prediction are taken with the
/// model as it was when the sample arrived, before any update it triggers.
struct StreamEvent {
  std::size_t t = 0;
  double score = 0.0;
  std::size_t prediction = 0;
  FilterDecision decision = FilterDecision::Abstain;
  bool is_ood_truth = false;
  std::optional<std::size_t> label_truth;
  int source = -1;
  double m_out_after = 0.0;
  std::size_t optimizer_steps = 0;
  bool bank_replaced = false;

  friend bool operator==(const StreamEvent&, const StreamEvent&) = default;

  /// Equality of the fields a post-hoc detector produces (arrival score,
  /// prediction and truth), ignoring the filter's bookkeeping.
  bool same_detection(const StreamEvent& o) const {
    return t == o.t && score == o.score && prediction == o.prediction && is_ood_truth == o.is_ood_truth &&
           label_truth == o.label_truth && source == o.source;
  }
};

/// Ordered events; event i has t == i.
struct EventLog {
  std::vector<StreamEvent> events;

  std::size_t size() const noexcept { return events.size(); }
  bool empty() const noexcept { return events.empty(); }
  void append(StreamEvent e) {
    e.t = events.size();
    events.push_back(std::move(e));
  }

  /// Events [begin, end), renumbered from 0.
  EventLog slice(std::size_t begin, std::size_t end) const {
    EventLog out;
    for (std::size_t i = begin; i < end && i < events.size(); ++i) out.append(events[i]);
    return out;
  }

  friend bool operator==(const EventLog&, const EventLog&) = default;
};

}  // namespace auto_ood
