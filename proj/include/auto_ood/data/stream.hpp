#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "auto_ood/data/dataset.hpp"
#include "auto_ood/data/scenario.hpp"

namespace auto_ood::data {

/// Ground truth that travels with a stream sample. Only logged, never used
/// for any decision.
struct HiddenTruth {
  bool is_ood = false;
  std::optional<std::size_t> label;  // ID class, absent for OOD
  int source = -1;                   // OOD source index, -1 for ID
  friend bool operator==(const HiddenTruth&, const HiddenTruth&) = default;
};

struct StreamItem {
  std::vector<double> x;
  HiddenTruth truth;
  friend bool operator==(const StreamItem&, const StreamItem&) = default;
};

/// Ordered test stream. segment_starts[k] is the index of the first sample
/// of segment k; a plain stream has the single segment {0}.
struct Stream {
  std::size_t dim = 0;
  std::vector<StreamItem> items;
  std::vector<std::size_t> segment_starts{0};

  std::size_t size() const noexcept { return items.size(); }
  bool empty() const noexcept { return items.empty(); }

  /// [begin, end) of segment k.
  std::pair<std::size_t, std::size_t> segment(std::size_t k) const {
    const std::size_t b = segment_starts.at(k);
    const std::size_t e = k + 1 < segment_starts.size() ? segment_starts[k + 1] : items.size();
    return {b, e};
  }

  friend bool operator==(const Stream&, const Stream&) = default;
};

namespace detail {

inline std::vector<StreamItem> id_pool(const Dataset& ds) {
  std::vector<StreamItem> pool;
  for (const auto& s : ds.samples) {
    HiddenTruth t;
    if (s.label >= 0) t.label = static_cast<std::size_t>(s.label);
    pool.push_back({s.x, t});
  }
  return pool;
}

inline void append_ood_pool(std::vector<StreamItem>& pool, const Dataset& ds, int source) {
  for (const auto& s : ds.samples) pool.push_back({s.x, HiddenTruth{true, std::nullopt, source}});
}

inline void check_kappa(double kappa) {
  if (!(kappa >= 0.0 && kappa < 1.0)) throw ArgumentError("kappa must lie in [0, 1)");
}

/// Bernoulli(kappa) per position picks ID, otherwise OOD; items are drawn
/// without replacement from shuffled pools and the stream stops at the first
/// draw from an exhausted pool.
inline std::vector<StreamItem> compose(std::vector<StreamItem> ids, std::vector<StreamItem> oods, double kappa,
                                       std::uint64_t seed) {
  check_kappa(kappa);
  if (kappa > 0.0 && ids.empty()) throw ArgumentError("ID set is empty but kappa > 0");
  if (oods.empty()) throw ArgumentError("OOD set is empty");
  Rng rng(seed);
  shuffle(ids, rng);
  shuffle(oods, rng);
  std::vector<StreamItem> out;
  out.reserve(ids.size() + oods.size());
  std::size_t next_id = 0, next_ood = 0;
  while (true) {
    if (bernoulli(rng, kappa)) {
      if (next_id == ids.size()) break;
      out.push_back(std::move(ids[next_id++]));
    } else {
      if (next_ood == oods.size()) break;
      out.push_back(std::move(oods[next_ood++]));
    }
  }
  return out;
}

inline std::size_t common_dim(const Dataset& id, const std::vector<Dataset>& oods) {
  for (const auto& o : oods)
    if (o.dim != id.dim) throw ArgumentError("ID and OOD sets have different dimensions");
  return id.dim;
}

}  // namespace detail

/// Huber-contaminated stream: each position is ID with probability kappa.
inline Stream compose_stream(const Dataset& test_id, const Dataset& ood, double kappa, std::uint64_t seed) {
  Stream s;
  s.dim = detail::common_dim(test_id, {ood});
  std::vector<StreamItem> oods;
  detail::append_ood_pool(oods, ood, 0);
  s.items = detail::compose(detail::id_pool(test_id), std::move(oods), kappa, seed);
  return s;
}

/// Like compose_stream, but the OOD pool is the union of all sources, so
/// each OOD position draws uniformly over the remaining outliers of every
/// source.
inline Stream compose_mixed(const Dataset& test_id, const std::vector<Dataset>& ood_sets, double kappa,
                            std::uint64_t seed) {
  if (ood_sets.empty()) throw ArgumentError("mixed stream needs at least one OOD source");
  Stream s;
  s.dim = detail::common_dim(test_id, ood_sets);
  std::vector<StreamItem> oods;
  for (std::size_t k = 0; k < ood_sets.size(); ++k) detail::append_ood_pool(oods, ood_sets[k], static_cast<int>(k));
  s.items = detail::compose(detail::id_pool(test_id), std::move(oods), kappa, seed);
  return s;
}

/// Sources encountered one after another: segment k mixes the k-th slice of
/// the ID pool with OOD source k.
inline Stream compose_timeseries(const Dataset& test_id, const std::vector<Dataset>& ood_sets, double kappa,
                                 std::uint64_t seed) {
  detail::check_kappa(kappa);
  if (ood_sets.size() < 2) throw ArgumentError("time-series stream needs at least two OOD sources");
  Stream s;
  s.dim = detail::common_dim(test_id, ood_sets);
  s.segment_starts.clear();
  const auto ids = detail::id_pool(test_id);
  const std::size_t k_total = ood_sets.size();
  for (std::size_t k = 0; k < k_total; ++k) {
    const std::size_t b = ids.size() * k / k_total;
    const std::size_t e = ids.size() * (k + 1) / k_total;
    std::vector<StreamItem> slice(ids.begin() + static_cast<std::ptrdiff_t>(b),
                                  ids.begin() + static_cast<std::ptrdiff_t>(e));
    std::vector<StreamItem> oods;
    detail::append_ood_pool(oods, ood_sets[k], static_cast<int>(k));
    s.segment_starts.push_back(s.items.size());
    auto seg = detail::compose(std::move(slice), std::move(oods), kappa, derive_seed(seed, k));
    for (auto& item : seg) s.items.push_back(std::move(item));
  }
  return s;
}

}  // namespace auto_ood::data
