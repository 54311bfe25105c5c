#pragma once
// Independent reference implementations used by the unit and acceptance
// tests. They are written straight-line, in long double where it matters, and
// share no code with the library beyond its data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "auto_ood/engine.hpp"
#include "auto_ood/metrics.hpp"
#include "auto_ood/nn/backward.hpp"

namespace oracle {

using auto_ood::nn::MlpModel;

// ---------- forward pass and losses ----------

inline std::vector<long double> forward(const MlpModel& m, const std::vector<double>& x) {
  std::vector<long double> a(x.begin(), x.end());
  for (std::size_t k = 0; k < m.num_layers(); ++k) {
    const auto& L = m.layer(k);
    std::vector<long double> z(L.out_dim());
    for (std::size_t r = 0; r < L.out_dim(); ++r) {
      long double s = L.bias[r];
      for (std::size_t c = 0; c < L.in_dim(); ++c) s += static_cast<long double>(L.weight(r, c)) * a[c];
      z[r] = s;
    }
    if (k + 1 < m.num_layers())
      for (auto& v : z) v = v > 0 ? v : 0;
    a = std::move(z);
  }
  return a;
}

inline long double lse(const std::vector<long double>& z) {
  long double m = z[0];
  for (auto v : z) m = std::max(m, v);
  long double s = 0;
  for (auto v : z) s += std::exp(v - m);
  return m + std::log(s);
}

inline std::vector<long double> softmax(const std::vector<long double>& z) {
  const long double l = lse(z);
  std::vector<long double> p;
  for (auto v : z) p.push_back(std::exp(v - l));
  return p;
}

inline long double ce_label(const std::vector<long double>& z, std::size_t y) { return lse(z) - z[y]; }

inline long double ce_uniform(const std::vector<long double>& z) {
  const long double l = lse(z);
  long double s = 0;
  for (auto v : z) s += l - v;
  return s / static_cast<long double>(z.size());
}

inline std::size_t argmax(const std::vector<long double>& z) {
  std::size_t b = 0;
  for (std::size_t i = 1; i < z.size(); ++i)
    if (z[i] > z[b]) b = i;
  return b;
}

inline long double sc(const std::vector<long double>& z, std::size_t pred_0, long double phi) {
  const std::size_t t = argmax(z);
  if (t == pred_0) return 0;
  const auto p = softmax(z);
  return p[t] - p[pred_0] + phi;
}

/// Value of a LossSpec evaluated entirely by the oracle.
inline long double loss(const MlpModel& m, const auto_ood::nn::LossSpec& spec) {
  long double total = 0;
  for (const auto& term : spec.terms) {
    std::visit(
        [&](const auto& t) {
          using T = std::decay_t<decltype(t)>;
          const auto z = forward(m, t.x);
          if constexpr (std::is_same_v<T, auto_ood::nn::LabelTerm>) total += t.weight * ce_label(z, t.label);
          else if constexpr (std::is_same_v<T, auto_ood::nn::UniformTerm>) total += t.weight * ce_uniform(z);
          else total += t.weight * sc(z, t.pred_0, t.phi);
        },
        term);
  }
  return total;
}

// ---------- finite differences ----------

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

/// Relative error with an absolute floor: |a - n| / max(|a|, |n|, floor).
inline double rel_error(double a, double n, double floor) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

/// Central differences with step h on every parameter, compared with the
/// library's analytic gradient.
inline GradCheck check_gradients(const MlpModel& model, const auto_ood::nn::LossSpec& spec, double h = 1e-5,
                                 double floor = 1e-6) {
  const auto analytic = auto_ood::nn::backward(model, spec).grads;
  GradCheck out;
  MlpModel probe = model;
  auto visit = [&](auto_ood::Tensor& param, const auto_ood::Tensor& grad) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double saved = param[i];
      param[i] = saved + h;
      const long double up = loss(probe, spec);
      param[i] = saved - h;
      const long double down = loss(probe, spec);
      param[i] = saved;
      const double numeric = static_cast<double>((up - down) / (2.0L * h));
      out.max_rel_error = std::max(out.max_rel_error, rel_error(grad[i], numeric, floor));
      ++out.checked;
    }
  };
  for (std::size_t k = 0; k < probe.num_layers(); ++k) {
    visit(probe.layer(k).weight, analytic.layers[k].weight);
    visit(probe.layer(k).bias, analytic.layers[k].bias);
  }
  return out;
}

/// Smallest |pre-activation| over all hidden units for input x; finite
/// differences are only meaningful away from the rectifier kink.
inline double kink_distance(const MlpModel& m, const std::vector<double>& x) {
  const auto pass = auto_ood::nn::forward(m, x);
  double d = 1e300;
  for (std::size_t k = 0; k + 1 < pass.pre.size(); ++k)
    for (double v : pass.pre[k]) d = std::min(d, std::abs(v));
  return d;
}

/// Gap between the two largest logits (argmax stability under perturbation).
inline double argmax_gap(const MlpModel& m, const std::vector<double>& x) {
  auto z = auto_ood::nn::forward_logits(m, x);
  std::sort(z.begin(), z.end(), std::greater<>());
  return z.size() > 1 ? z[0] - z[1] : 1e300;
}

// ---------- metrics ----------

/// Tries every observed score as a threshold, keeps the largest one whose
/// TPR reaches the target, and counts OOD scores at or above it.
inline double fpr_at_tpr(const std::vector<double>& id, const std::vector<double>& ood, double target) {
  std::vector<double> cands(id.begin(), id.end());
  cands.insert(cands.end(), ood.begin(), ood.end());
  double best = -INFINITY;
  for (double tau : cands) {
    std::size_t pass = 0;
    for (double s : id) pass += s >= tau;
    if (static_cast<double>(pass) / static_cast<double>(id.size()) >= target) best = std::max(best, tau);
  }
  std::size_t fp = 0;
  for (double s : ood) fp += s >= best;
  return static_cast<double>(fp) / static_cast<double>(ood.size());
}

/// O(n^2) pairwise comparison with ties counted one half.
inline double auroc(const std::vector<double>& id, const std::vector<double>& ood) {
  long double wins = 0;
  for (double a : id)
    for (double b : ood) wins += a > b ? 1.0L : (a == b ? 0.5L : 0.0L);
  return static_cast<double>(wins / (static_cast<long double>(id.size()) * static_cast<long double>(ood.size())));
}

// ---------- filter ----------

/// Replays the greedy outlier-margin rule by keeping the list of accepted
/// values and recomputing their mean from scratch after each acceptance.
struct MarginReplay {
  std::vector<long double> accepted;
  long double current = 0;
  bool literal_m0 = false;

  MarginReplay(double m_out0, bool literal) : current(m_out0), literal_m0(literal) {
    if (!literal) accepted.push_back(m_out0);
  }

  /// Returns whether the score was accepted.
  bool feed(double s) {
    if (!(s < static_cast<double>(current))) return false;
    accepted.push_back(s);
    long double sum = 0;
    for (auto v : accepted) sum += v;
    current = sum / static_cast<long double>(accepted.size());
    return true;
  }
};

// ---------- end-to-end structural checks ----------

/// Runs the engine one arrival at a time and checks the structural
/// invariants after every step. Each failure appends a message.
struct CheckedRun {
  auto_ood::EventLog log;
  std::vector<std::string> violations;
};

inline std::vector<std::vector<double>> model_outputs(const MlpModel& m, const std::vector<std::vector<double>>& xs) {
  std::vector<std::vector<double>> out;
  for (const auto& x : xs) out.push_back(auto_ood::nn::forward_logits(m, x));
  return out;
}

inline CheckedRun run_checked(auto_ood::AutoEngine& engine, const auto_ood::data::Stream& stream,
                              const std::vector<std::vector<double>>& probes) {
  CheckedRun r;
  const auto& st = engine.state();
  const auto trainable = auto_ood::resolve_groups(engine.config().trainable_groups, st.model_t);
  const MlpModel initial = st.model_t;
  const MlpModel reference = st.model_0;
  const double m_in0 = st.margins.m_in;
  const auto probe0 = model_outputs(st.model_0, probes);
  const std::size_t classes = st.model_t.num_classes();
  double prev_m_out = st.margins.m_out;
  auto fail = [&](std::size_t t, const std::string& what) {
    if (r.violations.size() < 20) r.violations.push_back("t=" + std::to_string(t) + ": " + what);
  };

  for (const auto& item : stream.items) {
    auto ev = engine.step(item.x, item.truth);
    const std::size_t t = ev.t;
    r.log.append(ev);
    if (st.bank.size() != classes) fail(t, "memory bank size changed");
    if (std::memcmp(&st.margins.m_in, &m_in0, sizeof(double)) != 0) fail(t, "m_in changed");
    if (st.margins.m_out > prev_m_out) fail(t, "m_out increased");
    prev_m_out = st.margins.m_out;
    for (std::size_t k = 0; k < st.model_t.num_layers(); ++k) {
      const auto& now = st.model_t.layer(k);
      if (trainable.contains(now.group)) continue;
      if (!now.weight.bitwise_equal(initial.layer(k).weight) || !now.bias.bitwise_equal(initial.layer(k).bias))
        fail(t, "frozen group " + now.group + " changed");
    }
    if (!st.model_0.bitwise_equal(reference) || model_outputs(st.model_0, probes) != probe0)
      fail(t, "reference model changed");
  }
  const auto c = auto_ood::metrics::count_events(r.log);
  if (c.pseudo_id + c.pseudo_ood + c.abstain != stream.size() || r.log.size() != stream.size())
    r.violations.push_back("event counts do not partition the stream");
  if (engine.config().iters_T > 0 && c.updates != c.pseudo_ood)
    r.violations.push_back("update count differs from pseudo-OOD count");
  return r;
}

}  // namespace oracle
