#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "auto_ood/errors.hpp"

namespace auto_ood::nn {

/// Argmax with ties broken by the lowest index.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline double logsumexp(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

/// Max-shifted log-softmax; shift invariant and overflow free.
inline std::vector<double> log_softmax(std::span<const double> logits) {
  const double lse = logsumexp(logits);
  std::vector<double> out(logits.size());
  std::transform(logits.begin(), logits.end(), out.begin(), [lse](double v) { return v - lse; });
  return out;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += (out[i] = std::exp(logits[i] - m));
  for (double& p : out) p /= s;
  return out;
}

inline void check_class(std::size_t cls, std::size_t num_classes, const char* what) {
  if (cls >= num_classes) {
    throw ArgumentError(std::string(what) + " " + std::to_string(cls) + " out of range for " +
                        std::to_string(num_classes) + " classes");
  }
}

/// Cross-entropy against a hard label.
inline double loss_ce_label(std::span<const double> logits, std::size_t label) {
  check_class(label, logits.size(), "label");
  return logsumexp(logits) - logits[label];
}

/// Cross-entropy against the uniform distribution. Equals KL(u || softmax)
/// plus ln C, so its minimum is ln C and its gradient matches the KL form.
inline double loss_ce_uniform(std::span<const double> logits) {
  const double lse = logsumexp(logits);
  double s = 0.0;
  for (double v : logits) s += lse - v;
  return s / static_cast<double>(logits.size());
}

/// Consistency hinge between the live prediction and the frozen model's
/// prediction: zero on agreement, p[pred_t] - p[pred_0] + phi otherwise.
/// No clamping at zero.
inline double loss_sc(std::span<const double> softmax_t, std::size_t pred_t, std::size_t pred_0,
                      double phi) {
  check_class(pred_t, softmax_t.size(), "pred_t");
  check_class(pred_0, softmax_t.size(), "pred_0");
  if (pred_t == pred_0) return 0.0;
  return softmax_t[pred_t] - softmax_t[pred_0] + phi;
}

// Gradients of the losses with respect to the logits.

inline std::vector<double> grad_ce_label(std::span<const double> logits, std::size_t label) {
  check_class(label, logits.size(), "label");
  auto g = softmax(logits);
  g[label] -= 1.0;
  return g;
}

inline std::vector<double> grad_ce_uniform(std::span<const double> logits) {
  auto g = softmax(logits);
  const double u = 1.0 / static_cast<double>(g.size());
  for (double& v : g) v -= u;
  return g;
}

/// d/dz of loss_sc evaluated at softmax(logits), with pred_t = argmax(logits)
/// held fixed (the loss is piecewise smooth between argmax changes).
inline std::vector<double> grad_sc(std::span<const double> logits, std::size_t pred_0) {
  check_class(pred_0, logits.size(), "pred_0");
  const std::size_t pred_t = argmax(logits);
  std::vector<double> g(logits.size(), 0.0);
  if (pred_t == pred_0) return g;
  const auto p = softmax(logits);
  // dp_i/dz_j = p_i (delta_ij - p_j)
  for (std::size_t j = 0; j < g.size(); ++j) {
    g[j] = p[pred_t] * ((j == pred_t ? 1.0 : 0.0) - p[j]) - p[pred_0] * ((j == pred_0 ? 1.0 : 0.0) - p[j]);
  }
  return g;
}

}  // namespace auto_ood::nn
