#pragma once
// Scenario fixtures shared by the end-to-end tests.

#include <cstdint>
#include <vector>

#include "auto_ood/experiment/config.hpp"
#include "auto_ood/experiment/runner.hpp"

namespace fixture {

using namespace auto_ood;

struct Setup {
  experiment::RunConfig cfg;
  data::Scenario sc;
  nn::MlpModel model;
  double train_accuracy = 0.0;
  data::Stream stream;
};

inline Setup build(const experiment::RunConfig& cfg) {
  Setup s;
  s.cfg = cfg;
  s.sc = experiment::build_scenario(cfg);
  auto trained = experiment::pretrain(cfg, s.sc);
  s.model = std::move(trained.model);
  s.train_accuracy = trained.train_accuracy;
  s.stream = experiment::build_stream(cfg, s.sc);
  return s;
}

/// The pinned canonical scenario, pretrained once per process.
inline const Setup& canonical() {
  static const Setup s = build(experiment::RunConfig{});
  return s;
}

/// Small random scenario for property tests: 2-4 inputs, 2-4 classes, one
/// or two hidden layers, a few hundred stream events.
inline experiment::RunConfig small_config(std::uint64_t seed) {
  Rng rng(data::derive_seed(seed, 999));
  experiment::RunConfig cfg;
  cfg.seed = seed;
  auto& sc = cfg.scenario;
  sc.dim = 2 + uniform_index(rng, 3);
  sc.classes = 2 + uniform_index(rng, 3);
  sc.class_means = data::circle_means(sc.classes, sc.dim, 1.5);
  sc.spread = 0.3;
  sc.train_n = 120;
  sc.test_id_n = 150;
  std::vector<double> mean(sc.dim, 0.0);
  mean[sc.dim - 1] = 3.0 + 2.0 * uniform01(rng);
  sc.ood_sources = {{data::ShiftedGaussian{mean, 0.7}, 150}};
  cfg.pretrain.hidden = uniform01(rng) < 0.5 ? std::vector<std::size_t>{16} : std::vector<std::size_t>{12, 12};
  cfg.pretrain.epochs = 15;
  cfg.autocfg.filter.k2 = 1.0 + uniform01(rng);
  cfg.autocfg.learning_rate = 0.01;
  return cfg;
}

/// A few fixed probe inputs for frozen-model checks.
inline std::vector<std::vector<double>> probes(std::size_t dim) {
  std::vector<std::vector<double>> out;
  for (int k = 0; k < 4; ++k) {
    std::vector<double> x(dim);
    for (std::size_t j = 0; j < dim; ++j) x[j] = 0.5 * (k + 1) * (j % 2 == 0 ? 1.0 : -1.0);
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace fixture
