#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "auto_ood/data/stream.hpp"
#include "auto_ood/engine.hpp"
#include "auto_ood/experiment/config.hpp"
#include "auto_ood/metrics.hpp"
#include "auto_ood/nn/checkpoint.hpp"
#include "auto_ood/nn/train.hpp"

namespace auto_ood::experiment {

/// Generated (or loaded) train / ID test / OOD sets for a config.
inline data::Scenario build_scenario(const RunConfig& cfg) {
  if (!cfg.files.train_file.empty()) {
    data::Scenario sc;
    sc.train = data::load_dataset(cfg.files.train_file);
    sc.test_id = data::load_dataset(cfg.files.test_id_file);
    for (const auto& f : cfg.files.ood_files) sc.ood.push_back(data::load_dataset(f));
    return sc;
  }
  auto spec = cfg.scenario;
  spec.seed = cfg.scenario_seed();
  return data::make_scenario(spec);
}

inline nn::TrainResult pretrain(const RunConfig& cfg, const data::Scenario& sc) {
  nn::TrainConfig tc;
  tc.epochs = cfg.pretrain.epochs;
  tc.batch_size = cfg.pretrain.batch_size;
  tc.learning_rate = cfg.pretrain.learning_rate;
  tc.momentum = cfg.pretrain.momentum;
  tc.seed = cfg.pretrain_seed();
  return nn::train_offline(nn::MlpModel::random(cfg.layer_dims(), cfg.init_seed()), sc.train, tc);
}

inline data::Stream build_stream(const RunConfig& cfg, const data::Scenario& sc) {
  const auto seed = cfg.stream_seed();
  switch (cfg.stream.kind) {
    case StreamKind::Single:
      if (cfg.stream.source >= sc.ood.size())
        throw ConfigError("stream.source", "no OOD source with index " + std::to_string(cfg.stream.source));
      return data::compose_stream(sc.test_id, sc.ood[cfg.stream.source], cfg.stream.kappa, seed);
    case StreamKind::Mixed: return data::compose_mixed(sc.test_id, sc.ood, cfg.stream.kappa, seed);
    case StreamKind::TimeSeries: return data::compose_timeseries(sc.test_id, sc.ood, cfg.stream.kappa, seed);
  }
  throw ConfigError("stream.kind", "unsupported stream kind");
}

enum class RunMode { Auto, Frozen };

struct RunResult {
  EventLog log;
  metrics::MetricsReport report;
  Margins initial_margins;
  Margins final_margins;
  std::vector<metrics::MetricsReport> segment_reports;  // one per stream segment
  std::vector<DescentRecord> descent;
};

namespace detail {

inline std::vector<metrics::MetricsReport> segment_reports(const EventLog& log, const data::Stream& stream) {
  std::vector<metrics::MetricsReport> out;
  if (stream.segment_starts.size() < 2) return out;
  for (std::size_t k = 0; k < stream.segment_starts.size(); ++k) {
    const auto [b, e] = stream.segment(k);
    out.push_back(metrics::report(log.slice(b, e)));
  }
  return out;
}

}  // namespace detail

/// Runs AUTO (or the frozen post-hoc baseline) from a pretrained model.
inline RunResult run(const RunConfig& cfg, const nn::MlpModel& model, const data::Scenario& sc,
                     const data::Stream& stream, RunMode mode, bool record_descent = false) {
  RunResult r;
  if (mode == RunMode::Auto) {
    auto acfg = cfg.autocfg;
    acfg.record_descent = record_descent;
    auto engine = AutoEngine::create(std::move(acfg), model, sc.train);
    r.initial_margins = engine.state().margins;
    r.log = engine.run_stream(stream);
    r.final_margins = engine.state().margins;
    r.descent = engine.descent_records();
  } else {
    const auto stats = initial_id_stats(model, cfg.autocfg, sc.train);
    r.initial_margins = init_margins(stats, cfg.autocfg.filter.k1, cfg.autocfg.filter.k2,
                                     cfg.autocfg.filter.margin_literal_m0);
    r.final_margins = r.initial_margins;
    r.log = score_frozen(model, cfg.autocfg.score, r.initial_margins, stream);
  }
  r.report = metrics::report(r.log);
  r.segment_reports = detail::segment_reports(r.log, stream);
  return r;
}

/// Per-event CSV: t,score,prediction,decision,is_ood_truth,label_truth,m_out
inline std::string events_csv(const EventLog& log, const std::string& config_hash) {
  std::ostringstream os;
  os << "# config-hash: " << config_hash << '\n';
  os << "t,score,prediction,decision,is_ood_truth,label_truth,m_out\n";
  for (const auto& e : log.events) {
    os << e.t << ',' << text::format_double(e.score) << ',' << e.prediction << ',' << to_string(e.decision) << ','
       << (e.is_ood_truth ? 1 : 0) << ',' << (e.label_truth ? std::to_string(*e.label_truth) : std::string("-1"))
       << ',' << text::format_double(e.m_out_after) << '\n';
  }
  return os.str();
}

/// The four objective combinations of the ablation, in output order.
struct AblationRow {
  std::string name;
  bool use_id_loss;
  bool use_ood_loss;
  bool use_sc_loss;
};

inline std::vector<AblationRow> ablation_rows() {
  return {{"id_only", true, false, false},
          {"ood_only", false, true, false},
          {"id+ood", true, true, false},
          {"id+ood+sc", true, true, true}};
}

inline RunConfig ablation_config(RunConfig cfg, const AblationRow& row) {
  cfg.autocfg.use_id_loss = row.use_id_loss;
  if (!row.use_ood_loss) cfg.autocfg.lambda1 = 0.0;
  if (!row.use_sc_loss) cfg.autocfg.lambda2 = 0.0;
  return cfg;
}

/// Parameters accepted by the sweep command.
inline const std::vector<std::string>& sweep_parameters() {
  static const std::vector<std::string> names{"lambda2", "phi",  "kappa", "iters_T", "trainable_groups",
                                              "k1",      "k2",   "stats_subsample_n"};
  return names;
}

inline std::string sweep_key(const std::string& param) {
  if (param == "kappa") return "stream.kappa";
  if (param == "trainable_groups") return "sgd.trainable_groups";
  for (const auto& n : sweep_parameters())
    if (n == param) return "auto." + param;
  std::string valid;
  for (const auto& n : sweep_parameters()) valid += (valid.empty() ? "" : ", ") + n;
  throw ArgumentError("unknown sweep parameter '" + param + "' (valid: " + valid + ")");
}

/// Config with one swept parameter set. Group lists in a sweep value are
/// separated by '+', e.g. "block2+fc".
inline RunConfig sweep_config(RunConfig cfg, const std::string& param, const std::string& value) {
  std::string v = value;
  if (param == "trainable_groups")
    for (char& ch : v)
      if (ch == '+') ch = ',';
  apply_setting(cfg, sweep_key(param), v);
  validate(cfg);
  return cfg;
}

}  // namespace auto_ood::experiment
