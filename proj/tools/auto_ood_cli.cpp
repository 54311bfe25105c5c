// auto_ood_cli: pretrain, run, ablate and sweep on configured scenarios.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "auto_ood/experiment/config.hpp"
#include "auto_ood/experiment/runner.hpp"
#include "auto_ood/experiment/svg.hpp"

namespace fs = std::filesystem;
using namespace auto_ood;
using namespace auto_ood::experiment;

namespace {

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool plot = false;
};

RunConfig resolve_config(const GlobalOptions& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out_dir.empty()) cfg.output.dir = g.out_dir;
  if (g.plot) cfg.output.plot = true;
  validate(cfg);
  return cfg;
}

void write_file(const fs::path& path, const std::string& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write " + path.string());
  out << body;
  if (!out) throw ArgumentError("failed writing " + path.string());
}

nn::MlpModel load_pretrained(const RunConfig& cfg) {
  const auto path = cfg.output.checkpoint_path();
  if (!fs::exists(path)) throw CheckpointError("checkpoint " + path + " not found (run 'pretrain' first)");
  auto model = nn::load_checkpoint(path);
  if (model.input_dim() != cfg.scenario.dim && cfg.files.train_file.empty())
    throw CheckpointDimensionError("checkpoint input dimension " + std::to_string(model.input_dim()) +
                                   " does not match scenario.dim " + std::to_string(cfg.scenario.dim));
  return model;
}

std::string metric_row(const metrics::MetricsReport& r) {
  return text::format_double(r.fpr95) + ',' + text::format_double(r.auroc) + ',' + text::format_double(r.id_acc) +
         ',' + std::to_string(r.counts.pseudo_id) + ',' + std::to_string(r.counts.pseudo_ood) + ',' +
         std::to_string(r.counts.abstain) + ',' + std::to_string(r.counts.optimizer_steps);
}

constexpr const char* kMetricColumns = "fpr95,auroc,id_acc,pseudo_id,pseudo_ood,abstain,optimizer_steps";

int cmd_pretrain(const RunConfig& cfg) {
  const auto sc = build_scenario(cfg);
  const auto result = pretrain(cfg, sc);
  const auto ckpt = cfg.output.checkpoint_path();
  if (fs::path(ckpt).has_parent_path()) fs::create_directories(fs::path(ckpt).parent_path());
  nn::save_checkpoint(result.model, ckpt);
  const double test_acc = nn::accuracy(result.model, sc.test_id);
  std::ostringstream js;
  js << "{\n  \"config_hash\": \"" << cfg.hash() << "\",\n"
     << "  \"checkpoint\": \"" << ckpt << "\",\n"
     << "  \"epochs\": " << result.epochs << ",\n"
     << "  \"train_accuracy\": " << text::format_double(result.train_accuracy) << ",\n"
     << "  \"test_id_accuracy\": " << text::format_double(test_acc) << "\n}\n";
  write_file(fs::path(cfg.output.dir) / "pretrain_summary.json", js.str());
  std::cout << "pretrain: train accuracy " << result.train_accuracy << ", ID test accuracy " << test_acc
            << ", checkpoint " << ckpt << '\n';
  return 0;
}

int cmd_run(const RunConfig& cfg, const std::string& mode_name) {
  const RunMode mode = mode_name == "frozen" ? RunMode::Frozen : RunMode::Auto;
  const auto model = load_pretrained(cfg);
  const auto sc = build_scenario(cfg);
  const auto stream = build_stream(cfg, sc);
  const auto r = run(cfg, model, sc, stream, mode);
  const auto hash = cfg.hash();
  const fs::path dir(cfg.output.dir);

  write_file(dir / (mode_name + "_events.csv"), events_csv(r.log, hash));
  write_file(dir / (mode_name + "_metrics.json"), metrics::to_json(r.report, {{"config_hash", hash}, {"mode", mode_name}}));
  if (!r.segment_reports.empty()) {
    std::string csv = "# config-hash: " + hash + "\nsegment," + kMetricColumns + '\n';
    for (std::size_t k = 0; k < r.segment_reports.size(); ++k)
      csv += std::to_string(k) + ',' + metric_row(r.segment_reports[k]) + '\n';
    write_file(dir / (mode_name + "_segments.csv"), csv);
  }
  if (cfg.output.plot)
    write_file(dir / (mode_name + "_plot.svg"),
               score_plot_svg(r.log, r.initial_margins.m_in, r.initial_margins.m_out, hash));

  std::cout << mode_name << ": events " << r.log.size() << ", FPR95 " << r.report.fpr95 << ", AUROC "
            << r.report.auroc << ", ID_Acc " << r.report.id_acc << '\n';
  for (std::size_t k = 0; k < r.segment_reports.size(); ++k)
    std::cout << "  segment " << k << ": FPR95 " << r.segment_reports[k].fpr95 << ", AUROC "
              << r.segment_reports[k].auroc << '\n';
  return 0;
}

int cmd_ablate(const RunConfig& cfg) {
  const auto model = load_pretrained(cfg);
  const auto sc = build_scenario(cfg);
  const auto stream = build_stream(cfg, sc);
  std::string csv = "# config-hash: " + cfg.hash() + "\nobjective," + kMetricColumns + '\n';
  for (const auto& row : ablation_rows()) {
    const auto r = run(ablation_config(cfg, row), model, sc, stream, RunMode::Auto);
    csv += row.name + ',' + metric_row(r.report) + '\n';
    std::cout << row.name << ": FPR95 " << r.report.fpr95 << ", AUROC " << r.report.auroc << ", ID_Acc "
              << r.report.id_acc << '\n';
  }
  write_file(fs::path(cfg.output.dir) / "ablation.csv", csv);
  return 0;
}

int cmd_sweep(const RunConfig& cfg, const std::string& param, const std::vector<std::string>& values) {
  sweep_key(param);  // rejects unknown names before any work
  if (values.empty()) throw ArgumentError("sweep needs at least one value");
  std::vector<RunConfig> configs;
  for (const auto& v : values) configs.push_back(sweep_config(cfg, param, v));

  const auto model = load_pretrained(cfg);
  const auto sc = build_scenario(cfg);
  // Independent runs; each owns its engine. Results are merged in value order.
  std::vector<std::future<metrics::MetricsReport>> jobs;
  for (const auto& c : configs)
    jobs.push_back(std::async(std::launch::async, [&model, &sc, c] {
      return run(c, model, sc, build_stream(c, sc), RunMode::Auto).report;
    }));

  std::string csv = "# config-hash: " + cfg.hash() + "\n" + param + ',' + kMetricColumns + '\n';
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto rep = jobs[i].get();
    csv += values[i] + ',' + metric_row(rep) + '\n';
    std::cout << param << '=' << values[i] << ": FPR95 " << rep.fpr95 << ", AUROC " << rep.auroc << ", ID_Acc "
              << rep.id_acc << '\n';
  }
  write_file(fs::path(cfg.output.dir) / ("sweep_" + param + ".csv"), csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming test-time OOD detection with online adaptation"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "Run configuration file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Override the master seed");
  app.add_option("--out", g.out_dir, "Output directory");
  app.add_flag("--plot", g.plot, "Also write an SVG score plot (run)");

  auto* pre = app.add_subcommand("pretrain", "Train the classifier offline and write a checkpoint");
  std::string mode = "auto";
  auto* run_cmd = app.add_subcommand("run", "Run AUTO or the frozen baseline on the configured stream");
  run_cmd->add_option("--mode", mode, "auto or frozen")->check(CLI::IsMember({"auto", "frozen"}));
  auto* abl = app.add_subcommand("ablate", "Compare the four objective combinations");
  std::string param;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "Run one AUTO pass per parameter value");
  sweep->add_option("--param", param, "Parameter to sweep")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) g.seed = seed;

  try {
    const auto cfg = resolve_config(g);
    if (*pre) return cmd_pretrain(cfg);
    if (*run_cmd) return cmd_run(cfg, mode);
    if (*abl) return cmd_ablate(cfg);
    if (*sweep) return cmd_sweep(cfg, param, values);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
