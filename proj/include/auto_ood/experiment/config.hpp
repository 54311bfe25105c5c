#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "auto_ood/data/scenario.hpp"
#include "auto_ood/engine.hpp"
#include "auto_ood/nn/train.hpp"

namespace auto_ood::experiment {

enum class StreamKind { Single, Mixed, TimeSeries };

inline std::string_view to_string(StreamKind k) {
  switch (k) {
    case StreamKind::Single: return "single";
    case StreamKind::Mixed: return "mixed";
    case StreamKind::TimeSeries: return "timeseries";
  }
  return "single";
}

struct StreamConfig {
  StreamKind kind = StreamKind::Single;
  double kappa = 0.5;
  std::size_t source = 0;  // OOD source used by single streams
  friend bool operator==(const StreamConfig&, const StreamConfig&) = default;
};

struct PretrainConfig {
  std::vector<std::size_t> hidden{128, 128};
  std::size_t epochs = 60;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  friend bool operator==(const PretrainConfig&, const PretrainConfig&) = default;
};

/// External feature files; when train_file is set the scenario generator is
/// bypassed and the sets are loaded instead.
struct DataFiles {
  std::string train_file;
  std::string test_id_file;
  std::vector<std::string> ood_files;
  friend bool operator==(const DataFiles&, const DataFiles&) = default;
};

struct OutputConfig {
  std::string dir = "out";
  std::string checkpoint;  // empty: <dir>/model.ckpt
  bool plot = false;
  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;

  std::string checkpoint_path() const { return checkpoint.empty() ? dir + "/model.ckpt" : checkpoint; }
};

/// The canonical toy scenario: three Gaussian classes with means on the unit
/// circle of the first two coordinates of an 8-D input, and two outlier
/// clouds at distance 5 along the third and last axes.
inline data::ScenarioSpec canonical_scenario() {
  data::ScenarioSpec s;
  s.dim = 8;
  s.classes = 3;
  s.class_means = data::circle_means(3, 8, 1.0);
  s.spread = 0.3;
  s.train_n = 600;
  s.test_id_n = 3000;
  auto axis = [](std::size_t i) {
    std::vector<double> m(8, 0.0);
    m[i] = 5.0;
    return m;
  };
  s.ood_sources = {
      {data::ShiftedGaussian{axis(2), 0.5}, 3000},
      {data::ShiftedGaussian{axis(7), 0.5}, 3000},
  };
  return s;
}

/// One complete experiment description. A default-constructed RunConfig is
/// the canonical scenario with the default test-time settings.
struct RunConfig {
  std::uint64_t seed = 2024;
  data::ScenarioSpec scenario = canonical_scenario();
  DataFiles files;
  PretrainConfig pretrain;
  StreamConfig stream;
  AutoConfig autocfg;
  OutputConfig output;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  std::uint64_t scenario_seed() const { return data::derive_seed(seed, 10); }
  std::uint64_t pretrain_seed() const { return data::derive_seed(seed, 11); }
  std::uint64_t stream_seed() const { return data::derive_seed(seed, 12); }
  std::uint64_t init_seed() const { return data::derive_seed(seed, 13); }

  std::vector<std::size_t> layer_dims() const {
    std::vector<std::size_t> dims{scenario.dim};
    dims.insert(dims.end(), pretrain.hidden.begin(), pretrain.hidden.end());
    dims.push_back(scenario.classes);
    return dims;
  }

  std::string to_text() const;

  /// Hash of every setting that affects results; output locations excluded.
  std::string hash() const {
    RunConfig c = *this;
    c.output = OutputConfig{};
    return text::hex64(text::fnv1a(c.to_text()));
  }
};

namespace detail {

inline std::string join_doubles(const std::vector<double>& v, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? std::string(1, sep) : "") + text::format_double(v[i]);
  return out;
}

inline std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

inline std::string ood_source_text(const data::OodSource& src) {
  std::string body = std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, data::ShiftedGaussian>)
          return "gaussian mean=" + join_doubles(s.mean) + " spread=" + text::format_double(s.spread);
        else if constexpr (std::is_same_v<T, data::UniformBox>)
          return "box lo=" + join_doubles(s.lo) + " hi=" + join_doubles(s.hi);
        else
          return "ring radius=" + text::format_double(s.radius) + " width=" + text::format_double(s.width);
      },
      src.shape);
  return body + " n=" + std::to_string(src.n);
}

inline std::string bool_text(bool b) { return b ? "true" : "false"; }

}  // namespace detail

/// Canonical key=value serialization, one key per line, fixed order.
inline std::string RunConfig::to_text() const {
  std::ostringstream os;
  const auto& a = autocfg;
  os << "seed=" << seed << '\n';
  os << "scenario.dim=" << scenario.dim << '\n';
  os << "scenario.classes=" << scenario.classes << '\n';
  os << "scenario.means=";
  for (std::size_t c = 0; c < scenario.class_means.size(); ++c)
    os << (c ? ";" : "") << detail::join_doubles(scenario.class_means[c]);
  os << '\n';
  os << "scenario.spread=" << text::format_double(scenario.spread) << '\n';
  os << "scenario.train_n=" << scenario.train_n << '\n';
  os << "scenario.test_id_n=" << scenario.test_id_n << '\n';
  os << "scenario.ood=";
  for (std::size_t k = 0; k < scenario.ood_sources.size(); ++k)
    os << (k ? " | " : "") << detail::ood_source_text(scenario.ood_sources[k]);
  os << '\n';
  os << "scenario.train_file=" << files.train_file << '\n';
  os << "scenario.test_id_file=" << files.test_id_file << '\n';
  os << "scenario.ood_files=";
  for (std::size_t k = 0; k < files.ood_files.size(); ++k) os << (k ? "," : "") << files.ood_files[k];
  os << '\n';
  os << "pretrain.hidden=" << detail::join_sizes(pretrain.hidden) << '\n';
  os << "pretrain.epochs=" << pretrain.epochs << '\n';
  os << "pretrain.batch_size=" << pretrain.batch_size << '\n';
  os << "pretrain.lr=" << text::format_double(pretrain.learning_rate) << '\n';
  os << "pretrain.momentum=" << text::format_double(pretrain.momentum) << '\n';
  os << "stream.kind=" << to_string(stream.kind) << '\n';
  os << "stream.kappa=" << text::format_double(stream.kappa) << '\n';
  os << "stream.source=" << stream.source << '\n';
  os << "auto.lambda1=" << text::format_double(a.lambda1) << '\n';
  os << "auto.lambda2=" << text::format_double(a.lambda2) << '\n';
  os << "auto.phi=" << text::format_double(a.phi) << '\n';
  os << "auto.iters_T=" << a.iters_T << '\n';
  os << "auto.score=" << a.score.name() << '\n';
  os << "auto.energy_temperature=" << text::format_double(a.score.temperature) << '\n';
  os << "auto.lambda2_decay=" << a.lambda2_decay.to_string() << '\n';
  os << "auto.use_id_loss=" << detail::bool_text(a.use_id_loss) << '\n';
  os << "auto.k1=" << text::format_double(a.filter.k1) << '\n';
  os << "auto.k2=" << text::format_double(a.filter.k2) << '\n';
  os << "auto.stats_subsample_n=" << a.filter.stats_subsample_n << '\n';
  os << "auto.margin_literal_m0=" << detail::bool_text(a.filter.margin_literal_m0) << '\n';
  os << "auto.memory_mode=" << to_string(a.memory.mode) << '\n';
  os << "auto.id_loss_reduction=" << to_string(a.memory.reduction) << '\n';
  os << "auto.memory_seed=" << a.memory.seed << '\n';
  os << "sgd.lr=" << text::format_double(a.learning_rate) << '\n';
  os << "sgd.weight_decay=" << text::format_double(a.weight_decay) << '\n';
  os << "sgd.momentum=" << text::format_double(a.momentum) << '\n';
  os << "sgd.trainable_groups=";
  {
    std::size_t i = 0;
    for (const auto& g : a.trainable_groups) os << (i++ ? "," : "") << g;
  }
  os << '\n';
  os << "output.dir=" << output.dir << '\n';
  os << "output.checkpoint=" << output.checkpoint << '\n';
  os << "output.plot=" << detail::bool_text(output.plot) << '\n';
  return os.str();
}

namespace detail {

inline double need_double(const std::string& key, std::string_view v) {
  const auto d = text::parse_double(v);
  if (!d || !std::isfinite(*d)) throw ConfigError(key, "expected a number, got '" + std::string(v) + "'");
  return *d;
}

template <typename Int>
Int need_int(const std::string& key, std::string_view v) {
  const auto i = text::parse_int<Int>(v);
  if (!i) throw ConfigError(key, "expected a nonnegative integer, got '" + std::string(v) + "'");
  return *i;
}

inline bool need_bool(const std::string& key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key, "expected true or false, got '" + std::string(v) + "'");
}

inline std::vector<double> need_doubles(const std::string& key, std::string_view v) {
  std::vector<double> out;
  for (auto t : text::split(v, ',')) out.push_back(need_double(key, text::trim(t)));
  return out;
}

inline std::vector<data::OodSource> parse_ood_sources(const std::string& key, std::string_view v) {
  std::vector<data::OodSource> out;
  if (text::trim(v).empty()) return out;
  for (auto part : text::split(v, '|')) {
    const auto tok = text::split_ws(part);
    if (tok.empty()) throw ConfigError(key, "empty OOD source");
    std::map<std::string, std::string, std::less<>> kv;
    for (std::size_t i = 1; i < tok.size(); ++i) {
      const auto eq = tok[i].find('=');
      if (eq == std::string_view::npos) throw ConfigError(key, "expected name=value, got '" + std::string(tok[i]) + "'");
      kv.emplace(std::string(tok[i].substr(0, eq)), std::string(tok[i].substr(eq + 1)));
    }
    auto take = [&](const char* name) {
      auto it = kv.find(name);
      if (it == kv.end())
        throw ConfigError(key, "OOD source '" + std::string(tok[0]) + "' is missing '" + name + "'");
      auto s = it->second;
      kv.erase(it);
      return s;
    };
    data::OodSource src;
    if (tok[0] == "gaussian") {
      src.shape = data::ShiftedGaussian{need_doubles(key, take("mean")), need_double(key, take("spread"))};
    } else if (tok[0] == "box") {
      src.shape = data::UniformBox{need_doubles(key, take("lo")), need_doubles(key, take("hi"))};
    } else if (tok[0] == "ring") {
      src.shape = data::Ring{need_double(key, take("radius")), need_double(key, take("width"))};
    } else {
      throw ConfigError(key, "unknown OOD source kind '" + std::string(tok[0]) + "' (gaussian, box, ring)");
    }
    src.n = need_int<std::size_t>(key, take("n"));
    if (!kv.empty()) throw ConfigError(key, "unknown OOD source field '" + kv.begin()->first + "'");
    out.push_back(std::move(src));
  }
  return out;
}

inline std::set<std::string> parse_groups(std::string_view v) {
  std::set<std::string> out;
  for (auto t : text::split(v, ',')) {
    const auto g = text::trim(t);
    if (!g.empty()) out.emplace(g);
  }
  return out;
}

}  // namespace detail

/// Applies one key=value assignment. Throws ConfigError naming the key on
/// unknown keys or bad values.
inline void apply_setting(RunConfig& c, const std::string& key, std::string_view raw) {
  using namespace detail;
  const auto v = text::trim(raw);
  auto& a = c.autocfg;
  try {
    if (key == "seed") c.seed = need_int<std::uint64_t>(key, v);
    else if (key == "scenario.dim") c.scenario.dim = need_int<std::size_t>(key, v);
    else if (key == "scenario.classes") c.scenario.classes = need_int<std::size_t>(key, v);
    else if (key == "scenario.means") {
      c.scenario.class_means.clear();
      for (auto m : text::split(v, ';')) c.scenario.class_means.push_back(need_doubles(key, m));
    } else if (key == "scenario.mean_radius") {
      c.scenario.class_means = data::circle_means(c.scenario.classes, c.scenario.dim, need_double(key, v));
    } else if (key == "scenario.spread") c.scenario.spread = need_double(key, v);
    else if (key == "scenario.train_n") c.scenario.train_n = need_int<std::size_t>(key, v);
    else if (key == "scenario.test_id_n") c.scenario.test_id_n = need_int<std::size_t>(key, v);
    else if (key == "scenario.ood") c.scenario.ood_sources = parse_ood_sources(key, v);
    else if (key == "scenario.train_file") c.files.train_file = std::string(v);
    else if (key == "scenario.test_id_file") c.files.test_id_file = std::string(v);
    else if (key == "scenario.ood_files") {
      c.files.ood_files.clear();
      for (auto t : text::split(v, ','))
        if (!text::trim(t).empty()) c.files.ood_files.emplace_back(text::trim(t));
    } else if (key == "pretrain.hidden") {
      c.pretrain.hidden.clear();
      for (auto t : text::split(v, ','))
        if (!text::trim(t).empty()) c.pretrain.hidden.push_back(need_int<std::size_t>(key, text::trim(t)));
    } else if (key == "pretrain.epochs") c.pretrain.epochs = need_int<std::size_t>(key, v);
    else if (key == "pretrain.batch_size") c.pretrain.batch_size = need_int<std::size_t>(key, v);
    else if (key == "pretrain.lr") c.pretrain.learning_rate = need_double(key, v);
    else if (key == "pretrain.momentum") c.pretrain.momentum = need_double(key, v);
    else if (key == "stream.kind") {
      if (v == "single") c.stream.kind = StreamKind::Single;
      else if (v == "mixed") c.stream.kind = StreamKind::Mixed;
      else if (v == "timeseries") c.stream.kind = StreamKind::TimeSeries;
      else throw ConfigError(key, "expected single, mixed or timeseries");
    } else if (key == "stream.kappa") c.stream.kappa = need_double(key, v);
    else if (key == "stream.source") c.stream.source = need_int<std::size_t>(key, v);
    else if (key == "auto.lambda1") a.lambda1 = need_double(key, v);
    else if (key == "auto.lambda2") a.lambda2 = need_double(key, v);
    else if (key == "auto.phi") a.phi = need_double(key, v);
    else if (key == "auto.iters_T") a.iters_T = need_int<std::size_t>(key, v);
    else if (key == "auto.score") {
      const double t = a.score.temperature;
      a.score = ScoreKind::parse(v);
      a.score.temperature = t;
    } else if (key == "auto.energy_temperature") {
      a.score.temperature = need_double(key, v);
      if (!(a.score.temperature > 0.0)) throw ConfigError(key, "temperature must be positive");
    } else if (key == "auto.lambda2_decay") a.lambda2_decay = Lambda2Decay::parse(v);
    else if (key == "auto.use_id_loss") a.use_id_loss = need_bool(key, v);
    else if (key == "auto.k1") a.filter.k1 = need_double(key, v);
    else if (key == "auto.k2") a.filter.k2 = need_double(key, v);
    else if (key == "auto.stats_subsample_n") a.filter.stats_subsample_n = need_int<std::size_t>(key, v);
    else if (key == "auto.margin_literal_m0") a.filter.margin_literal_m0 = need_bool(key, v);
    else if (key == "auto.memory_mode") a.memory.mode = parse_memory_mode(v);
    else if (key == "auto.id_loss_reduction") a.memory.reduction = parse_id_loss_reduction(v);
    else if (key == "auto.memory_seed") a.memory.seed = need_int<std::uint64_t>(key, v);
    else if (key == "sgd.lr") a.learning_rate = need_double(key, v);
    else if (key == "sgd.weight_decay") a.weight_decay = need_double(key, v);
    else if (key == "sgd.momentum") a.momentum = need_double(key, v);
    else if (key == "sgd.trainable_groups") a.trainable_groups = parse_groups(v);
    else if (key == "output.dir") c.output.dir = std::string(v);
    else if (key == "output.checkpoint") c.output.checkpoint = std::string(v);
    else if (key == "output.plot") c.output.plot = need_bool(key, v);
    else throw ConfigError(key, "unknown configuration key");
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(key, e.what());
  }
}

/// Checks cross-field consistency after all keys are applied.
inline void validate(const RunConfig& c) {
  try {
    if (c.files.train_file.empty()) {
      c.scenario.validate();
      if (c.scenario.ood_sources.empty()) throw ConfigError("scenario.ood", "at least one OOD source is required");
    } else if (c.files.test_id_file.empty() || c.files.ood_files.empty()) {
      throw ConfigError("scenario.train_file", "file-based scenarios also need test_id_file and ood_files");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("scenario", e.what());
  }
  if (!(c.stream.kappa >= 0.0 && c.stream.kappa < 1.0)) throw ConfigError("stream.kappa", "must lie in [0, 1)");
  if (c.pretrain.batch_size == 0) throw ConfigError("pretrain.batch_size", "must be positive");
  if (!(c.pretrain.learning_rate > 0.0)) throw ConfigError("pretrain.lr", "must be positive");
  if (!(c.autocfg.learning_rate > 0.0)) throw ConfigError("sgd.lr", "must be positive");
  if (c.autocfg.lambda1 < 0.0) throw ConfigError("auto.lambda1", "must be nonnegative");
  if (c.autocfg.lambda2 < 0.0) throw ConfigError("auto.lambda2", "must be nonnegative");
  if (c.autocfg.filter.k1 < 0.0) throw ConfigError("auto.k1", "must be nonnegative");
  if (c.autocfg.filter.k2 < 0.0) throw ConfigError("auto.k2", "must be nonnegative");
}

/// Parses a config file body. '#' starts a comment line. At least one
/// scenario.* key is required; every other key falls back to its default.
inline RunConfig parse_config(std::string_view body) {
  RunConfig c;
  std::set<std::string> seen;
  bool has_scenario = false;
  std::size_t lineno = 0;
  for (auto raw : text::split(body, '\n')) {
    ++lineno;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(lineno, "expected key=value");
    const std::string key(text::trim(line.substr(0, eq)));
    if (!seen.insert(key).second) throw ConfigError(key, "key given twice");
    if (key.starts_with("scenario.")) has_scenario = true;
    apply_setting(c, key, line.substr(eq + 1));
  }
  if (!has_scenario) throw ConfigError("scenario", "missing required section (no scenario.* keys)");
  if (!seen.contains("scenario.means") && !seen.contains("scenario.mean_radius") &&
      (seen.contains("scenario.classes") || seen.contains("scenario.dim")))
    c.scenario.class_means = data::circle_means(c.scenario.classes, c.scenario.dim, 1.0);
  validate(c);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace auto_ood::experiment
