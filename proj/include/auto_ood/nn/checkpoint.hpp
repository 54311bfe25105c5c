#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "auto_ood/nn/mlp.hpp"
#include "auto_ood/text.hpp"

namespace auto_ood::nn {

inline constexpr std::string_view kCheckpointMagic = "auto-mlp";
inline constexpr std::string_view kCheckpointVersion = "v1";

// Text checkpoint:
//   auto-mlp v1
//   <layer dims>
//   <group label per layer>
//   layer<k>.weight <rows>x<cols> <values...>
//   layer<k>.bias <n> <values...>
inline void write_checkpoint(std::ostream& out, const MlpModel& model) {
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  const auto& dims = model.layer_dims();
  for (std::size_t i = 0; i < dims.size(); ++i) out << (i ? " " : "") << dims[i];
  out << '\n';
  const auto groups = model.group_labels();
  for (std::size_t i = 0; i < groups.size(); ++i) out << (i ? " " : "") << groups[i];
  out << '\n';
  for (std::size_t k = 0; k < model.num_layers(); ++k) {
    const auto& l = model.layer(k);
    out << "layer" << k << ".weight " << l.weight.rows() << 'x' << l.weight.cols();
    for (double v : l.weight.values()) out << ' ' << text::format_double(v);
    out << '\n';
    out << "layer" << k << ".bias " << l.bias.size();
    for (double v : l.bias.values()) out << ' ' << text::format_double(v);
    out << '\n';
  }
}

namespace detail {

inline std::string read_required_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) throw CheckpointFormatError(std::string("checkpoint truncated: missing ") + what);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline void read_tensor_line(std::istream& in, const std::string& name, std::size_t rows,
                             std::size_t cols, bool is_matrix, Tensor& dst) {
  const auto line = read_required_line(in, name.c_str());
  const auto tok = text::split_ws(line);
  if (tok.size() < 2 || tok[0] != name)
    throw CheckpointFormatError("expected tensor '" + name + "'");
  std::string expected_shape =
      is_matrix ? std::to_string(rows) + "x" + std::to_string(cols) : std::to_string(rows);
  if (tok[1] != expected_shape)
    throw CheckpointDimensionError("tensor '" + name + "' has shape " + std::string(tok[1]) +
                                   ", layer dims require " + expected_shape);
  const std::size_t n = rows * cols;
  if (tok.size() != n + 2)
    throw CheckpointFormatError("tensor '" + name + "' has " + std::to_string(tok.size() - 2) +
                                " values, expected " + std::to_string(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = text::parse_double(tok[i + 2]);
    if (!v || !std::isfinite(*v))
      throw CheckpointFormatError("tensor '" + name + "' has malformed value '" + std::string(tok[i + 2]) + "'");
    dst[i] = *v;
  }
}

}  // namespace detail

inline MlpModel read_checkpoint(std::istream& in) {
  const std::string header_line = detail::read_required_line(in, "header");
  const auto header = text::split_ws(header_line);
  if (header.size() != 2 || header[0] != kCheckpointMagic)
    throw CheckpointFormatError("not an auto-mlp checkpoint");
  if (header[1] != kCheckpointVersion)
    throw CheckpointVersionError("unsupported checkpoint version '" + std::string(header[1]) + "'");

  std::vector<std::size_t> dims;
  const std::string dims_line = detail::read_required_line(in, "layer dims");
  for (auto t : text::split_ws(dims_line)) {
    const auto d = text::parse_int<std::size_t>(t);
    if (!d || *d == 0) throw CheckpointFormatError("malformed layer dimension '" + std::string(t) + "'");
    dims.push_back(*d);
  }
  if (dims.size() < 2) throw CheckpointDimensionError("checkpoint needs at least two layer dims");

  std::vector<std::string> groups;
  const std::string groups_line = detail::read_required_line(in, "group labels");
  for (auto t : text::split_ws(groups_line)) groups.emplace_back(t);
  if (groups.size() != dims.size() - 1)
    throw CheckpointDimensionError("expected " + std::to_string(dims.size() - 1) + " group labels, found " +
                                   std::to_string(groups.size()));

  MlpModel model(dims, groups);
  for (std::size_t k = 0; k < model.num_layers(); ++k) {
    auto& l = model.layer(k);
    const auto prefix = "layer" + std::to_string(k);
    detail::read_tensor_line(in, prefix + ".weight", dims[k + 1], dims[k], true, l.weight);
    detail::read_tensor_line(in, prefix + ".bias", dims[k + 1], 1, false, l.bias);
  }
  std::string rest;
  while (std::getline(in, rest))
    if (!text::trim(rest).empty()) throw CheckpointFormatError("unexpected trailing content");
  return model;
}

inline void save_checkpoint(const MlpModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write checkpoint " + path);
  write_checkpoint(out, model);
  if (!out) throw ArgumentError("failed writing checkpoint " + path);
}

inline MlpModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot read checkpoint " + path);
  return read_checkpoint(in);
}

}  // namespace auto_ood::nn
