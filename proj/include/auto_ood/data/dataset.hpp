#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "auto_ood/errors.hpp"
#include "auto_ood/text.hpp"

namespace auto_ood::data {

/// Label used for samples without an ID class.
inline constexpr int kOodLabel = -1;

struct Sample {
  std::vector<double> x;
  int label = kOodLabel;

  bool is_ood() const noexcept { return label < 0; }
  friend bool operator==(const Sample&, const Sample&) = default;
};

/// A set of feature vectors of uniform dimension.
struct Dataset {
  std::size_t dim = 0;
  std::vector<Sample> samples;

  Dataset() = default;
  explicit Dataset(std::size_t d) : dim(d) {}

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }

  void add(std::vector<double> x, int label) {
    if (x.size() != dim)
      throw ArgumentError("sample has dimension " + std::to_string(x.size()) + ", dataset has " +
                          std::to_string(dim));
    samples.push_back({std::move(x), label});
  }

  /// 1 + largest ID label (0 when the set is all OOD).
  std::size_t num_classes() const {
    int m = -1;
    for (const auto& s : samples) m = std::max(m, s.label);
    return static_cast<std::size_t>(m + 1);
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

inline constexpr std::string_view kDatasetMagic = "auto-ood-dataset v1";

// Format:
//   auto-ood-dataset v1,dim=<d>
//   label,f1,...,fd          (label -1 marks OOD)
inline void write_dataset(std::ostream& out, const Dataset& ds) {
  out << kDatasetMagic << ",dim=" << ds.dim << '\n';
  for (const auto& s : ds.samples) {
    out << s.label;
    for (double v : s.x) out << ',' << text::format_double(v);
    out << '\n';
  }
}

inline Dataset read_dataset(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw ParseError(1, "empty dataset file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto head = text::split(line, ',');
  if (head.size() != 2 || head[0] != kDatasetMagic || !head[1].starts_with("dim="))
    throw ParseError(1, "expected header '" + std::string(kDatasetMagic) + ",dim=<d>'");
  const auto dim = text::parse_int<std::size_t>(head[1].substr(4));
  if (!dim || *dim == 0) throw ParseError(1, "invalid dimension in header");

  Dataset ds(*dim);
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = text::split(line, ',');
    if (fields.size() != *dim + 1)
      throw ParseError(lineno, "expected " + std::to_string(*dim + 1) + " fields, found " +
                                   std::to_string(fields.size()));
    const auto label = text::parse_int<int>(fields[0]);
    if (!label || *label < kOodLabel) throw ParseError(lineno, "invalid label '" + std::string(fields[0]) + "'");
    std::vector<double> x(*dim);
    for (std::size_t i = 0; i < *dim; ++i) {
      const auto v = text::parse_double(fields[i + 1]);
      if (!v || !std::isfinite(*v))
        throw ParseError(lineno, "invalid feature value '" + std::string(fields[i + 1]) + "'");
      x[i] = *v;
    }
    ds.samples.push_back({std::move(x), *label});
  }
  return ds;
}

inline void save_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write dataset file " + path);
  write_dataset(out, ds);
  if (!out) throw ArgumentError("failed writing dataset file " + path);
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot read dataset file " + path);
  return read_dataset(in);
}

}  // namespace auto_ood::data
