#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "auto_ood/data/dataset.hpp"
#include "auto_ood/random.hpp"

namespace auto_ood::data {

/// splitmix64 finalizer; derives independent sub-seeds from one seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct ShiftedGaussian {
  std::vector<double> mean;
  double spread = 1.0;
  friend bool operator==(const ShiftedGaussian&, const ShiftedGaussian&) = default;
};

struct UniformBox {
  std::vector<double> lo;
  std::vector<double> hi;
  friend bool operator==(const UniformBox&, const UniformBox&) = default;
};

/// Shell around the origin: radius uniform in [radius - width/2, radius + width/2],
/// direction uniform on the sphere.
struct Ring {
  double radius = 5.0;
  double width = 1.0;
  friend bool operator==(const Ring&, const Ring&) = default;
};

using OodShape = std::variant<ShiftedGaussian, UniformBox, Ring>;

struct OodSource {
  OodShape shape;
  std::size_t n = 0;
  friend bool operator==(const OodSource&, const OodSource&) = default;
};

/// Gaussian-mixture ID classes with a shared isotropic spread, plus any
/// number of OOD families.
struct ScenarioSpec {
  std::size_t dim = 2;
  std::size_t classes = 3;
  std::vector<std::vector<double>> class_means;
  double spread = 0.3;
  std::vector<OodSource> ood_sources;
  std::size_t train_n = 600;
  std::size_t test_id_n = 1000;
  std::uint64_t seed = 0;

  void validate() const {
    if (dim < 1) throw ArgumentError("scenario dim must be >= 1");
    if (classes < 2) throw ArgumentError("scenario needs at least 2 classes");
    if (class_means.size() != classes)
      throw ArgumentError("expected " + std::to_string(classes) + " class means, found " +
                          std::to_string(class_means.size()));
    for (const auto& m : class_means)
      if (m.size() != dim) throw ArgumentError("class mean has the wrong dimension");
    if (!(spread >= 0.0)) throw ArgumentError("ID spread must be nonnegative");
    if (train_n < 1 || test_id_n < 1) throw ArgumentError("sample counts must be >= 1");
    for (const auto& src : ood_sources) {
      if (src.n < 1) throw ArgumentError("OOD source count must be >= 1");
      std::visit(
          [this](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ShiftedGaussian>) {
              if (s.mean.size() != dim) throw ArgumentError("OOD gaussian mean has the wrong dimension");
              if (!(s.spread > 0.0)) throw ArgumentError("OOD gaussian spread must be positive");
            } else if constexpr (std::is_same_v<T, UniformBox>) {
              if (s.lo.size() != dim || s.hi.size() != dim) throw ArgumentError("OOD box bounds have the wrong dimension");
              for (std::size_t i = 0; i < dim; ++i)
                if (!(s.lo[i] < s.hi[i])) throw ArgumentError("OOD box needs lo < hi");
            } else {
              if (!(s.radius > 0.0) || !(s.width > 0.0) || s.width > 2.0 * s.radius)
                throw ArgumentError("OOD ring needs radius > 0 and 0 < width <= 2 radius");
            }
          },
          src.shape);
    }
  }

  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

struct Scenario {
  Dataset train;
  Dataset test_id;
  std::vector<Dataset> ood;
};

/// C means evenly spaced on a circle of the given radius in the first two
/// coordinates (remaining coordinates zero).
inline std::vector<std::vector<double>> circle_means(std::size_t classes, std::size_t dim, double radius = 1.0) {
  std::vector<std::vector<double>> means;
  for (std::size_t c = 0; c < classes; ++c) {
    std::vector<double> m(dim, 0.0);
    const double a = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(classes);
    m[0] = radius * std::cos(a);
    if (dim > 1) m[1] = radius * std::sin(a);
    means.push_back(std::move(m));
  }
  return means;
}

namespace detail {

inline Dataset draw_id(const ScenarioSpec& spec, std::size_t n, Rng& rng) {
  Dataset ds(spec.dim);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % spec.classes;
    std::vector<double> x(spec.dim);
    for (std::size_t j = 0; j < spec.dim; ++j) x[j] = spec.class_means[c][j] + spec.spread * standard_normal(rng);
    ds.samples.push_back({std::move(x), static_cast<int>(c)});
  }
  return ds;
}

inline std::vector<double> draw_ood(const OodShape& shape, std::size_t dim, Rng& rng) {
  std::vector<double> x(dim);
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ShiftedGaussian>) {
          for (std::size_t j = 0; j < dim; ++j) x[j] = s.mean[j] + s.spread * standard_normal(rng);
        } else if constexpr (std::is_same_v<T, UniformBox>) {
          for (std::size_t j = 0; j < dim; ++j) x[j] = uniform(rng, s.lo[j], s.hi[j]);
        } else {
          double norm = 0.0;
          do {
            norm = 0.0;
            for (double& v : x) {
              v = standard_normal(rng);
              norm += v * v;
            }
            norm = std::sqrt(norm);
          } while (norm == 0.0);
          const double r = s.radius + s.width * (uniform01(rng) - 0.5);
          for (double& v : x) v *= r / norm;
        }
      },
      shape);
  return x;
}

}  // namespace detail

/// Draws train, ID test and one set per OOD source. Each part has its own
/// seed derived from spec.seed, so all parts are independent and
/// reproducible. ID labels cycle through the classes (balanced sets).
inline Scenario make_scenario(const ScenarioSpec& spec) {
  spec.validate();
  Scenario sc;
  Rng train_rng(derive_seed(spec.seed, 0));
  Rng test_rng(derive_seed(spec.seed, 1));
  sc.train = detail::draw_id(spec, spec.train_n, train_rng);
  sc.test_id = detail::draw_id(spec, spec.test_id_n, test_rng);
  for (std::size_t k = 0; k < spec.ood_sources.size(); ++k) {
    Rng rng(derive_seed(spec.seed, 100 + k));
    Dataset ds(spec.dim);
    for (std::size_t i = 0; i < spec.ood_sources[k].n; ++i)
      ds.samples.push_back({detail::draw_ood(spec.ood_sources[k].shape, spec.dim, rng), kOodLabel});
    sc.ood.push_back(std::move(ds));
  }
  return sc;
}

}  // namespace auto_ood::data
