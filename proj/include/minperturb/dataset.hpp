#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "minperturb/core.hpp"

namespace minperturb {

struct LabeledSample {
  Vector point;
  ClassIndex label = 0;
};

struct Dataset {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<LabeledSample> samples;

  std::size_t size() const { return samples.size(); }
  std::size_t dim() const { return samples.empty() ? 0 : std::size_t(samples.front().point.size()); }
  std::size_t num_labels() const;
};

struct DatasetOptions {
  std::size_t dim = 2;          // two-gaussians only; the others are planar
  std::size_t num_classes = 3;  // grid-multiclass only
};

// Synthetic generators:
//   two-gaussians    N(-2 e0, 0.5^2 I) vs N(+2 e0, 0.5^2 I), balanced
//   two-moons        interleaved half circles, radius 1, noise sd 0.1
//   rings            class 0 with |x| in [0, 1), class 1 with |x| in (2, 3]
//   grid-multiclass  one N(c_k, 0.6^2 I) blob per class, centres on a grid of
//                    pitch 3
// Regeneration from (name, size, seed) is bit-identical on one platform.
Dataset generate_dataset(const std::string& name, std::size_t size, std::uint64_t seed,
                         const DatasetOptions& options = {});

inline constexpr double kRingInner = 1.0;
inline constexpr double kRingOuter = 2.0;

// CSV with header x_0,...,x_{d-1},label.
void write_dataset_csv(std::ostream& out, const Dataset& data);
Dataset read_dataset_csv(std::istream& in, const std::string& name = "csv");

}  // namespace minperturb
