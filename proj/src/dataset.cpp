#include "minperturb/dataset.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "minperturb/format.hpp"

namespace minperturb {

std::size_t Dataset::num_labels() const {
  std::size_t top = 0;
  for (const auto& s : samples) top = std::max(top, s.label + 1);
  return top;
}

namespace {

Vector point2(double a, double b) {
  Vector p(2);
  p << a, b;
  return p;
}

}  // namespace

Dataset generate_dataset(const std::string& name, std::size_t size, std::uint64_t seed,
                         const DatasetOptions& options) {
  if (size == 0) throw InvalidArgument("dataset size must be positive");
  Dataset data{name, seed, {}};
  data.samples.reserve(size);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr double pi = std::numbers::pi;

  if (name == "two-gaussians") {
    if (options.dim == 0) throw InvalidArgument("two-gaussians: dim must be positive");
    for (std::size_t i = 0; i < size; ++i) {
      const ClassIndex label = i % 2;
      Vector p(Eigen::Index(options.dim));
      for (Eigen::Index j = 0; j < p.size(); ++j) p[j] = 0.5 * normal(rng);
      p[0] += label == 0 ? -2.0 : 2.0;
      data.samples.push_back({std::move(p), label});
    }
  } else if (name == "two-moons") {
    for (std::size_t i = 0; i < size; ++i) {
      const ClassIndex label = i % 2;
      const double t = pi * unit(rng);
      Vector p = label == 0 ? point2(std::cos(t), std::sin(t)) : point2(1.0 - std::cos(t), 0.5 - std::sin(t));
      p[0] += 0.1 * normal(rng);
      p[1] += 0.1 * normal(rng);
      data.samples.push_back({std::move(p), label});
    }
  } else if (name == "rings") {
    for (std::size_t i = 0; i < size; ++i) {
      const ClassIndex label = i % 2;
      const double t = 2.0 * pi * unit(rng);
      // Radii drawn from the open/half-open intervals documented above.
      double radius = 0.0;
      if (label == 0) {
        radius = kRingInner * unit(rng);
      } else {
        do radius = kRingOuter + (3.0 - kRingOuter) * (1.0 - unit(rng));
        while (!(radius > kRingOuter));
      }
      data.samples.push_back({point2(radius * std::cos(t), radius * std::sin(t)), label});
    }
  } else if (name == "grid-multiclass") {
    const std::size_t C = options.num_classes;
    if (C < 2) throw InvalidArgument("grid-multiclass: needs at least 2 classes");
    const auto side = std::size_t(std::ceil(std::sqrt(double(C))));
    std::vector<Vector> centres;
    Vector mean = Vector::Zero(2);
    for (std::size_t k = 0; k < C; ++k) {
      centres.push_back(point2(3.0 * double(k % side), 3.0 * double(k / side)));
      mean += centres.back();
    }
    mean /= double(C);
    for (auto& c : centres) c -= mean;
    for (std::size_t i = 0; i < size; ++i) {
      const ClassIndex label = i % C;
      Vector p = centres[label];
      p[0] += 0.6 * normal(rng);
      p[1] += 0.6 * normal(rng);
      data.samples.push_back({std::move(p), label});
    }
  } else {
    throw InvalidArgument("unknown dataset '" + name + "'");
  }
  return data;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  const std::size_t d = data.dim();
  for (std::size_t j = 0; j < d; ++j) out << "x_" << j << ',';
  out << "label\n";
  for (const auto& s : data.samples) {
    for (Eigen::Index j = 0; j < s.point.size(); ++j) out << format_double(s.point[j]) << ',';
    out << s.label << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in, const std::string& name) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("dataset csv: missing header");
  std::size_t columns = 1;
  for (char ch : line) columns += ch == ',';
  if (columns < 2 || line.rfind("label") == std::string::npos)
    throw InvalidArgument("dataset csv: header must be x_0..x_{d-1},label");
  const std::size_t d = columns - 1;

  Dataset data{name, 0, {}};
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    Vector p = Vector::Zero(Eigen::Index(d));
    std::size_t j = 0;
    long long label = -1;
    while (std::getline(cells, cell, ',')) {
      try {
        if (j < d) p[Eigen::Index(j)] = std::stod(cell);
        else if (j == d) label = std::stoll(cell);
      } catch (const std::exception&) {
        throw InvalidArgument("dataset csv: bad number on row " + std::to_string(row));
      }
      ++j;
    }
    if (j != columns || label < 0)
      throw InvalidArgument("dataset csv: malformed row " + std::to_string(row));
    if (!p.allFinite()) throw InvalidArgument("dataset csv: non-finite value on row " + std::to_string(row));
    data.samples.push_back({std::move(p), ClassIndex(label)});
  }
  return data;
}

}  // namespace minperturb
