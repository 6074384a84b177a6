#pragma once

#include <initializer_list>
#include <random>

#include "minperturb/core.hpp"

namespace testing {

inline minperturb::Vector vec(std::initializer_list<double> v) {
  minperturb::Vector out(Eigen::Index(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline minperturb::Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  minperturb::Matrix out(Eigen::Index(rows.size()), Eigen::Index(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double x : row) out(r, c++) = x;
    ++r;
  }
  return out;
}

inline minperturb::Vector gaussian(std::mt19937_64& rng, Eigen::Index d, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  minperturb::Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = n(rng);
  return v;
}

inline double rel_err(const minperturb::Vector& a, const minperturb::Vector& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

}  // namespace testing
