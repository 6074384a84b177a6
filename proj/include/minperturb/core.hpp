#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace minperturb {

// Points, perturbations and gradients all live in input space.
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using ClassIndex = std::size_t;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad construction arguments or configuration values.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// An operation was called outside its documented domain.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// A linearization direction whose norm is at or below the tolerance.
class DegenerateGradient : public Error {
 public:
  using Error::Error;
};

// A search oracle found nothing inside its scan region.
class NotFound : public Error {
 public:
  using Error::Error;
};

inline double linf_norm(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

inline double l1_norm(const Vector& v) { return v.cwiseAbs().sum(); }

// Component-wise sign with sign(0) = 0.
inline Vector sign_of(const Vector& v) {
  return v.unaryExpr([](double a) { return double((a > 0.0) - (a < 0.0)); });
}

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace minperturb
