#pragma once

#include <optional>
#include <string_view>

#include "minperturb/attacks.hpp"
#include "minperturb/classifier.hpp"

namespace minperturb {

enum class OracleMethod { ClosedForm, ParametricScan, GridScan };

std::string_view to_string(OracleMethod m);

// Ground-truth minimal perturbation. The perturbation ends `margin` past the
// boundary (the same crossing convention the attacks use) so that x0 + r is
// strictly misclassified; `norm` is measured in the requested norm. A zero
// margin returns the exact boundary point, which is not re-verified.
struct OracleSolution {
  Vector perturbation;
  double norm = 0.0;
  OracleMethod method = OracleMethod::ClosedForm;
  double certified_gap = 0.0;
};

struct OracleOptions {
  NormMode norm = NormMode::L2;
  double boundary_margin = kDefaultBoundaryMargin;
};

// Closed form: l2 r* = -(F/|w|^2) w, linf r* = -sign(F) (|F|/|w|_1) sign(w).
OracleSolution affine_binary_oracle(const Vector& x0, const Vector& w, double b,
                                    const OracleOptions& opt = {});

// Nearest pairwise hyperplane {f_k = f_orig}, or the single pair with the
// target. The answer is checked by a forward pass; if that fails and d == 2
// the grid scan is used instead, otherwise NotFound is thrown.
OracleSolution affine_multiclass_oracle(const Vector& x0, const Matrix& W, const Vector& b,
                                        std::optional<ClassIndex> target = std::nullopt,
                                        const OracleOptions& opt = {});

struct QuadricScanOptions {
  std::size_t samples = 100000;
  double angle_tolerance = 1e-10;
  double boundary_margin = kDefaultBoundaryMargin;
};

// Planar ellipse x^T Q x = c (Q positive definite): dense scan of the boundary
// parameterization, then bisection on the orthogonality residual in the angle.
OracleSolution quadric_oracle(const Vector& x0, const Matrix& Q, double c, const QuadricScanOptions& opt = {});

struct GridScanOptions {
  std::size_t angles = 1440;
  std::size_t radial_steps = 400;
  std::size_t bisection_iters = 60;
  double boundary_margin = kDefaultBoundaryMargin;
};

// Model-agnostic planar search: polar grid around x0 out to `radius`, first
// label change on each ray refined by bisection. certified_gap is one
// radial step. Throws NotFound when no ray leaves the original class.
OracleSolution grid_scan_oracle(const Vector& x0, const Classifier& clf, double radius,
                                const GridScanOptions& opt = {});

// Uses the closed form for affine models, the ellipse scan for planar
// quadrics and the grid scan otherwise (planar only).
OracleSolution oracle_for(const Classifier& clf, const Vector& x0, const OracleOptions& opt = {},
                          std::optional<ClassIndex> target = std::nullopt, double scan_radius = 10.0);

// Serial reference for the boundary scan inside quadric_oracle.
std::size_t nearest_boundary_sample_serial(const Vector& x0, const Matrix& axes, std::size_t samples);
std::size_t nearest_boundary_sample(const Vector& x0, const Matrix& axes, std::size_t samples);

}  // namespace minperturb
