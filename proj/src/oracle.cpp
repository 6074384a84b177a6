#include "minperturb/oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

namespace minperturb {

std::string_view to_string(OracleMethod m) {
  switch (m) {
    case OracleMethod::ClosedForm: return "closed-form";
    case OracleMethod::ParametricScan: return "parametric-scan";
    case OracleMethod::GridScan: return "grid-scan";
  }
  return "unknown";
}

namespace {

double norm_in(const Vector& r, NormMode mode) { return mode == NormMode::L2 ? r.norm() : linf_norm(r); }

// Displacement from x0 onto {f + w.d = 0} plus `margin` beyond it, minimal in
// the given norm; f < 0 on the x0 side.
Vector hyperplane_displacement(double f, const Vector& w, NormMode mode, double margin) {
  if (mode == NormMode::L2) {
    const double nw = w.norm();
    return ((-f / nw + margin) / nw) * w;
  }
  return (-f / l1_norm(w) + margin) * sign_of(w);
}

}  // namespace

OracleSolution affine_binary_oracle(const Vector& x0, const Vector& w, double b, const OracleOptions& opt) {
  if (w.size() != x0.size()) throw InvalidArgument("affine_binary_oracle: dimension mismatch");
  if (w.isZero(0.0)) throw InvalidArgument("affine_binary_oracle: zero weight vector");
  const double F = w.dot(x0) + b;
  OracleSolution sol;
  sol.method = OracleMethod::ClosedForm;
  if (F == 0.0) {
    sol.perturbation = Vector::Zero(x0.size());
    return sol;
  }
  const double side = F > 0.0 ? 1.0 : -1.0;
  // Adversarial score is -side * F.
  sol.perturbation = hyperplane_displacement(-side * F, -side * w, opt.norm, crossing_distance(x0, opt.boundary_margin));
  sol.norm = norm_in(sol.perturbation, opt.norm);
  const double F_adv = w.dot(x0 + sol.perturbation) + b;
  if (opt.boundary_margin > 0.0 && (F_adv > 0.0) == (F > 0.0)) throw NotFound("affine_binary_oracle: closed form failed to cross the boundary");
  return sol;
}

OracleSolution affine_multiclass_oracle(const Vector& x0, const Matrix& W, const Vector& b,
                                        std::optional<ClassIndex> target, const OracleOptions& opt) {
  const AffineMulticlass clf(W, b);
  if (std::size_t(x0.size()) != clf.input_dim()) throw InvalidArgument("affine_multiclass_oracle: dimension mismatch");
  if (has_argmax_tie(clf, x0)) throw PreconditionError("affine_multiclass_oracle: tied top score at x0");
  const auto o = Eigen::Index(predicted_label(clf, x0));
  if (target && (*target >= clf.num_classes() || Eigen::Index(*target) == o))
    throw InvalidArgument("affine_multiclass_oracle: invalid target");

  const Vector z = clf.logits(x0);
  Eigen::Index best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < W.rows(); ++k) {
    if (k == o || (target && Eigen::Index(*target) != k)) continue;
    const Vector w = (W.row(k) - W.row(o)).transpose();
    const double nw = opt.norm == NormMode::L2 ? w.norm() : l1_norm(w);
    if (nw == 0.0) continue;
    const double dist = std::abs(z[k] - z[o]) / nw;
    if (dist < best_dist) {
      best_dist = dist;
      best = k;
    }
  }
  if (best < 0) throw NotFound("affine_multiclass_oracle: no separable class");

  const Vector w = (W.row(best) - W.row(o)).transpose();
  OracleSolution sol;
  sol.method = OracleMethod::ClosedForm;
  sol.perturbation = hyperplane_displacement(z[best] - z[o], w, opt.norm, crossing_distance(x0, opt.boundary_margin));
  sol.norm = norm_in(sol.perturbation, opt.norm);
  if (opt.boundary_margin == 0.0 || is_adversarial(clf, x0 + sol.perturbation, ClassIndex(o), target)) return sol;

  if (x0.size() == 2 && opt.norm == NormMode::L2 && !target) {
    GridScanOptions grid;
    grid.boundary_margin = opt.boundary_margin;
    return grid_scan_oracle(x0, clf, std::max(1.0, 4.0 * best_dist), grid);
  }
  throw NotFound("affine_multiclass_oracle: pairwise solution is not the winning class");
}

// ---------------------------------------------------------------------------

namespace {

Vector ellipse_point(const Matrix& axes, double theta) {
  Vector u(2);
  u << std::cos(theta), std::sin(theta);
  return axes * u;
}

double two_pi_over(std::size_t n) { return 2.0 * std::numbers::pi / double(n); }

}  // namespace

std::size_t nearest_boundary_sample_serial(const Vector& x0, const Matrix& axes, std::size_t samples) {
  const double step = two_pi_over(samples);
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < samples; ++i) {
    const double d2 = (ellipse_point(axes, step * double(i)) - x0).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = i;
    }
  }
  return best;
}

std::size_t nearest_boundary_sample(const Vector& x0, const Matrix& axes, std::size_t samples) {
  const double step = two_pi_over(samples);
  const auto n = static_cast<long long>(samples);
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
#pragma omp parallel
  {
    std::size_t local = 0;
    double local_d2 = std::numeric_limits<double>::infinity();
#pragma omp for schedule(static) nowait
    for (long long i = 0; i < n; ++i) {
      const double d2 = (ellipse_point(axes, step * double(i)) - x0).squaredNorm();
      if (d2 < local_d2) {
        local_d2 = d2;
        local = std::size_t(i);
      }
    }
#pragma omp critical(minperturb_nearest_sample)
    if (local_d2 < best_d2 || (local_d2 == best_d2 && local < best)) {
      best_d2 = local_d2;
      best = local;
    }
  }
  return best;
}

OracleSolution quadric_oracle(const Vector& x0, const Matrix& Q, double c, const QuadricScanOptions& opt) {
  if (x0.size() != 2 || Q.rows() != 2 || Q.cols() != 2) throw InvalidArgument("quadric_oracle: planar models only");
  if (opt.samples < 3) throw InvalidArgument("quadric_oracle: too few samples");
  const QuadricBinary clf(Q, c);
  const double F0 = clf.logits(x0)[0];
  if (F0 == 0.0) throw PreconditionError("quadric_oracle: x0 lies on the boundary");

  Eigen::SelfAdjointEigenSolver<Matrix> eig(Q);
  const Vector lambda = eig.eigenvalues();
  if (!(lambda.minCoeff() > 0.0)) throw InvalidArgument("quadric_oracle: Q must be positive definite");
  const Matrix axes = eig.eigenvectors() * (c / lambda.array()).sqrt().matrix().asDiagonal();

  const std::size_t i0 = nearest_boundary_sample(x0, axes, opt.samples);
  const double step = two_pi_over(opt.samples);

  // The foot of the perpendicular is a root of (e(t) - x0) . e'(t). Bisecting
  // that residual resolves the angle to rounding, where minimizing the
  // distance itself would stall near sqrt(eps).
  auto residual = [&](double t) {
    Vector de(2);
    de << -std::sin(t), std::cos(t);
    return (ellipse_point(axes, t) - x0).dot(axes * de);
  };
  double lo = step * double(i0) - step;
  double hi = step * double(i0) + step;
  double r_lo = residual(lo);
  if ((r_lo < 0.0) == (residual(hi) < 0.0)) {
    lo = hi = step * double(i0);
  }
  while (hi - lo > opt.angle_tolerance) {
    const double mid = 0.5 * (lo + hi);
    const double r_mid = residual(mid);
    if (mid <= lo || mid >= hi) break;
    if ((r_mid < 0.0) == (r_lo < 0.0)) {
      lo = mid;
      r_lo = r_mid;
    } else {
      hi = mid;
    }
  }
  const Vector foot = ellipse_point(axes, 0.5 * (lo + hi));
  const Vector to_foot = foot - x0;
  const double dist = to_foot.norm();

  OracleSolution sol;
  sol.method = OracleMethod::ParametricScan;
  sol.perturbation = to_foot * (1.0 + crossing_distance(x0, opt.boundary_margin) / dist);
  sol.norm = sol.perturbation.norm();
  sol.certified_gap = 2.0 * axes.colwise().norm().maxCoeff() * std::sin(0.5 * step);
  if (!is_adversarial(clf, x0 + sol.perturbation, predicted_label(clf, x0)))
    throw NotFound("quadric_oracle: refined foot point does not cross the boundary");
  return sol;
}

OracleSolution grid_scan_oracle(const Vector& x0, const Classifier& clf, double radius, const GridScanOptions& opt) {
  if (x0.size() != 2 || clf.input_dim() != 2) throw InvalidArgument("grid_scan_oracle: planar models only");
  if (!(radius > 0.0) || opt.angles == 0 || opt.radial_steps == 0)
    throw InvalidArgument("grid_scan_oracle: radius and resolution must be positive");
  const ClassIndex original = predicted_label(clf, x0);
  const double dr = radius / double(opt.radial_steps);
  const double dtheta = two_pi_over(opt.angles);
  const auto n = static_cast<long long>(opt.angles);
  std::vector<double> hit(opt.angles, std::numeric_limits<double>::infinity());

#pragma omp parallel for schedule(dynamic, 16)
  for (long long i = 0; i < n; ++i) {
    Vector u(2);
    u << std::cos(dtheta * double(i)), std::sin(dtheta * double(i));
    for (std::size_t j = 1; j <= opt.radial_steps; ++j) {
      if (!is_adversarial(clf, x0 + (dr * double(j)) * u, original)) continue;
      double lo = dr * double(j - 1);
      double hi = dr * double(j);
      for (std::size_t t = 0; t < opt.bisection_iters; ++t) {
        const double mid = 0.5 * (lo + hi);
        if (is_adversarial(clf, x0 + mid * u, original)) hi = mid;
        else lo = mid;
      }
      hit[std::size_t(i)] = hi;
      break;
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i < hit.size(); ++i)
    if (hit[i] < hit[best]) best = i;
  if (!std::isfinite(hit[best])) throw NotFound("grid_scan_oracle: no label change within radius");

  Vector u(2);
  u << std::cos(dtheta * double(best)), std::sin(dtheta * double(best));
  OracleSolution sol;
  sol.method = OracleMethod::GridScan;
  sol.perturbation = (hit[best] + crossing_distance(x0, opt.boundary_margin)) * u;
  if (!is_adversarial(clf, x0 + sol.perturbation, original)) sol.perturbation = hit[best] * u;
  sol.norm = sol.perturbation.norm();
  sol.certified_gap = dr;
  return sol;
}

OracleSolution oracle_for(const Classifier& clf, const Vector& x0, const OracleOptions& opt,
                          std::optional<ClassIndex> target, double scan_radius) {
  switch (clf.kind()) {
    case ClassifierKind::AffineBinary: {
      const auto& a = static_cast<const AffineBinary&>(clf);
      return affine_binary_oracle(x0, a.weights(), a.bias(), opt);
    }
    case ClassifierKind::AffineMulticlass: {
      const auto& a = static_cast<const AffineMulticlass&>(clf);
      return affine_multiclass_oracle(x0, a.weights(), a.bias(), target, opt);
    }
    case ClassifierKind::QuadricBinary: {
      const auto& q = static_cast<const QuadricBinary&>(clf);
      if (opt.norm != NormMode::L2) throw InvalidArgument("quadric oracle supports l2 only");
      QuadricScanOptions scan;
      scan.boundary_margin = opt.boundary_margin;
      return quadric_oracle(x0, q.form(), q.level(), scan);
    }
    case ClassifierKind::Mlp:
      break;
  }
  if (opt.norm != NormMode::L2 || target) throw InvalidArgument("grid-scan oracle supports untargeted l2 only");
  GridScanOptions grid;
  grid.boundary_margin = opt.boundary_margin;
  return grid_scan_oracle(x0, clf, scan_radius, grid);
}

}  // namespace minperturb
