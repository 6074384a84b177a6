#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "minperturb/attacks.hpp"
#include "minperturb/classifier.hpp"

namespace minperturb {

struct GammaPoint {
  double gamma = 0.0;
  double fooled_fraction = 0.0;
};

struct DiagnosticsReport {
  std::size_t total = 0;
  std::size_t successes = 0;
  double fooling_rate = 0.0;
  // Norm statistics cover successful results only; they are 0 when none succeeded.
  double median_l2 = 0.0;
  double mean_l2 = 0.0;
  double median_linf = 0.0;
  double mean_grads = 0.0;
  std::vector<double> cosine_values;
  std::vector<GammaPoint> gamma_curve;
};

struct CurvatureReport {
  double grad_norm = 0.0;
  double hessian_spectral_norm = 0.0;
  double normalized_curvature = 0.0;
  struct PerPoint {
    double grad_norm = 0.0;
    double hessian_spectral_norm = 0.0;
    double normalized_curvature = 0.0;
  };
  std::vector<PerPoint> per_point;
};

void to_json(nlohmann::json& j, const DiagnosticsReport& r);
void to_json(nlohmann::json& j, const CurvatureReport& r);

double median(std::vector<double> values);

// Cosine between r and the boundary normal at the line-searched boundary
// point x0 + gamma r. The normal is oriented from the original region into
// the adversarial one, so an optimal perturbation scores +1. Binary normal:
// grad F; multi-class: grad f_adv - grad f_orig with adv the label at the
// just-fooling gamma.
double cosine_alignment(const Vector& x0, const Vector& r, const Classifier& clf,
                        std::size_t line_search_iters = 25, double grad_tolerance = 1e-12);

// For each gamma, the fraction of pairs with label(x0 + gamma r) != label(x0).
std::vector<GammaPoint> gamma_fooling_curve(const std::vector<std::pair<Vector, Vector>>& samples,
                                            const Classifier& clf, const std::vector<double>& gammas);

// Evenly spaced grid start, start+step, ..., up to stop (inclusive, rounded).
std::vector<double> gamma_grid(double start, double stop, double step);

DiagnosticsReport aggregate(const std::vector<AttackResult>& results);

// Scalar whose curvature is measured: F for binary models, otherwise the
// margin f_top - f_second with both classes fixed at the reference point.
struct MarginFunction {
  const Classifier& clf;
  ClassIndex top = 0;
  ClassIndex second = 0;

  MarginFunction(const Classifier& c, const Vector& at);
  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
};

// (grad g(x + h v) - grad g(x - h v)) / 2h for the margin g at x. A non-unit
// v is normalized first.
Vector hessian_vector_product(const Classifier& clf, const Vector& x, const Vector& v, double h = 1e-4);

// Power iteration on the HVP operator from a seeded start vector; returns
// the dominant absolute eigenvalue estimate.
double hessian_spectral_norm(const Classifier& clf, const Vector& x, std::size_t iters = 50, double h = 1e-4,
                             std::uint64_t seed = 0);

// |hessian|_2 / (|grad g|_2 + eps).
double normalized_curvature(const Classifier& clf, const Vector& x, double eps = 1e-8, std::size_t iters = 50,
                            double h = 1e-4, std::uint64_t seed = 0);

CurvatureReport curvature_report(const Classifier& clf, const std::vector<Vector>& points, double eps = 1e-8,
                                 std::size_t iters = 50, double h = 1e-4, std::uint64_t seed = 0);

struct CosineRow {
  std::string attack;
  std::size_t sample_id = 0;
  double cosine = 0.0;
};

struct GammaRow {
  std::string attack;
  GammaPoint point;
};

// Header lines: attack,sample_id,cosine / attack,gamma,fooled_fraction /
// sample_id,grad_norm,hessian_spectral_norm,normalized_curvature.
void write_cosine_csv(std::ostream& out, const std::vector<CosineRow>& rows);
void write_gamma_csv(std::ostream& out, const std::vector<GammaRow>& rows);
void write_curvature_csv(std::ostream& out, const CurvatureReport& report);

}  // namespace minperturb
