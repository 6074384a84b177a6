#include "minperturb/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include <nlohmann/json.hpp>

#include "minperturb/format.hpp"

namespace minperturb {

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double cosine_alignment(const Vector& x0, const Vector& r, const Classifier& clf, std::size_t line_search_iters,
                        double grad_tolerance) {
  const ClassIndex original = predicted_label(clf, x0);
  const LineSearchResult ls = line_search_to_boundary(x0, r, clf, line_search_iters);
  Vector normal;
  if (clf.is_binary()) {
    const double side = clf.logits(x0)[0] > 0.0 ? 1.0 : -1.0;
    normal = -side * clf.gradient(ls.point, 0);
  } else {
    const ClassIndex adv = predicted_label(clf, ls.point);
    normal = clf.gradient(ls.point, adv) - clf.gradient(ls.point, original);
  }
  const double nn = normal.norm();
  if (nn <= grad_tolerance) throw DegenerateGradient("cosine_alignment: boundary normal vanishes");
  const double nr = r.norm();
  return std::clamp(r.dot(normal) / (nr * nn), -1.0, 1.0);
}

std::vector<double> gamma_grid(double start, double stop, double step) {
  if (!(step > 0.0) || !(stop >= start)) throw InvalidArgument("gamma grid: need step > 0 and stop >= start");
  const auto count = std::size_t(std::llround((stop - start) / step)) + 1;
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) grid[i] = start + step * double(i);
  return grid;
}

std::vector<GammaPoint> gamma_fooling_curve(const std::vector<std::pair<Vector, Vector>>& samples,
                                            const Classifier& clf, const std::vector<double>& gammas) {
  if (samples.empty()) throw InvalidArgument("gamma_fooling_curve: empty sample list");
  std::vector<ClassIndex> original(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) original[i] = predicted_label(clf, samples[i].first);

  std::vector<GammaPoint> curve;
  curve.reserve(gammas.size());
  for (double g : gammas) {
    if (!(g > 0.0 && g <= 1.0)) throw InvalidArgument("gamma_fooling_curve: gamma must lie in (0, 1]");
    std::size_t fooled = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& [x0, r] = samples[i];
      fooled += predicted_label(clf, x0 + g * r) != original[i];
    }
    curve.push_back({g, double(fooled) / double(samples.size())});
  }
  return curve;
}

DiagnosticsReport aggregate(const std::vector<AttackResult>& results) {
  if (results.empty()) throw InvalidArgument("aggregate: empty result list");
  DiagnosticsReport rep;
  rep.total = results.size();
  std::vector<double> l2;
  std::vector<double> linf;
  double grads = 0.0;
  for (const auto& r : results) {
    grads += double(r.gradient_evaluations);
    if (!r.success) continue;
    l2.push_back(r.l2_norm);
    linf.push_back(r.linf_norm);
  }
  rep.successes = l2.size();
  rep.fooling_rate = double(rep.successes) / double(rep.total);
  rep.mean_grads = grads / double(rep.total);
  if (!l2.empty()) {
    rep.median_l2 = median(l2);
    rep.median_linf = median(linf);
    double sum = 0.0;
    for (double v : l2) sum += v;
    rep.mean_l2 = sum / double(l2.size());
  }
  return rep;
}

// ---------------------------------------------------------------------------

MarginFunction::MarginFunction(const Classifier& c, const Vector& at) : clf(c) {
  if (clf.is_binary()) return;
  const Vector z = clf.logits(at);
  top = predicted_label(clf, at);
  bool have = false;
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    if (ClassIndex(k) == top) continue;
    if (!have || z[k] > z[Eigen::Index(second)]) {
      second = ClassIndex(k);
      have = true;
    }
  }
}

double MarginFunction::value(const Vector& x) const {
  const Vector z = clf.logits(x);
  return clf.is_binary() ? z[0] : z[Eigen::Index(top)] - z[Eigen::Index(second)];
}

Vector MarginFunction::gradient(const Vector& x) const {
  if (clf.is_binary()) return clf.gradient(x, 0);
  return clf.gradient(x, top) - clf.gradient(x, second);
}

namespace {

Vector hvp_with(const MarginFunction& g, const Vector& x, const Vector& unit_v, double h) {
  return (g.gradient(x + h * unit_v) - g.gradient(x - h * unit_v)) / (2.0 * h);
}

}  // namespace

Vector hessian_vector_product(const Classifier& clf, const Vector& x, const Vector& v, double h) {
  if (!(h > 0.0)) throw InvalidArgument("hessian_vector_product: h must be positive");
  if (v.size() != x.size()) throw InvalidArgument("hessian_vector_product: dimension mismatch");
  const double nv = v.norm();
  if (nv == 0.0) throw InvalidArgument("hessian_vector_product: zero direction");
  const Vector u = v / nv;
  // The product is taken along u; callers passing a non-unit v get H u.
  return hvp_with(MarginFunction(clf, x), x, u, h);
}

double hessian_spectral_norm(const Classifier& clf, const Vector& x, std::size_t iters, double h,
                             std::uint64_t seed) {
  if (iters < 1) throw InvalidArgument("hessian_spectral_norm: iters must be >= 1");
  if (!(h > 0.0)) throw InvalidArgument("hessian_spectral_norm: h must be positive");
  const MarginFunction g(clf, x);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(x.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  v.normalize();

  double estimate = 0.0;
  for (std::size_t it = 0; it < iters; ++it) {
    const Vector hv = hvp_with(g, x, v, h);
    estimate = std::abs(v.dot(hv));
    const double n = hv.norm();
    if (n == 0.0) return 0.0;
    v = hv / n;
  }
  return estimate;
}

double normalized_curvature(const Classifier& clf, const Vector& x, double eps, std::size_t iters, double h,
                            std::uint64_t seed) {
  const double hess = hessian_spectral_norm(clf, x, iters, h, seed);
  return hess / (MarginFunction(clf, x).gradient(x).norm() + eps);
}

CurvatureReport curvature_report(const Classifier& clf, const std::vector<Vector>& points, double eps,
                                 std::size_t iters, double h, std::uint64_t seed) {
  if (points.empty()) throw InvalidArgument("curvature_report: no points");
  CurvatureReport rep;
  rep.per_point.resize(points.size());
  const auto n = static_cast<long long>(points.size());
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < n; ++i) {
    const Vector& x = points[std::size_t(i)];
    auto& p = rep.per_point[std::size_t(i)];
    p.grad_norm = MarginFunction(clf, x).gradient(x).norm();
    p.hessian_spectral_norm = hessian_spectral_norm(clf, x, iters, h, seed);
    p.normalized_curvature = p.hessian_spectral_norm / (p.grad_norm + eps);
  }
  for (const auto& p : rep.per_point) {
    rep.grad_norm += p.grad_norm;
    rep.hessian_spectral_norm += p.hessian_spectral_norm;
    rep.normalized_curvature += p.normalized_curvature;
  }
  rep.grad_norm /= double(points.size());
  rep.hessian_spectral_norm /= double(points.size());
  rep.normalized_curvature /= double(points.size());
  return rep;
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const DiagnosticsReport& r) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& p : r.gamma_curve) curve.push_back({p.gamma, p.fooled_fraction});
  j = nlohmann::json{{"total", r.total},
                     {"successes", r.successes},
                     {"fooling_rate", r.fooling_rate},
                     {"median_l2", r.median_l2},
                     {"mean_l2", r.mean_l2},
                     {"median_linf", r.median_linf},
                     {"mean_grads", r.mean_grads},
                     {"cosine_values", r.cosine_values},
                     {"gamma_curve", curve}};
}

void to_json(nlohmann::json& j, const CurvatureReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : r.per_point)
    rows.push_back({{"grad_norm", p.grad_norm},
                    {"hessian_spectral_norm", p.hessian_spectral_norm},
                    {"normalized_curvature", p.normalized_curvature}});
  j = nlohmann::json{{"grad_norm", r.grad_norm},
                     {"hessian_spectral_norm", r.hessian_spectral_norm},
                     {"normalized_curvature", r.normalized_curvature},
                     {"per_point", rows}};
}

void write_cosine_csv(std::ostream& out, const std::vector<CosineRow>& rows) {
  out << "attack,sample_id,cosine\n";
  for (const auto& r : rows) out << r.attack << ',' << r.sample_id << ',' << format_double(r.cosine) << '\n';
}

void write_gamma_csv(std::ostream& out, const std::vector<GammaRow>& rows) {
  out << "attack,gamma,fooled_fraction\n";
  for (const auto& r : rows)
    out << r.attack << ',' << format_double(r.point.gamma) << ',' << format_double(r.point.fooled_fraction) << '\n';
}

void write_curvature_csv(std::ostream& out, const CurvatureReport& report) {
  out << "sample_id,grad_norm,hessian_spectral_norm,normalized_curvature\n";
  for (std::size_t i = 0; i < report.per_point.size(); ++i) {
    const auto& p = report.per_point[i];
    out << i << ',' << format_double(p.grad_norm) << ',' << format_double(p.hessian_spectral_norm) << ','
        << format_double(p.normalized_curvature) << '\n';
  }
}

}  // namespace minperturb
