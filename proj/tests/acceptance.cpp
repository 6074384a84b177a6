// Acceptance gate. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "minperturb/attacks.hpp"
#include "minperturb/batch.hpp"
#include "minperturb/dataset.hpp"
#include "minperturb/diagnostics.hpp"
#include "minperturb/harness.hpp"
#include "minperturb/oracle.hpp"
#include "minperturb/training.hpp"

using namespace minperturb;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Vector gaussian(std::mt19937_64& rng, Eigen::Index d, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = n(rng);
  return v;
}

Matrix gaussian_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

double rel_err(const Vector& a, const Vector& b, NormMode mode) {
  if (mode == NormMode::Linf) return (a - b).lpNorm<Eigen::Infinity>() / b.lpNorm<Eigen::Infinity>();
  return (a - b).norm() / b.norm();
}

AttackConfig sdf(std::size_t m, std::size_t n) {
  AttackConfig c;
  c.m = m;
  c.n = n;
  return c;
}

AttackConfig deepfool() {
  AttackConfig c;
  c.method = Method::DeepFool;
  return c;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- shared fixtures --------------------------------------------------------

const Matrix& ellipse_form() {
  static const Matrix Q = [] {
    Matrix q(2, 2);
    q << 0.25, 0, 0, 1;
    return q;
  }();
  return Q;
}

// Outside starts in [-4,4]x[-3,3]; max_distance filters by oracle norm.
std::vector<Vector> ellipse_starts(std::size_t count, std::uint64_t seed, double max_distance) {
  const QuadricBinary e(ellipse_form(), 1.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-4.0, 4.0);
  std::uniform_real_distribution<double> uy(-3.0, 3.0);
  std::vector<Vector> out;
  while (out.size() < count) {
    Vector x(2);
    x << ux(rng), uy(rng);
    if (e.logits(x)[0] <= 1e-6) continue;
    if (quadric_oracle(x, ellipse_form(), 1.0).norm >= max_distance) continue;
    out.push_back(x);
  }
  return out;
}

struct TrainedMlp {
  Mlp model;
  std::vector<Vector> points;
};

const TrainedMlp& trained_mlp() {
  static const TrainedMlp t = [] {
    const Dataset train_set = generate_dataset("grid-multiclass", 600, 0);
    TrainConfig tc;
    tc.epochs = 1500;
    tc.learning_rate = 0.2;
    tc.seed = 0;
    TrainResult r = train(*make_mlp({2, 16, 3}, Activation::Tanh, 0), train_set, tc);
    TrainedMlp out{std::move(r.model), {}};
    for (const auto& s : generate_dataset("grid-multiclass", 200, 1).samples) out.points.push_back(s.point);
    return out;
  }();
  return t;
}

std::vector<AttackResult> mlp_results(const AttackConfig& cfg) {
  return attack_batch(trained_mlp().model, trained_mlp().points, cfg);
}

double median_success_l2(const std::vector<AttackResult>& rs) {
  std::vector<double> v;
  for (const auto& r : rs)
    if (r.success) v.push_back(r.l2_norm);
  return median(v);
}

// --- criteria ---------------------------------------------------------------

Outcome affine_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  const std::size_t dims[] = {2, 5, 20};
  const std::size_t classes[] = {1, 3, 10};
  const std::vector<std::pair<std::size_t, std::size_t>> mn = {{1, 1}, {1, 3}, {3, 1}, {kUntilFlip, 1}};
  double worst = 0.0;
  std::size_t checks = 0;
  std::size_t failures = 0;
  auto record = [&](const AttackResult& res, const Vector& expected, NormMode mode) {
    ++checks;
    const double e = res.success ? rel_err(res.perturbation, expected, mode) : INFINITY;
    worst = std::max(worst, e);
    if (!(e <= 1e-10)) ++failures;
  };
  OracleOptions linf;
  linf.norm = NormMode::Linf;

  for (int i = 0; i < 100; ++i) {
    const auto d = Eigen::Index(dims[i % 3]);
    const std::size_t C = classes[(i / 3) % 3];
    const Vector x0 = gaussian(rng, d, 2.0);
    if (C == 1) {
      const Vector w = gaussian(rng, d);
      const double b = gaussian(rng, 1)[0];
      const AffineBinary clf(w, b);
      const auto l2 = affine_binary_oracle(x0, w, b);
      const auto li = affine_binary_oracle(x0, w, b, linf);
      record(run_attack(x0, clf, deepfool()), l2.perturbation, NormMode::L2);
      for (const auto& [m, n] : mn) record(run_attack(x0, clf, sdf(m, n)), l2.perturbation, NormMode::L2);
      record(sdf_linf(x0, clf), li.perturbation, NormMode::Linf);
      continue;
    }
    const Matrix W = gaussian_matrix(rng, Eigen::Index(C), d);
    const Vector b = gaussian(rng, Eigen::Index(C));
    const AffineMulticlass clf(W, b);
    if (has_argmax_tie(clf, x0)) continue;
    const auto l2 = affine_multiclass_oracle(x0, W, b);
    const auto li = affine_multiclass_oracle(x0, W, b, std::nullopt, linf);
    record(run_attack(x0, clf, deepfool()), l2.perturbation, NormMode::L2);
    for (const auto& [m, n] : mn) record(run_attack(x0, clf, sdf(m, n)), l2.perturbation, NormMode::L2);
    record(sdf_linf(x0, clf), li.perturbation, NormMode::Linf);

    // A random target, or the nearest class when another class wins its crossing.
    const ClassIndex orig = predicted_label(clf, x0);
    ClassIndex target = ClassIndex(std::uniform_int_distribution<std::size_t>(0, C - 2)(rng));
    if (target >= orig) ++target;
    std::optional<OracleSolution> tgt;
    try {
      tgt = affine_multiclass_oracle(x0, W, b, target);
    } catch (const NotFound&) {
      target = predicted_label(clf, x0 + l2.perturbation);
      tgt = affine_multiclass_oracle(x0, W, b, target);
    }
    record(sdf_targeted(x0, target, clf), tgt->perturbation, NormMode::L2);
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && secs < 5.0,
          fmt("%zu checks, %zu over 1e-10, worst rel err %.2e, %.2fs (limit 5s)", checks, failures, worst, secs)};
}

Outcome curved_boundary() {
  const auto t0 = std::chrono::steady_clock::now();
  const QuadricBinary e(ellipse_form(), 1.0);
  AttackConfig s = sdf(kUntilFlip, 1);
  s.line_search = true;
  AttackConfig d = deepfool();
  d.line_search = true;
  std::size_t within = 0;
  std::size_t better = 0;
  double worst = 0.0;
  const auto starts = ellipse_starts(50, 202, 0.5);
  for (const auto& x0 : starts) {
    const double oracle = quadric_oracle(x0, ellipse_form(), 1.0).norm;
    const auto rs = run_attack(x0, e, s);
    const auto rd = run_attack(x0, e, d);
    const double gap = rs.success ? std::abs(rs.l2_norm - oracle) : INFINITY;
    worst = std::max(worst, gap);
    within += gap <= 1e-3;
    better += rs.success && rd.success && rs.l2_norm < rd.l2_norm;
  }
  const double secs = seconds_since(t0);
  const std::size_t n = starts.size();
  return {within == n && better * 10 >= 9 * n && secs < 10.0,
          fmt("starts at distance < 0.5: %zu/%zu within 1e-3 (worst %.2e), SDF < DF on %zu/%zu, %.2fs (limit 10s)",
              within, n, worst, better, n, secs)};
}

std::string curved_far_field() {
  const QuadricBinary e(ellipse_form(), 1.0);
  AttackConfig s = sdf(kUntilFlip, 1);
  s.line_search = true;
  std::size_t within = 0;
  const auto starts = ellipse_starts(50, 203, INFINITY);
  for (const auto& x0 : starts) {
    const auto rs = run_attack(x0, e, s);
    within += rs.success && std::abs(rs.l2_norm - quadric_oracle(x0, ellipse_form(), 1.0).norm) <= 1e-3;
  }
  return fmt("uniform outside starts (any distance): %zu/%zu within 1e-3", within, starts.size());
}

std::vector<std::pair<std::string, AttackConfig>> ranking_variants(bool line_search) {
  std::vector<std::pair<std::string, AttackConfig>> v = {{"DF", deepfool()},
                                                         {"SDF(1,1)", sdf(1, 1)},
                                                         {"SDF(1,3)", sdf(1, 3)},
                                                         {"SDF(3,1)", sdf(3, 1)},
                                                         {"SDF(inf,1)", sdf(kUntilFlip, 1)}};
  for (auto& [name, cfg] : v) cfg.line_search = line_search;
  return v;
}

std::string ranking_medians(bool line_search, std::vector<double>* medians) {
  std::string detail;
  for (const auto& [name, cfg] : ranking_variants(line_search)) {
    const double m = median_success_l2(mlp_results(cfg));
    if (medians) medians->push_back(m);
    detail += fmt(" %s=%.4f", name.c_str(), m);
  }
  return detail;
}

// Medians of line-searched perturbations, the norms each attack reports once overshoot is removed.
Outcome mlp_ranking() {
  std::vector<double> medians;
  const std::string detail = "line-searched medians" + ranking_medians(true, &medians);
  const double best = *std::min_element(medians.begin(), medians.end());
  const double sdf_inf = medians.back();
  return {sdf_inf <= medians.front() && sdf_inf <= 1.02 * best, detail};
}

Outcome cosine_direction() {
  const auto& t = trained_mlp();
  const auto df = mlp_results(deepfool());
  const auto sd = mlp_results(sdf(kUntilFlip, 1));
  std::vector<double> cdf;
  std::vector<double> csdf;
  for (std::size_t i = 0; i < t.points.size(); ++i) {
    if (!df[i].success || !sd[i].success) continue;
    cdf.push_back(cosine_alignment(t.points[i], df[i].perturbation, t.model));
    csdf.push_back(cosine_alignment(t.points[i], sd[i].perturbation, t.model));
  }
  const QuadricBinary e(ellipse_form(), 1.0);
  std::vector<double> cell;
  for (const auto& x0 : ellipse_starts(50, 204, INFINITY)) {
    const auto r = run_attack(x0, e, sdf(kUntilFlip, 1));
    if (r.success) cell.push_back(cosine_alignment(x0, r.perturbation, e));
  }
  const double m_df = mean(cdf);
  const double m_sdf = mean(csdf);
  const double m_e = mean(cell);
  return {m_sdf > m_df && m_e > 0.9 && cell.size() == 50,
          fmt("MLP mean cosine SDF %.4f vs DF %.4f over %zu samples; ellipse SDF %.4f over %zu", m_sdf, m_df,
              cdf.size(), m_e, cell.size())};
}

Outcome gamma_direction() {
  const auto& t = trained_mlp();
  auto fooled = [&](const AttackConfig& cfg) {
    const auto rs = mlp_results(cfg);
    std::vector<std::pair<Vector, Vector>> pairs;
    for (std::size_t i = 0; i < rs.size(); ++i)
      if (rs[i].success) pairs.emplace_back(t.points[i], rs[i].perturbation);
    return gamma_fooling_curve(pairs, t.model, {0.9}).front().fooled_fraction;
  };
  const double f_df = fooled(deepfool());
  const double f_sdf = fooled(sdf(kUntilFlip, 1));

  // Oracle perturbations on affine models.
  std::mt19937_64 rng(505);
  std::vector<double> fractions;
  for (int i = 0; i < 20; ++i) {
    const Matrix W = gaussian_matrix(rng, 4, 3);
    const Vector b = gaussian(rng, 4);
    const AffineMulticlass clf(W, b);
    std::vector<std::pair<Vector, Vector>> pairs;
    for (int k = 0; k < 25; ++k) {
      const Vector x0 = gaussian(rng, 3, 2.0);
      if (has_argmax_tie(clf, x0)) continue;
      pairs.emplace_back(x0, affine_multiclass_oracle(x0, W, b).perturbation);
    }
    fractions.push_back(gamma_fooling_curve(pairs, clf, {0.99}).front().fooled_fraction);
  }
  const double worst = *std::max_element(fractions.begin(), fractions.end());
  return {f_df > f_sdf && worst == 0.0,
          fmt("fooled at gamma=0.9: DF %.3f vs SDF %.3f; affine oracle at gamma=0.99: max %.3f over %zu models", f_df,
              f_sdf, worst, fractions.size())};
}

Outcome df_convergence() {
  const Matrix& Q = ellipse_form();
  const QuadricBinary e(Q, 1.0);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(Q);
  const double lmin = eig.eigenvalues().minCoeff();
  const double beta = 2.0 * eig.eigenvalues().cwiseAbs().maxCoeff();
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> angle(0.0, 2 * M_PI);
  std::uniform_real_distribution<double> offset(-0.1, 0.1);
  std::size_t accepted = 0;
  std::size_t converged = 0;
  std::size_t worst_iters = 0;
  while (accepted < 100) {
    const double t = angle(rng);
    Vector p(2);
    p << 2 * std::cos(t), std::sin(t);
    const Vector nrm = (Q * p).normalized();
    const Vector x0 = p + offset(rng) * nrm;
    if (std::abs(e.logits(x0)[0]) < 1e-9) continue;
    const double eps = quadric_oracle(x0, Q, 1.0).norm * (1 + 1e-9) + 1e-12;
    const double zeta = 2.0 * lmin * (x0.norm() - eps);
    if (!(zeta > 0 && eps < (zeta / beta) * (zeta / beta))) continue;
    ++accepted;
    Vector x = x0;
    for (std::size_t n = 0; n <= 50; ++n) {
      if (std::abs(e.logits(x)[0]) < 1e-6) {
        ++converged;
        worst_iters = std::max(worst_iters, n);
        break;
      }
      if (n < 50) x = df_step_binary(x, e);
    }
  }
  return {converged == accepted,
          fmt("%zu/%zu starts reach |F| < 1e-6, worst %zu iterations (limit 50)", converged, accepted, worst_iters)};
}

Outcome projection_fixed_point() {
  std::mt19937_64 rng(707);
  std::size_t one_step = 0;
  std::size_t contracted = 0;
  std::size_t trials = 0;
  std::size_t worst_iters = 0;
  for (int i = 0; i < 60; ++i) {
    const auto d = Eigen::Index(i % 3 == 0 ? 2 : (i % 3 == 1 ? 5 : 20));
    const Vector x0 = gaussian(rng, d, 2.0);
    std::function<Vector(const Vector&)> T;
    Vector normal;
    std::unique_ptr<Classifier> clf;
    if (i % 2 == 0) {
      normal = gaussian(rng, d);
      clf = make_affine_binary(normal, 0.3);
      T = [&](const Vector& r) -> Vector { return projection_step_binary(x0, x0 + r, *clf) - x0; };
    } else {
      const Matrix W = gaussian_matrix(rng, 3, d);
      clf = make_affine_multiclass(W, Vector::Zero(3));
      const ClassIndex orig = predicted_label(*clf, x0);
      const ClassIndex other = (orig + 1) % 3;
      normal = W.row(Eigen::Index(other)) - W.row(Eigen::Index(orig));
      T = [&, orig, other](const Vector& r) -> Vector {
        return projection_step_multiclass(x0, x0 + r, *clf, orig, {}, other) - x0;
      };
    }
    ++trials;
    Vector r = gaussian(rng, d);
    if (r.dot(normal) <= 0) r = -r;
    const Vector r1 = T(r);
    const Vector r2 = T(r1);
    one_step += (r2 - r1).norm() <= 1e-12 * r1.norm() && r1.dot(normal) > 0;

    Vector q = gaussian(rng, d);
    q -= (q.dot(normal) / normal.squaredNorm()) * normal;
    for (std::size_t k = 1; k <= 60; ++k) {
      q = T(q);
      if (q.norm() < 1e-12) {
        ++contracted;
        worst_iters = std::max(worst_iters, k);
        break;
      }
    }
  }
  return {one_step == trials && contracted == trials,
          fmt("fixed point in one step %zu/%zu; orthogonal start below 1e-12 %zu/%zu (worst %zu iterations)",
              one_step, trials, contracted, trials, worst_iters)};
}

Outcome gradient_accounting() {
  std::mt19937_64 rng(808);
  std::size_t exact = 0;
  std::size_t trials = 0;
  for (int i = 0; i < 30; ++i) {
    const std::size_t C = i % 2 == 0 ? 3 : 10;
    const auto d = Eigen::Index(i % 3 == 0 ? 2 : (i % 3 == 1 ? 5 : 20));
    const AffineMulticlass clf(gaussian_matrix(rng, Eigen::Index(C), d), gaussian(rng, Eigen::Index(C)));
    const Vector x0 = gaussian(rng, d, 2.0);
    if (has_argmax_tie(clf, x0)) continue;
    ++trials;
    exact += run_attack(x0, clf, deepfool()).gradient_evaluations == C &&
             run_attack(x0, clf, sdf(kUntilFlip, 1)).gradient_evaluations == C + 2;
  }
  auto mean_grads = [](const std::vector<AttackResult>& rs) {
    double s = 0;
    for (const auto& r : rs) s += double(r.gradient_evaluations);
    return s / double(rs.size());
  };
  const double g_df = mean_grads(mlp_results(deepfool()));
  const double g_sdf = mean_grads(mlp_results(sdf(kUntilFlip, 1)));
  return {exact == trials && g_sdf <= 4 * g_df,
          fmt("affine DF=C and SDF=C+2 on %zu/%zu; MLP mean grads SDF %.2f vs DF %.2f (ratio %.2f, limit 4)", exact,
              trials, g_sdf, g_df, g_sdf / g_df)};
}

Outcome curvature_oracle() {
  Matrix Q(2, 2);
  Q << 1, 0, 0, 3;
  const QuadricBinary q(Q, 1.0);
  Vector x(2);
  x << 0.3, -0.7;
  const double quad = hessian_spectral_norm(q, x);

  const Mlp net({2, 8, 2}, Activation::Tanh, 7);
  std::mt19937_64 rng(909);
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Vector p = gaussian(rng, 2);
    const MarginFunction g(net, p);
    const double h = 1e-4;
    Matrix H(2, 2);
    for (Eigen::Index j = 0; j < 2; ++j) {
      Vector a = p;
      Vector b = p;
      a[j] += h;
      b[j] -= h;
      H.col(j) = (g.gradient(a) - g.gradient(b)) / (2 * h);
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (H + H.transpose()));
    const double expected = eig.eigenvalues().cwiseAbs().maxCoeff();
    worst = std::max(worst, std::abs(hessian_spectral_norm(net, p) - expected) / expected);
  }
  return {std::abs(quad - 6.0) <= 1e-3 && worst <= 1e-3,
          fmt("quadric diag(1,3): %.6f; MLP worst relative error %.2e over 10 points", quad, worst)};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("minperturb_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

AtSummary at_run(std::size_t dim) {
  const fs::path out = scratch("at" + std::to_string(dim));
  const json data = {{"name", "two-gaussians"}, {"size", 200}, {"seed", 11}, {"dim", dim}};
  const json doc = {{"seed", 11},
                    {"out_dir", out.string()},
                    {"model",
                     {{"kind", "mlp"},
                      {"layer_sizes", {dim, 16, 2}},
                      {"activation", "tanh"},
                      {"seed", 3},
                      {"train", {{"dataset", data}, {"epochs", 500}}}}},
                    {"dataset", data},
                    {"at", {{"norm_cap_factor", 1.5}, {"epochs", 10}}}};
  std::ostringstream log;
  return run_at_train(parse_experiment(doc), log);
}

std::string at_summary(const AtSummary& s) {
  return fmt("median SDF l2 %.4f -> %.4f, mean curvature %.4f -> %.4f, cap %.4f", s.pre_median_l2, s.post_median_l2,
             s.pre_mean_curvature, s.post_mean_curvature, s.norm_cap);
}

// 20-D two-gaussians: in the plane the clean model is already the max-margin separator.
Outcome at_direction() {
  const auto t0 = std::chrono::steady_clock::now();
  const AtSummary s = at_run(20);
  const double secs = seconds_since(t0);
  return {s.post_median_l2 > s.pre_median_l2 && s.post_mean_curvature < s.pre_mean_curvature && secs < 60.0,
          fmt("d=20: %s, %.2fs (limit 60s)", at_summary(s).c_str(), secs)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path dir = scratch("determinism");
  const json doc = {
      {"seed", 5},
      {"model",
       {{"kind", "mlp"},
        {"layer_sizes", {2, 16, 3}},
        {"activation", "tanh"},
        {"seed", 2},
        {"train", {{"dataset", {{"name", "grid-multiclass"}, {"size", 300}}}, {"epochs", 300}}}}},
      {"dataset", {{"name", "grid-multiclass"}, {"size", 100}, {"seed", 6}}},
      {"attacks",
       {{{"label", "df"}, {"method", "df"}},
        {{"label", "sdf"}, {"method", "sdf"}},
        {{"label", "sdf13"}, {"method", "sdf"}, {"m", 1}, {"n", 3}},
        {{"label", "sdf_ls"}, {"method", "sdf"}, {"line_search", true}}}}};
  const fs::path config = dir / "config.json";
  std::ofstream(config) << doc.dump(2);
  int codes[2];
  for (int k = 0; k < 2; ++k) {
    const std::string cmd = std::string(MINPERTURB_CLI) + " attack --config " + config.string() + " --out-dir " +
                            (dir / ("run" + std::to_string(k))).string() + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    codes[k] = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  const std::string a = slurp(dir / "run0" / "results.csv");
  const std::string b = slurp(dir / "run1" / "results.csv");
  return {codes[0] == 0 && codes[1] == 0 && !a.empty() && a == b,
          fmt("exit codes %d/%d, results.csv %zu bytes, identical: %s", codes[0], codes[1], a.size(),
              a == b ? "yes" : "no")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"affine oracle exactness", affine_exactness},
      {"curved-boundary optimality", curved_boundary},
      {"MLP median ranking", mlp_ranking},
      {"cosine alignment direction", cosine_direction},
      {"gamma-curve direction", gamma_direction},
      {"DF convergence under the ball condition", df_convergence},
      {"projection fixed point", projection_fixed_point},
      {"gradient accounting", gradient_accounting},
      {"curvature oracle", curvature_oracle},
      {"adversarial training direction", at_direction},
      {"CLI determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %2zu %s: %s -- %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str());
    if (i == 1) std::printf("   info: %s\n", curved_far_field().c_str());
    if (i == 2) std::printf("   info: medians without line search%s\n", ranking_medians(false, nullptr).c_str());
    if (i == 9) std::printf("   info: d=2: %s\n", at_summary(at_run(2)).c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures;
}
