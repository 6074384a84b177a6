#include "minperturb/attacks.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace minperturb {

std::string_view to_string(Method m) { return m == Method::DeepFool ? "df" : "sdf"; }
std::string_view to_string(NormMode n) { return n == NormMode::L2 ? "l2" : "linf"; }

Method method_from_string(std::string_view s) {
  if (s == "df") return Method::DeepFool;
  if (s == "sdf") return Method::SuperDeepFool;
  throw InvalidArgument("unknown attack method '" + std::string(s) + "'");
}

NormMode norm_mode_from_string(std::string_view s) {
  if (s == "l2") return NormMode::L2;
  if (s == "linf") return NormMode::Linf;
  throw InvalidArgument("unknown norm mode '" + std::string(s) + "'");
}

double crossing_distance(const Vector& x0, double relative_margin) {
  return relative_margin * std::max(1.0, x0.norm());
}

void AttackConfig::validate() const {
  if (m == 0) throw InvalidArgument("attack config: m must be >= 1");
  if (n == 0) throw InvalidArgument("attack config: n must be >= 1");
  if (max_outer_iters == 0) throw InvalidArgument("attack config: max_outer_iters must be >= 1");
  if (!(grad_tolerance > 0.0)) throw InvalidArgument("attack config: grad_tolerance must be positive");
  if (line_search_iters == 0) throw InvalidArgument("attack config: line_search_iters must be >= 1");
  if (epsilon_cap && !(*epsilon_cap > 0.0)) throw InvalidArgument("attack config: epsilon_cap must be positive");
  if (!(boundary_margin >= 0.0)) throw InvalidArgument("attack config: boundary_margin must be nonnegative");
  if (!(fixed_point_tol >= 0.0)) throw InvalidArgument("attack config: fixed_point_tol must be nonnegative");
  if (box) {
    if (box->lo.size() != box->hi.size()) throw InvalidArgument("attack config: box bounds differ in length");
    if ((box->lo.array() > box->hi.array()).any()) throw InvalidArgument("attack config: box has lo > hi");
  }
}

// ---------------------------------------------------------------------------
// Primitives

Vector clip_to_box(const Vector& x, const Vector& lo, const Vector& hi) {
  if (lo.size() != x.size() || hi.size() != x.size()) throw InvalidArgument("clip_to_box: dimension mismatch");
  if ((lo.array() > hi.array()).any()) throw InvalidArgument("clip_to_box: lo > hi");
  return x.cwiseMax(lo).cwiseMin(hi);
}

Vector renormalize_to_eps(const Vector& r, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("renormalize_to_eps: eps must be positive");
  const double norm = r.norm();
  if (norm <= eps) return r;
  return r * (eps / norm);
}

namespace {

// Step from x onto the linearized boundary {f + w.d = 0}, then `margin`
// further toward f > 0. `f` is negative on the original side.
Vector boundary_step(const Vector& x, double f, const Vector& w, const StepOptions& opt) {
  if (opt.norm == NormMode::L2) {
    const double nw = w.norm();
    if (nw <= opt.grad_tolerance) throw DegenerateGradient("boundary normal vanishes");
    return x + ((-f / nw + opt.margin) / nw) * w;
  }
  const double n1 = l1_norm(w);
  if (n1 <= opt.grad_tolerance) throw DegenerateGradient("boundary normal vanishes (l1)");
  return x + (-f / n1 + opt.margin) * sign_of(w);
}

Vector project_onto_direction(const Vector& x0, const Vector& x, const Vector& w, const StepOptions& opt) {
  const Vector r = x - x0;
  if (opt.norm == NormMode::L2) {
    const double nw2 = w.squaredNorm();
    if (std::sqrt(nw2) <= opt.grad_tolerance) throw DegenerateGradient("projection direction vanishes");
    return x0 + (r.dot(w) / nw2) * w;
  }
  const double n1 = l1_norm(w);
  if (n1 <= opt.grad_tolerance) throw DegenerateGradient("projection direction vanishes (l1)");
  return x0 + (r.dot(w) / n1) * sign_of(w);
}

double pair_distance(double f, const Vector& w, NormMode mode) {
  return std::abs(f) / (mode == NormMode::L2 ? w.norm() : l1_norm(w));
}

double score_sign(double v) { return double((v > 0.0) - (v < 0.0)); }

}  // namespace

Vector df_step_binary(const Vector& x, const Classifier& clf, const StepOptions& opt) {
  if (!clf.is_binary()) throw PreconditionError("df_step_binary needs a binary classifier");
  const double F = clf.logits(x)[0];
  const Vector g = clf.gradient(x, 0);
  double side = opt.origin_side != 0.0 ? score_sign(opt.origin_side) : score_sign(F);
  if (side == 0.0) side = 1.0;
  // Adversarial score -side*F is negative on the origin side.
  return boundary_step(x, -side * F, -side * g, opt);
}

MulticlassStep df_multiclass_step(const Vector& x, const Classifier& clf, ClassIndex original,
                                  const StepOptions& opt) {
  const std::size_t C = clf.num_classes();
  if (C < 2) throw PreconditionError("df_multiclass_step needs at least 2 classes");
  if (original >= C) throw InvalidArgument("original label out of range");
  const Vector z = clf.logits(x);
  const Matrix J = clf.jacobian(x);
  const auto o = Eigen::Index(original);

  std::optional<ClassIndex> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (ClassIndex k = 0; k < C; ++k) {
    if (k == original) continue;
    const Vector w = (J.row(Eigen::Index(k)) - J.row(o)).transpose();
    const double nw = opt.norm == NormMode::L2 ? w.norm() : l1_norm(w);
    if (nw <= opt.grad_tolerance) continue;
    const double dist = pair_distance(z[Eigen::Index(k)] - z[o], w, opt.norm);
    if (dist < best_dist) {
      best_dist = dist;
      best = k;
    }
  }
  if (!best) throw DegenerateGradient("all pairwise boundary normals vanish");
  const auto l = Eigen::Index(*best);
  const Vector w = (J.row(l) - J.row(o)).transpose();
  return {boundary_step(x, z[l] - z[o], w, opt), *best};
}

Vector targeted_df_step(const Vector& x, const Classifier& clf, ClassIndex target, const StepOptions& opt) {
  const std::size_t C = clf.num_classes();
  if (C < 2) throw PreconditionError("targeted_df_step needs at least 2 classes");
  if (target >= C) throw InvalidArgument("target label out of range");
  const Vector z = clf.logits(x);
  Eigen::Index rival = -1;
  for (Eigen::Index k = 0; k < z.size(); ++k)
    if (ClassIndex(k) != target && (rival < 0 || z[k] > z[rival])) rival = k;
  const Vector w = clf.gradient(x, target) - clf.gradient(x, ClassIndex(rival));
  return boundary_step(x, z[Eigen::Index(target)] - z[rival], w, opt);
}

Vector projection_step_binary(const Vector& x0, const Vector& x, const Classifier& clf, const StepOptions& opt) {
  if (!clf.is_binary()) throw PreconditionError("projection_step_binary needs a binary classifier");
  return project_onto_direction(x0, x, clf.gradient(x, 0), opt);
}

Vector projection_step_multiclass(const Vector& x0, const Vector& x_tilde, const Classifier& clf,
                                  ClassIndex original, const StepOptions& opt,
                                  std::optional<ClassIndex> boundary_class) {
  if (clf.num_classes() < 2) throw PreconditionError("projection_step_multiclass needs at least 2 classes");
  ClassIndex b = 0;
  if (boundary_class) {
    b = *boundary_class;
    if (b >= clf.num_classes() || b == original) throw InvalidArgument("boundary class must differ from original");
  } else {
    b = predicted_label(clf, x_tilde);
    if (b == original) throw PreconditionError("projection_step_multiclass: x_tilde is not misclassified");
  }
  const Vector w = clf.gradient(x_tilde, b) - clf.gradient(x_tilde, original);
  return project_onto_direction(x0, x_tilde, w, opt);
}

// ---------------------------------------------------------------------------
// Attack loops

namespace {

struct Run {
  const Classifier& clf;
  const AttackConfig& cfg;
  Vector x0;
  ClassIndex original = 0;
  std::optional<ClassIndex> target;
  StepOptions step;
  std::size_t grads = 0;

  Run(const Vector& start, const Classifier& c, const AttackConfig& config, std::optional<ClassIndex> tgt,
      NormMode norm)
      : clf(c), cfg(config), x0(start), target(tgt) {
    cfg.validate();
    if (std::size_t(x0.size()) != clf.input_dim()) throw InvalidArgument("attack: input dimension mismatch");
    if (!x0.allFinite()) throw InvalidArgument("attack: non-finite input");
    if (cfg.box && cfg.box->lo.size() != x0.size()) throw InvalidArgument("attack: box dimension mismatch");
    step.grad_tolerance = cfg.grad_tolerance;
    step.margin = crossing_distance(x0, cfg.boundary_margin);
    step.norm = norm;
    if (clf.is_binary()) {
      const double F = clf.logits(x0)[0];
      if (F == 0.0) throw PreconditionError("attack: x0 lies on the decision boundary");
      step.origin_side = F;
    } else if (has_argmax_tie(clf, x0)) {
      throw PreconditionError("attack: tied top score at x0");
    }
    original = predicted_label(clf, x0);
    if (target) {
      if (*target >= clf.num_classes() || clf.is_binary())
        throw InvalidArgument("attack: target out of range");
      if (*target == original) throw InvalidArgument("attack: target equals the original label");
    }
  }

  bool adversarial(const Vector& x) const { return is_adversarial(clf, x, original, target); }

  Vector clip(Vector x) const { return cfg.box ? clip_to_box(x, cfg.box->lo, cfg.box->hi) : x; }

  // One DF step from x; records the class it linearized against.
  Vector df_step(const Vector& x, ClassIndex& chosen) {
    if (clf.is_binary()) {
      grads += 1;
      return clip(df_step_binary(x, clf, step));
    }
    if (target) {
      grads += 2;
      chosen = *target;
      return clip(targeted_df_step(x, clf, *target, step));
    }
    grads += clf.num_classes();
    MulticlassStep s = df_multiclass_step(x, clf, original, step);
    chosen = s.chosen_class;
    return clip(std::move(s.point));
  }

  Vector projection(const Vector& x, ClassIndex& boundary_class) {
    if (clf.is_binary()) {
      grads += 1;
      return clip(projection_step_binary(x0, x, clf, step));
    }
    grads += 2;
    if (target) {
      boundary_class = *target;
    } else {
      const ClassIndex label = predicted_label(clf, x);
      if (label != original) boundary_class = label;
    }
    return clip(projection_step_multiclass(x0, x, clf, original, step, boundary_class));
  }

  AttackResult finish(const Vector& x, std::size_t rounds) const {
    AttackResult res;
    res.perturbation = x - x0;
    res.adversarial_point = x0 + res.perturbation;
    if (cfg.box) {
      // x0 + (x - x0) can leave the box by an ulp; pull r inward until it does not.
      for (Eigen::Index i = 0; i < x0.size(); ++i) {
        double& r = res.perturbation[i];
        while (x0[i] + r > cfg.box->hi[i]) r = std::nextafter(r, -std::numeric_limits<double>::infinity());
        while (x0[i] + r < cfg.box->lo[i]) r = std::nextafter(r, std::numeric_limits<double>::infinity());
        res.adversarial_point[i] = x0[i] + r;
      }
    }
    res.original_label = original;
    res.adversarial_label = predicted_label(clf, res.adversarial_point);
    res.success = adversarial(res.adversarial_point);
    res.l2_norm = res.perturbation.norm();
    res.linf_norm = linf_norm(res.perturbation);
    res.gradient_evaluations = grads;
    res.outer_iterations = rounds;
    return res;
  }
};

AttackResult deepfool(Run& run) {
  Vector x = run.x0;
  std::size_t iters = 0;
  ClassIndex chosen = 0;
  while (iters < run.cfg.max_df_iters_per_round && !run.adversarial(x)) {
    x = run.df_step(x, chosen);
    ++iters;
  }
  return run.finish(x, iters);
}

AttackResult superdeepfool(Run& run) {
  const AttackConfig& cfg = run.cfg;
  Vector x = run.x0;
  Vector round_start = run.x0;
  std::optional<Vector> last_adversarial;
  std::size_t rounds = 0;
  ClassIndex boundary_class = run.target.value_or(run.original == 0 ? 1 : 0);

  auto note = [&](const Vector& p) {
    if (run.adversarial(p)) last_adversarial = p;
  };

  while (rounds < cfg.max_outer_iters && !run.adversarial(x)) {
    ++rounds;
    if (cfg.m == kUntilFlip) {
      for (std::size_t j = 0; j < cfg.max_df_iters_per_round && !run.adversarial(x); ++j)
        x = run.df_step(x, boundary_class);
    } else {
      for (std::size_t j = 0; j < cfg.m; ++j) x = run.df_step(x, boundary_class);
    }
    note(x);
    for (std::size_t j = 0; j < cfg.n; ++j) {
      x = run.projection(x, boundary_class);
      note(x);
    }
    if (run.adversarial(x)) break;
    if (last_adversarial && (x - round_start).norm() <= cfg.fixed_point_tol * (x - run.x0).norm()) break;
    round_start = x;
  }
  if (!run.adversarial(x) && last_adversarial) x = *last_adversarial;
  return run.finish(x, rounds);
}

}  // namespace

AttackResult df_binary(const Vector& x0, const Classifier& clf, const AttackConfig& cfg) {
  if (!clf.is_binary()) throw PreconditionError("df_binary needs a binary classifier");
  Run run(x0, clf, cfg, std::nullopt, NormMode::L2);
  return deepfool(run);
}

AttackResult df_multiclass(const Vector& x0, const Classifier& clf, const AttackConfig& cfg) {
  if (clf.is_binary()) throw PreconditionError("df_multiclass needs at least 2 classes");
  Run run(x0, clf, cfg, std::nullopt, NormMode::L2);
  return deepfool(run);
}

AttackResult sdf_binary(const Vector& x0, const Classifier& clf, const AttackConfig& cfg) {
  if (!clf.is_binary()) throw PreconditionError("sdf_binary needs a binary classifier");
  Run run(x0, clf, cfg, std::nullopt, NormMode::L2);
  return superdeepfool(run);
}

AttackResult sdf_multiclass(const Vector& x0, const Classifier& clf, const AttackConfig& cfg) {
  if (clf.is_binary()) throw PreconditionError("sdf_multiclass needs at least 2 classes");
  Run run(x0, clf, cfg, std::nullopt, NormMode::L2);
  return superdeepfool(run);
}

AttackResult sdf_targeted(const Vector& x0, ClassIndex target, const Classifier& clf, const AttackConfig& cfg) {
  if (clf.is_binary()) throw PreconditionError("sdf_targeted needs at least 2 classes");
  Run run(x0, clf, cfg, target, NormMode::L2);
  return superdeepfool(run);
}

AttackResult sdf_linf(const Vector& x0, const Classifier& clf, const AttackConfig& cfg) {
  Run run(x0, clf, cfg, clf.is_binary() ? std::nullopt : cfg.target, NormMode::Linf);
  return superdeepfool(run);
}

LineSearchResult line_search_to_boundary(const Vector& x0, const Vector& r, const Classifier& clf,
                                         std::size_t iters, std::optional<ClassIndex> target) {
  const ClassIndex original = predicted_label(clf, x0);
  if (is_adversarial(clf, x0, original, target)) throw PreconditionError("line search: x0 is already adversarial");
  if (!is_adversarial(clf, x0 + r, original, target))
    throw PreconditionError("line search: x0 + r is not adversarial");
  double lo = 0.0;
  double hi = 1.0;
  for (std::size_t i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (is_adversarial(clf, x0 + mid * r, original, target)) hi = mid;
    else lo = mid;
  }
  return {hi, x0 + hi * r};
}

AttackResult run_attack(const Vector& x0, const Classifier& clf, const AttackConfig& cfg) {
  cfg.validate();
  AttackResult res;
  if (cfg.method == Method::DeepFool) {
    if (cfg.target || cfg.norm_mode == NormMode::Linf)
      throw InvalidArgument("DF supports only the untargeted l2 mode; use sdf for targeted or linf runs");
    res = clf.is_binary() ? df_binary(x0, clf, cfg) : df_multiclass(x0, clf, cfg);
  } else if (cfg.norm_mode == NormMode::Linf) {
    res = sdf_linf(x0, clf, cfg);
  } else if (cfg.target) {
    res = sdf_targeted(x0, *cfg.target, clf, cfg);
  } else {
    res = clf.is_binary() ? sdf_binary(x0, clf, cfg) : sdf_multiclass(x0, clf, cfg);
  }

  const std::optional<ClassIndex> target = clf.is_binary() ? std::nullopt : cfg.target;
  Vector r = res.perturbation;
  bool changed = false;
  if (cfg.line_search && res.success) {
    r = line_search_to_boundary(x0, r, clf, cfg.line_search_iters, target).gamma * r;
    changed = true;
  }
  if (cfg.epsilon_cap) {
    r = renormalize_to_eps(r, *cfg.epsilon_cap);
    changed = true;
  }
  if (!changed) return res;

  // Rebuild through a fresh Run so the invariants (box, labels, norms) are
  // recomputed on the final point; keep the attack's cost counters.
  AttackConfig plain = cfg;
  plain.target = target;
  Run verify(x0, clf, plain, target, cfg.norm_mode);
  verify.grads = res.gradient_evaluations;
  return verify.finish(x0 + r, res.outer_iterations);
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vector(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), Eigen::Index(values.size()));
}

}  // namespace

void to_json(nlohmann::json& j, const AttackResult& r) {
  j = nlohmann::json{{"perturbation", vector_json(r.perturbation)},
                     {"adversarial_point", vector_json(r.adversarial_point)},
                     {"success", r.success},
                     {"original_label", r.original_label},
                     {"adversarial_label", r.adversarial_label},
                     {"l2_norm", r.l2_norm},
                     {"linf_norm", r.linf_norm},
                     {"gradient_evaluations", r.gradient_evaluations},
                     {"outer_iterations", r.outer_iterations}};
}

void from_json(const nlohmann::json& j, AttackResult& r) {
  r.perturbation = json_vector(j.at("perturbation"));
  r.adversarial_point = json_vector(j.at("adversarial_point"));
  r.success = j.at("success").get<bool>();
  r.original_label = j.at("original_label").get<ClassIndex>();
  r.adversarial_label = j.at("adversarial_label").get<ClassIndex>();
  r.l2_norm = j.at("l2_norm").get<double>();
  r.linf_norm = j.at("linf_norm").get<double>();
  r.gradient_evaluations = j.at("gradient_evaluations").get<std::size_t>();
  r.outer_iterations = j.at("outer_iterations").get<std::size_t>();
}

void to_json(nlohmann::json& j, const AttackConfig& c) {
  j = nlohmann::json{{"method", to_string(c.method)},
                     {"m", c.m == kUntilFlip ? nlohmann::json("inf") : nlohmann::json(c.m)},
                     {"n", c.n},
                     {"max_outer_iters", c.max_outer_iters},
                     {"max_df_iters_per_round", c.max_df_iters_per_round},
                     {"grad_tolerance", c.grad_tolerance},
                     {"norm_mode", to_string(c.norm_mode)},
                     {"line_search", c.line_search},
                     {"line_search_iters", c.line_search_iters},
                     {"boundary_margin", c.boundary_margin},
                     {"fixed_point_tol", c.fixed_point_tol}};
  j["target"] = c.target ? nlohmann::json(*c.target) : nlohmann::json(nullptr);
  j["epsilon_cap"] = c.epsilon_cap ? nlohmann::json(*c.epsilon_cap) : nlohmann::json(nullptr);
  if (c.box) j["box"] = {{"lo", vector_json(c.box->lo)}, {"hi", vector_json(c.box->hi)}};
  else j["box"] = nullptr;
}

void from_json(const nlohmann::json& j, AttackConfig& c) {
  c = AttackConfig{};
  if (!j.is_object()) throw InvalidArgument("attack config must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "method") c.method = method_from_string(value.get<std::string>());
    else if (key == "m") {
      if (value.is_string()) {
        if (value.get<std::string>() != "inf") throw InvalidArgument("attack config: m must be a positive integer or \"inf\"");
        c.m = kUntilFlip;
      } else {
        c.m = value.get<std::size_t>();
      }
    } else if (key == "n") c.n = value.get<std::size_t>();
    else if (key == "max_outer_iters") c.max_outer_iters = value.get<std::size_t>();
    else if (key == "max_df_iters_per_round") c.max_df_iters_per_round = value.get<std::size_t>();
    else if (key == "grad_tolerance") c.grad_tolerance = value.get<double>();
    else if (key == "norm_mode") c.norm_mode = norm_mode_from_string(value.get<std::string>());
    else if (key == "target") {
      if (!value.is_null()) c.target = value.get<ClassIndex>();
    } else if (key == "line_search") c.line_search = value.get<bool>();
    else if (key == "line_search_iters") c.line_search_iters = value.get<std::size_t>();
    else if (key == "epsilon_cap") {
      if (!value.is_null()) c.epsilon_cap = value.get<double>();
    } else if (key == "box") {
      if (!value.is_null()) c.box = Box{json_vector(value.at("lo")), json_vector(value.at("hi"))};
    } else if (key == "boundary_margin") c.boundary_margin = value.get<double>();
    else if (key == "fixed_point_tol") c.fixed_point_tol = value.get<double>();
    else if (key == "label") continue;
    else throw InvalidArgument("attack config: unknown field '" + key + "'");
  }
  c.validate();
}

}  // namespace minperturb
