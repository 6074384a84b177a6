#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "minperturb/classifier.hpp"

namespace minperturb {

enum class Method { DeepFool, SuperDeepFool };
enum class NormMode { L2, Linf };

std::string_view to_string(Method m);
std::string_view to_string(NormMode n);
Method method_from_string(std::string_view s);
NormMode norm_mode_from_string(std::string_view s);

// Stands for "m = infinity": run DF steps until the label flips.
inline constexpr std::size_t kUntilFlip = std::numeric_limits<std::size_t>::max();

// Relative distance every DF step is pushed past its linearized boundary, so
// that an exact landing on the boundary still flips the label in floating
// point. Scaled by max(1, |x0|_2).
inline constexpr double kDefaultBoundaryMargin = 1e-12;

double crossing_distance(const Vector& x0, double relative_margin);

struct Box {
  Vector lo;
  Vector hi;
};

struct AttackConfig {
  Method method = Method::SuperDeepFool;
  std::size_t m = kUntilFlip;  // DF steps per round
  std::size_t n = 1;           // projection steps per round
  std::size_t max_outer_iters = 50;
  std::size_t max_df_iters_per_round = 50;
  double grad_tolerance = 1e-12;
  NormMode norm_mode = NormMode::L2;
  std::optional<ClassIndex> target;
  bool line_search = false;
  std::size_t line_search_iters = 25;
  std::optional<Box> box;
  std::optional<double> epsilon_cap;

  double boundary_margin = kDefaultBoundaryMargin;
  // SDF stops once an adversarial point is known and the end-of-round
  // iterate moves by less than this fraction of the perturbation norm.
  double fixed_point_tol = 1e-6;

  void validate() const;
};

struct AttackResult {
  Vector perturbation;
  Vector adversarial_point;
  bool success = false;
  ClassIndex original_label = 0;
  ClassIndex adversarial_label = 0;
  double l2_norm = 0.0;
  double linf_norm = 0.0;
  std::size_t gradient_evaluations = 0;
  std::size_t outer_iterations = 0;
};

void to_json(nlohmann::json& j, const AttackResult& r);
void from_json(const nlohmann::json& j, AttackResult& r);
void to_json(nlohmann::json& j, const AttackConfig& c);
void from_json(const nlohmann::json& j, AttackConfig& c);

// Knobs shared by the single-step primitives.
struct StepOptions {
  double grad_tolerance = 1e-12;
  // Absolute distance (in the step's norm) to land past the linear boundary.
  double margin = 0.0;
  NormMode norm = NormMode::L2;
  // Binary models: sign of F(x0), which fixes the side the margin points
  // away from. Zero means "the side x currently lies on".
  double origin_side = 0.0;
};

// x - F(x) / |grad F(x)|^2 * grad F(x), using the signed score so the step
// heads for the zero level set from either side. One gradient evaluation.
// Throws DegenerateGradient when |grad F| <= tolerance.
Vector df_step_binary(const Vector& x, const Classifier& clf, const StepOptions& opt = {});

struct MulticlassStep {
  Vector point;
  ClassIndex chosen_class = 0;
};

// One linearized step toward the nearest pairwise boundary against the
// original label (ties go to the lowest class index). Costs num_classes()
// gradient evaluations. In Linf mode the pairwise distances and the step use
// the l1-dual norm.
MulticlassStep df_multiclass_step(const Vector& x, const Classifier& clf, ClassIndex original,
                                  const StepOptions& opt = {});

// Targeted variant: linearizes score(target) - score(j), where j is the
// strongest class other than the target at x. Two gradient evaluations.
Vector targeted_df_step(const Vector& x, const Classifier& clf, ClassIndex target,
                        const StepOptions& opt = {});

// x0 + (r.g / |g|^2) g with r = x - x0 and g = grad F(x). In Linf mode:
// x0 + (r.g / |g|_1) sign(g). One gradient evaluation.
Vector projection_step_binary(const Vector& x0, const Vector& x, const Classifier& clf,
                              const StepOptions& opt = {});

// Same projection with w = grad f_b(x~) - grad f_orig(x~), where b is
// `boundary_class` if given and the predicted label at x~ otherwise.
// Two gradient evaluations. Without an explicit class, x~ must already be
// misclassified (PreconditionError otherwise).
Vector projection_step_multiclass(const Vector& x0, const Vector& x_tilde, const Classifier& clf,
                                  ClassIndex original, const StepOptions& opt = {},
                                  std::optional<ClassIndex> boundary_class = std::nullopt);

// DeepFool: repeated DF steps until the label flips; cap is
// cfg.max_df_iters_per_round. No overshoot factor.
AttackResult df_binary(const Vector& x0, const Classifier& clf, const AttackConfig& cfg = {});
AttackResult df_multiclass(const Vector& x0, const Classifier& clf, const AttackConfig& cfg = {});

// SuperDeepFool(m, n): alternate cfg.m DF steps (or DF until the label
// flips when m == kUntilFlip) with cfg.n projection steps, until the
// end-of-round iterate is adversarial, the iterate stalls at a fixed point,
// or cfg.max_outer_iters rounds have run. When the loop ends without an
// adversarial final iterate, the last adversarial iterate seen is returned.
AttackResult sdf_binary(const Vector& x0, const Classifier& clf, const AttackConfig& cfg = {});
AttackResult sdf_multiclass(const Vector& x0, const Classifier& clf, const AttackConfig& cfg = {});
AttackResult sdf_targeted(const Vector& x0, ClassIndex target, const Classifier& clf,
                          const AttackConfig& cfg = {});
// Linf projection and Linf DF steps; works for binary and multi-class.
AttackResult sdf_linf(const Vector& x0, const Classifier& clf, const AttackConfig& cfg = {});

// Dispatches on method, class count, target and norm mode, then applies the
// optional line search and epsilon renormalization. The returned result is
// re-verified with a fresh forward pass.
AttackResult run_attack(const Vector& x0, const Classifier& clf, const AttackConfig& cfg);

struct LineSearchResult {
  double gamma = 1.0;
  Vector point;
};

// Bisection on gamma in [0, 1] for the smallest scale of r that still fools.
LineSearchResult line_search_to_boundary(const Vector& x0, const Vector& r, const Classifier& clf,
                                         std::size_t iters = 25,
                                         std::optional<ClassIndex> target = std::nullopt);

Vector clip_to_box(const Vector& x, const Vector& lo, const Vector& hi);
Vector renormalize_to_eps(const Vector& r, double eps);

}  // namespace minperturb
