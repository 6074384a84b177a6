#pragma once

#include <vector>

#include "minperturb/attacks.hpp"

namespace minperturb {

// Runs run_attack and converts library errors (degenerate gradients,
// boundary starts, ties) into an unsuccessful result with a zero
// perturbation.
AttackResult attack_or_failure(const Vector& x0, const Classifier& clf, const AttackConfig& cfg);

// Reference implementation: one sample after another.
std::vector<AttackResult> attack_batch_serial(const Classifier& clf, const std::vector<Vector>& points,
                                              const AttackConfig& cfg);

// OpenMP worker pool over samples. Output order matches input order and each
// entry equals the serial result exactly. threads <= 0 picks
// worker_threads().
std::vector<AttackResult> attack_batch(const Classifier& clf, const std::vector<Vector>& points,
                                       const AttackConfig& cfg, int threads = 0);

// MINPERTURB_THREADS when set to a positive integer, else the OpenMP default.
int worker_threads();

}  // namespace minperturb
