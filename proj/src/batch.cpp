#include "minperturb/batch.hpp"

#include <cstdlib>
#include <exception>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace minperturb {

AttackResult attack_or_failure(const Vector& x0, const Classifier& clf, const AttackConfig& cfg) {
  try {
    return run_attack(x0, clf, cfg);
  } catch (const InvalidArgument&) {
    throw;
  } catch (const Error&) {
    AttackResult res;
    res.perturbation = Vector::Zero(x0.size());
    res.adversarial_point = x0;
    res.original_label = predicted_label(clf, x0);
    res.adversarial_label = res.original_label;
    return res;
  }
}

std::vector<AttackResult> attack_batch_serial(const Classifier& clf, const std::vector<Vector>& points,
                                              const AttackConfig& cfg) {
  std::vector<AttackResult> out;
  out.reserve(points.size());
  for (const auto& x0 : points) out.push_back(attack_or_failure(x0, clf, cfg));
  return out;
}

int worker_threads() {
  if (const char* env = std::getenv("MINPERTURB_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::vector<AttackResult> attack_batch(const Classifier& clf, const std::vector<Vector>& points,
                                       const AttackConfig& cfg, int threads) {
  cfg.validate();
  if (threads <= 0) threads = worker_threads();
  std::vector<AttackResult> out(points.size());
  const auto n = static_cast<long long>(points.size());
  // Exceptions cannot cross the parallel region; keep the first one.
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long long i = 0; i < n; ++i) {
    try {
      out[std::size_t(i)] = attack_or_failure(points[std::size_t(i)], clf, cfg);
    } catch (...) {
#pragma omp critical(minperturb_batch_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace minperturb
