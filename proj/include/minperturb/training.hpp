#pragma once

#include <cstdint>
#include <vector>

#include "minperturb/attacks.hpp"
#include "minperturb/classifier.hpp"
#include "minperturb/dataset.hpp"

namespace minperturb {

struct TrainConfig {
  std::size_t epochs = 500;
  double learning_rate = 0.1;
  // Full-batch descent is deterministic; the seed is recorded for provenance.
  std::uint64_t seed = 0;
  double l2_weight_decay = 0.0;

  void validate() const;
};

struct TrainResult {
  Mlp model;
  double accuracy = 0.0;
  double final_loss = 0.0;
};

// Mean cross-entropy (softmax for C >= 2, logistic on F for C == 1) plus
// the weight-decay term. When `grads` is non-null it receives the gradient
// with respect to every layer's weights and biases.
double training_loss(const Mlp& model, const std::vector<Vector>& points, const std::vector<ClassIndex>& labels,
                     double l2_weight_decay, std::vector<DenseLayer>* grads);

double accuracy(const Classifier& clf, const Dataset& data);

// Full-batch gradient descent on the cross-entropy. Throws InvalidArgument
// for non-MLP models or dimension/label mismatches.
TrainResult train(const Classifier& clf, const Dataset& data, const TrainConfig& cfg);

// Training points pushed by the attack, perturbation rescaled to l2 norm at
// most norm_cap. Points the model already misclassifies are kept unchanged.
std::vector<Vector> adversarial_examples(const Classifier& clf, const Dataset& data, const AttackConfig& attack,
                                         double norm_cap);

// Each epoch: regenerate adversarial examples against the current weights,
// then take one descent step on them with the original labels.
Mlp adversarial_fine_tune(const Classifier& clf, const Dataset& data, const AttackConfig& attack, double norm_cap,
                          std::size_t epochs, double learning_rate, double l2_weight_decay = 0.0);

}  // namespace minperturb
