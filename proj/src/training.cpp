#include "minperturb/training.hpp"

#include <cmath>

#include "minperturb/batch.hpp"

namespace minperturb {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("train config: learning_rate must be positive");
  if (!(l2_weight_decay >= 0.0)) throw InvalidArgument("train config: l2_weight_decay must be nonnegative");
}

namespace {

const Mlp& require_mlp(const Classifier& clf) {
  if (clf.kind() != ClassifierKind::Mlp) throw InvalidArgument("training requires an mlp classifier");
  return static_cast<const Mlp&>(clf);
}

void check_data(const Classifier& clf, const Dataset& data) {
  if (data.samples.empty()) throw InvalidArgument("training: empty dataset");
  const std::size_t labels = std::max<std::size_t>(clf.num_classes(), 2);
  for (const auto& s : data.samples) {
    if (std::size_t(s.point.size()) != clf.input_dim())
      throw InvalidArgument("training: dataset dimension does not match the classifier");
    if (s.label >= labels) throw InvalidArgument("training: label out of range for the classifier");
  }
}

std::vector<DenseLayer> zeros_like(const Mlp& model) {
  std::vector<DenseLayer> g;
  for (const auto& L : model.layers())
    g.push_back({Matrix::Zero(L.weights.rows(), L.weights.cols()), Vector::Zero(L.bias.size())});
  return g;
}

void descend(Mlp& model, const std::vector<DenseLayer>& grads, double lr) {
  auto& layers = model.mutable_layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weights -= lr * grads[i].weights;
    layers[i].bias -= lr * grads[i].bias;
  }
}

}  // namespace

double training_loss(const Mlp& model, const std::vector<Vector>& points, const std::vector<ClassIndex>& labels,
                     double l2_weight_decay, std::vector<DenseLayer>* grads) {
  if (points.size() != labels.size() || points.empty()) throw InvalidArgument("training_loss: bad batch");
  if (grads) *grads = zeros_like(model);
  const double inv_n = 1.0 / double(points.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Mlp::Tape tape = model.forward(points[i]);
    const Vector& z = tape.post.back();
    Vector adjoint(z.size());
    if (model.is_binary()) {
      // Logistic loss with y = +1 for label 1 and -1 for label 0.
      const double y = labels[i] == 1 ? 1.0 : -1.0;
      const double m = y * z[0];
      loss += m > 0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
      adjoint[0] = -y / (1.0 + std::exp(m));
    } else {
      const double top = z.maxCoeff();
      const Vector e = (z.array() - top).exp().matrix();
      const double sum = e.sum();
      const auto y = Eigen::Index(labels[i]);
      loss += std::log(sum) - (z[y] - top);
      adjoint = e / sum;
      adjoint[y] -= 1.0;
    }
    if (grads) model.backward(tape, adjoint * inv_n, grads);
  }
  loss *= inv_n;
  if (l2_weight_decay > 0.0) {
    for (std::size_t i = 0; i < model.layers().size(); ++i) {
      const Matrix& W = model.layers()[i].weights;
      loss += 0.5 * l2_weight_decay * W.squaredNorm();
      if (grads) (*grads)[i].weights += l2_weight_decay * W;
    }
  }
  return loss;
}

double accuracy(const Classifier& clf, const Dataset& data) {
  if (data.samples.empty()) throw InvalidArgument("accuracy: empty dataset");
  std::size_t hits = 0;
  for (const auto& s : data.samples) hits += predicted_label(clf, s.point) == s.label;
  return double(hits) / double(data.samples.size());
}

TrainResult train(const Classifier& clf, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  Mlp model = require_mlp(clf);
  check_data(model, data);
  std::vector<Vector> points;
  std::vector<ClassIndex> labels;
  for (const auto& s : data.samples) {
    points.push_back(s.point);
    labels.push_back(s.label);
  }
  std::vector<DenseLayer> grads;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    training_loss(model, points, labels, cfg.l2_weight_decay, &grads);
    descend(model, grads, cfg.learning_rate);
  }
  const double loss = training_loss(model, points, labels, cfg.l2_weight_decay, nullptr);
  const double acc = accuracy(model, data);
  return {std::move(model), acc, loss};
}

std::vector<Vector> adversarial_examples(const Classifier& clf, const Dataset& data, const AttackConfig& attack,
                                         double norm_cap) {
  if (!(norm_cap > 0.0)) throw InvalidArgument("adversarial examples: norm cap must be positive");
  std::vector<Vector> points;
  for (const auto& s : data.samples) points.push_back(s.point);
  const std::vector<AttackResult> results = attack_batch(clf, points, attack);
  std::vector<Vector> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const bool correct = results[i].original_label == data.samples[i].label;
    out.push_back(correct ? Vector(points[i] + renormalize_to_eps(results[i].perturbation, norm_cap)) : points[i]);
  }
  return out;
}

Mlp adversarial_fine_tune(const Classifier& clf, const Dataset& data, const AttackConfig& attack, double norm_cap,
                          std::size_t epochs, double learning_rate, double l2_weight_decay) {
  if (!(norm_cap > 0.0)) throw InvalidArgument("adversarial fine-tuning: norm cap must be positive");
  if (!(learning_rate > 0.0)) throw InvalidArgument("adversarial fine-tuning: learning rate must be positive");
  if (attack.method == Method::SuperDeepFool && attack.max_outer_iters > 6)
    throw InvalidArgument("adversarial fine-tuning: SDF must be capped at 6 outer iterations");
  Mlp model = require_mlp(clf);
  check_data(model, data);
  std::vector<ClassIndex> labels;
  for (const auto& s : data.samples) labels.push_back(s.label);
  std::vector<DenseLayer> grads;
  for (std::size_t e = 0; e < epochs; ++e) {
    const std::vector<Vector> adv = adversarial_examples(model, data, attack, norm_cap);
    training_loss(model, adv, labels, l2_weight_decay, &grads);
    descend(model, grads, learning_rate);
  }
  return model;
}

}  // namespace minperturb
