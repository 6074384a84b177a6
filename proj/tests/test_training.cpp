#include <doctest.h>

#include "minperturb/batch.hpp"
#include "minperturb/diagnostics.hpp"
#include "minperturb/training.hpp"

using namespace minperturb;

namespace {

bool same_weights(const Mlp& a, const Mlp& b) {
  if (a.layers().size() != b.layers().size()) return false;
  for (std::size_t i = 0; i < a.layers().size(); ++i)
    if (a.layers()[i].weights != b.layers()[i].weights || a.layers()[i].bias != b.layers()[i].bias) return false;
  return true;
}

AttackConfig at_attack() {
  AttackConfig a;
  a.max_outer_iters = 6;
  return a;
}

}  // namespace

TEST_CASE("training separable gaussians reaches high accuracy") {
  const Dataset data = generate_dataset("two-gaussians", 200, 1);
  TrainConfig cfg;
  cfg.epochs = 500;
  cfg.learning_rate = 0.1;
  const auto res = train(Mlp({2, 8, 2}, Activation::Tanh, 7), data, cfg);
  CHECK(res.accuracy >= 0.99);
  CHECK(res.final_loss < 0.1);
}

TEST_CASE("a binary MLP head trains with the logistic loss") {
  const Dataset data = generate_dataset("two-gaussians", 200, 2);
  TrainConfig cfg;
  cfg.epochs = 300;
  const auto res = train(Mlp({2, 6, 1}, Activation::Tanh, 3), data, cfg);
  CHECK(res.accuracy >= 0.99);
}

TEST_CASE("zero epochs leave the weights unchanged") {
  const Dataset data = generate_dataset("two-moons", 50, 1);
  const Mlp net({2, 8, 2}, Activation::Tanh, 5);
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK(same_weights(train(net, data, cfg).model, net));
  CHECK(same_weights(adversarial_fine_tune(net, data, at_attack(), 1.0, 0, 0.1), net));
}

TEST_CASE("training is deterministic") {
  const Dataset data = generate_dataset("grid-multiclass", 90, 4);
  TrainConfig cfg;
  cfg.epochs = 50;
  const auto a = train(Mlp({2, 8, 3}, Activation::Tanh, 1), data, cfg);
  const auto b = train(Mlp({2, 8, 3}, Activation::Tanh, 1), data, cfg);
  CHECK(same_weights(a.model, b.model));
  CHECK(a.final_loss == b.final_loss);
}

TEST_CASE("training errors") {
  const Dataset data = generate_dataset("two-gaussians", 20, 1);
  CHECK_THROWS_AS(train(Mlp({3, 4, 2}, Activation::Tanh, 0), data, {}), InvalidArgument);
  CHECK_THROWS_AS(train(AffineBinary(Vector::Ones(2), 0.0), data, {}), InvalidArgument);
  const Dataset three = generate_dataset("grid-multiclass", 30, 1);
  CHECK_THROWS_AS(train(Mlp({2, 4, 2}, Activation::Tanh, 0), three, {}), InvalidArgument);
  TrainConfig bad;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(train(Mlp({2, 4, 2}, Activation::Tanh, 0), data, bad), InvalidArgument);
}

TEST_CASE("loss gradient matches finite differences in the weights") {
  const Dataset data = generate_dataset("grid-multiclass", 30, 2);
  Mlp net({2, 5, 3}, Activation::Softplus, 6);
  std::vector<Vector> pts;
  std::vector<ClassIndex> lab;
  for (const auto& s : data.samples) {
    pts.push_back(s.point);
    lab.push_back(s.label);
  }
  std::vector<DenseLayer> grads;
  training_loss(net, pts, lab, 1e-3, &grads);
  const double h = 1e-6;
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    double& w = net.mutable_layers()[l].weights(0, 1);
    const double w0 = w;
    w = w0 + h;
    const double up = training_loss(net, pts, lab, 1e-3, nullptr);
    w = w0 - h;
    const double down = training_loss(net, pts, lab, 1e-3, nullptr);
    w = w0;
    CHECK(grads[l].weights(0, 1) == doctest::Approx((up - down) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("adversarial examples respect the norm cap") {
  const Dataset data = generate_dataset("two-gaussians", 60, 3);
  TrainConfig cfg;
  cfg.epochs = 200;
  const Mlp net = train(Mlp({2, 8, 2}, Activation::Tanh, 7), data, cfg).model;
  const auto capped = adversarial_examples(net, data, at_attack(), 0.3);
  for (std::size_t i = 0; i < data.size(); ++i) CHECK((capped[i] - data.samples[i].point).norm() <= 0.3 + 1e-12);

  // An inactive cap leaves the attack output untouched.
  std::vector<Vector> pts;
  for (const auto& s : data.samples) pts.push_back(s.point);
  const auto results = attack_batch(net, pts, at_attack());
  const auto loose = adversarial_examples(net, data, at_attack(), 1e9);
  for (std::size_t i = 0; i < data.size(); ++i)
    if (results[i].original_label == data.samples[i].label)
      CHECK(loose[i] == pts[i] + results[i].perturbation);
}

TEST_CASE("adversarial fine-tuning validates its inputs") {
  const Dataset data = generate_dataset("two-gaussians", 20, 3);
  const Mlp net({2, 4, 2}, Activation::Tanh, 1);
  CHECK_THROWS_AS(adversarial_fine_tune(net, data, at_attack(), 0.0, 1, 0.1), InvalidArgument);
  AttackConfig loose;
  loose.max_outer_iters = 50;
  CHECK_THROWS_AS(adversarial_fine_tune(net, data, loose, 1.0, 1, 0.1), InvalidArgument);
}
