#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "minperturb/core.hpp"

namespace minperturb {

enum class ClassifierKind { AffineBinary, AffineMulticlass, QuadricBinary, Mlp };

std::string_view to_string(ClassifierKind kind);
ClassifierKind classifier_kind_from_string(std::string_view name);

// A differentiable map from R^d to C class scores. C == 1 denotes a binary
// classifier with a signed score F; its predicted label is 1 when F > 0 and
// 0 otherwise.
//
// Implementations are immutable after construction, so one instance may be
// shared by any number of threads.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual ClassifierKind kind() const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t num_classes() const = 0;

  virtual Vector logits(const Vector& x) const = 0;
  // Gradient of score k with respect to the input.
  virtual Vector gradient(const Vector& x, ClassIndex k) const = 0;
  // Row k holds gradient(x, k). Costs num_classes() gradient evaluations.
  virtual Matrix jacobian(const Vector& x) const;

  virtual std::unique_ptr<Classifier> clone() const = 0;

  bool is_binary() const { return num_classes() == 1; }

 protected:
  void check_input(const Vector& x) const;
  void check_class(ClassIndex k) const;
};

// Lowest index wins ties. For binary models this is 1 iff F(x) > 0.
ClassIndex predicted_label(const Classifier& clf, const Vector& x);

// Whether the top score is shared by two classes (never true for binary).
bool has_argmax_tie(const Classifier& clf, const Vector& x);

// Adversarial means "label differs from original", or "label equals target"
// when a target is given.
bool is_adversarial(const Classifier& clf, const Vector& x, ClassIndex original,
                    std::optional<ClassIndex> target = std::nullopt);

class AffineBinary final : public Classifier {
 public:
  AffineBinary(Vector w, double b);

  ClassifierKind kind() const override { return ClassifierKind::AffineBinary; }
  std::size_t input_dim() const override { return std::size_t(w_.size()); }
  std::size_t num_classes() const override { return 1; }
  Vector logits(const Vector& x) const override;
  Vector gradient(const Vector& x, ClassIndex k) const override;
  std::unique_ptr<Classifier> clone() const override;

  const Vector& weights() const { return w_; }
  double bias() const { return b_; }

 private:
  Vector w_;
  double b_;
};

class AffineMulticlass final : public Classifier {
 public:
  AffineMulticlass(Matrix W, Vector b);

  ClassifierKind kind() const override { return ClassifierKind::AffineMulticlass; }
  std::size_t input_dim() const override { return std::size_t(W_.cols()); }
  std::size_t num_classes() const override { return std::size_t(W_.rows()); }
  Vector logits(const Vector& x) const override;
  Vector gradient(const Vector& x, ClassIndex k) const override;
  Matrix jacobian(const Vector& x) const override;
  std::unique_ptr<Classifier> clone() const override;

  const Matrix& weights() const { return W_; }
  const Vector& bias() const { return b_; }
  // Set when two rows share both weights and bias; such classes can never be
  // separated but the model is still usable.
  bool has_duplicate_classes() const { return duplicate_rows_; }

 private:
  Matrix W_;
  Vector b_;
  bool duplicate_rows_ = false;
};

// F(x) = x^T Q x - c.
class QuadricBinary final : public Classifier {
 public:
  QuadricBinary(Matrix Q, double c);

  ClassifierKind kind() const override { return ClassifierKind::QuadricBinary; }
  std::size_t input_dim() const override { return std::size_t(Q_.rows()); }
  std::size_t num_classes() const override { return 1; }
  Vector logits(const Vector& x) const override;
  Vector gradient(const Vector& x, ClassIndex k) const override;
  std::unique_ptr<Classifier> clone() const override;

  const Matrix& form() const { return Q_; }
  double level() const { return c_; }

 private:
  Matrix Q_;
  double c_;
};

enum class Activation { Tanh, Softplus, Relu };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
};

// Fully connected network; every layer except the last applies the
// activation. Input gradients and parameter gradients are both computed by
// reverse accumulation of adjoints.
//
// ReLU uses the right derivative at 0: a unit with pre-activation >= 0 is
// treated as active.
class Mlp final : public Classifier {
 public:
  Mlp(std::vector<std::size_t> layer_sizes, Activation activation, std::uint64_t seed);
  Mlp(std::vector<DenseLayer> layers, Activation activation, std::uint64_t seed);

  ClassifierKind kind() const override { return ClassifierKind::Mlp; }
  std::size_t input_dim() const override;
  std::size_t num_classes() const override;
  Vector logits(const Vector& x) const override;
  Vector gradient(const Vector& x, ClassIndex k) const override;
  Matrix jacobian(const Vector& x) const override;
  std::unique_ptr<Classifier> clone() const override;

  std::vector<std::size_t> layer_sizes() const;
  Activation activation() const { return activation_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  // Forward pass retaining what the backward pass needs.
  struct Tape {
    std::vector<Vector> pre;   // pre-activation of each layer
    std::vector<Vector> post;  // post[0] is the input; post[i+1] is layer i output
  };
  Tape forward(const Vector& x) const;

  // Given d(loss)/d(logits), accumulate parameter gradients into `grads`
  // (same shapes as layers()) and return d(loss)/d(input).
  Vector backward(const Tape& tape, const Vector& logit_adjoint,
                  std::vector<DenseLayer>* grads) const;

 private:
  std::vector<DenseLayer> layers_;
  Activation activation_;
  std::uint64_t seed_;
};

std::unique_ptr<Classifier> make_affine_binary(Vector w, double b);
std::unique_ptr<Classifier> make_affine_multiclass(Matrix W, Vector b);
std::unique_ptr<Classifier> make_quadric_binary(Matrix Q, double c);
std::unique_ptr<Mlp> make_mlp(const std::vector<std::size_t>& layer_sizes,
                              Activation activation, std::uint64_t seed);

}  // namespace minperturb
