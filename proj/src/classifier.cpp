#include "minperturb/classifier.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace minperturb {

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::AffineBinary: return "affine-binary";
    case ClassifierKind::AffineMulticlass: return "affine-multiclass";
    case ClassifierKind::QuadricBinary: return "quadric-binary";
    case ClassifierKind::Mlp: return "mlp";
  }
  return "unknown";
}

ClassifierKind classifier_kind_from_string(std::string_view name) {
  if (name == "affine-binary") return ClassifierKind::AffineBinary;
  if (name == "affine-multiclass") return ClassifierKind::AffineMulticlass;
  if (name == "quadric-binary") return ClassifierKind::QuadricBinary;
  if (name == "mlp") return ClassifierKind::Mlp;
  throw InvalidArgument("unknown classifier kind '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Softplus: return "softplus";
    case Activation::Relu: return "relu";
  }
  return "unknown";
}

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "softplus") return Activation::Softplus;
  if (name == "relu") return Activation::Relu;
  throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

Matrix Classifier::jacobian(const Vector& x) const {
  Matrix J(num_classes(), input_dim());
  for (ClassIndex k = 0; k < num_classes(); ++k) J.row(Eigen::Index(k)) = gradient(x, k);
  return J;
}

void Classifier::check_input(const Vector& x) const {
  if (std::size_t(x.size()) != input_dim()) {
    std::ostringstream msg;
    msg << "input has dimension " << x.size() << ", classifier expects " << input_dim();
    throw InvalidArgument(msg.str());
  }
}

void Classifier::check_class(ClassIndex k) const {
  if (k >= num_classes()) throw InvalidArgument("class index out of range");
}

ClassIndex predicted_label(const Classifier& clf, const Vector& x) {
  const Vector z = clf.logits(x);
  if (clf.is_binary()) return z[0] > 0.0 ? 1 : 0;
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < z.size(); ++k)
    if (z[k] > z[best]) best = k;
  return ClassIndex(best);
}

bool has_argmax_tie(const Classifier& clf, const Vector& x) {
  if (clf.is_binary()) return false;
  const Vector z = clf.logits(x);
  const double top = z.maxCoeff();
  return (z.array() == top).count() > 1;
}

bool is_adversarial(const Classifier& clf, const Vector& x, ClassIndex original,
                    std::optional<ClassIndex> target) {
  const ClassIndex label = predicted_label(clf, x);
  return target ? label == *target : label != original;
}

// ---------------------------------------------------------------------------

AffineBinary::AffineBinary(Vector w, double b) : w_(std::move(w)), b_(b) {
  if (w_.size() == 0) throw InvalidArgument("affine-binary: empty weight vector");
  if (!w_.allFinite() || !std::isfinite(b_)) throw InvalidArgument("affine-binary: non-finite parameters");
  if (w_.isZero(0.0)) throw InvalidArgument("affine-binary: zero weight vector");
}

Vector AffineBinary::logits(const Vector& x) const {
  check_input(x);
  Vector z(1);
  z[0] = w_.dot(x) + b_;
  return z;
}

Vector AffineBinary::gradient(const Vector& x, ClassIndex k) const {
  check_input(x);
  check_class(k);
  return w_;
}

std::unique_ptr<Classifier> AffineBinary::clone() const {
  return std::make_unique<AffineBinary>(*this);
}

AffineMulticlass::AffineMulticlass(Matrix W, Vector b) : W_(std::move(W)), b_(std::move(b)) {
  if (W_.rows() < 2) throw InvalidArgument("affine-multiclass: needs at least 2 classes");
  if (W_.cols() == 0) throw InvalidArgument("affine-multiclass: zero input dimension");
  if (b_.size() != W_.rows()) throw InvalidArgument("affine-multiclass: bias length must equal class count");
  if (!W_.allFinite() || !b_.allFinite()) throw InvalidArgument("affine-multiclass: non-finite parameters");
  for (Eigen::Index i = 0; i < W_.rows() && !duplicate_rows_; ++i)
    for (Eigen::Index j = i + 1; j < W_.rows(); ++j)
      if (W_.row(i) == W_.row(j) && b_[i] == b_[j]) {
        duplicate_rows_ = true;
        break;
      }
}

Vector AffineMulticlass::logits(const Vector& x) const {
  check_input(x);
  return W_ * x + b_;
}

Vector AffineMulticlass::gradient(const Vector& x, ClassIndex k) const {
  check_input(x);
  check_class(k);
  return W_.row(Eigen::Index(k)).transpose();
}

Matrix AffineMulticlass::jacobian(const Vector& x) const {
  check_input(x);
  return W_;
}

std::unique_ptr<Classifier> AffineMulticlass::clone() const {
  return std::make_unique<AffineMulticlass>(*this);
}

QuadricBinary::QuadricBinary(Matrix Q, double c) : Q_(std::move(Q)), c_(c) {
  if (Q_.rows() == 0 || Q_.rows() != Q_.cols()) throw InvalidArgument("quadric-binary: Q must be square");
  if (!Q_.allFinite() || !std::isfinite(c_)) throw InvalidArgument("quadric-binary: non-finite parameters");
  const double scale = std::max(1.0, Q_.cwiseAbs().maxCoeff());
  if ((Q_ - Q_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InvalidArgument("quadric-binary: Q must be symmetric");
  if (!(c_ > 0.0)) throw InvalidArgument("quadric-binary: level c must be positive");
}

Vector QuadricBinary::logits(const Vector& x) const {
  check_input(x);
  Vector z(1);
  z[0] = x.dot(Q_ * x) - c_;
  return z;
}

Vector QuadricBinary::gradient(const Vector& x, ClassIndex k) const {
  check_input(x);
  check_class(k);
  return 2.0 * (Q_ * x);
}

std::unique_ptr<Classifier> QuadricBinary::clone() const {
  return std::make_unique<QuadricBinary>(*this);
}

// ---------------------------------------------------------------------------

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::Tanh: return std::tanh(z);
    case Activation::Softplus: return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    case Activation::Relu: return z >= 0.0 ? z : 0.0;
  }
  return z;
}

double activate_derivative(Activation a, double z) {
  switch (a) {
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::Softplus:
      return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    case Activation::Relu: return z >= 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

void validate_layers(const std::vector<DenseLayer>& layers) {
  if (layers.size() < 2) throw InvalidArgument("mlp: at least one hidden layer is required");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& L = layers[i];
    if (L.weights.rows() == 0 || L.weights.cols() == 0) throw InvalidArgument("mlp: empty layer");
    if (L.bias.size() != L.weights.rows()) throw InvalidArgument("mlp: bias/weight shape mismatch");
    if (i > 0 && L.weights.cols() != layers[i - 1].weights.rows())
      throw InvalidArgument("mlp: consecutive layer shapes do not chain");
    if (!L.weights.allFinite() || !L.bias.allFinite()) throw InvalidArgument("mlp: non-finite parameters");
  }
}

}  // namespace

Mlp::Mlp(std::vector<std::size_t> layer_sizes, Activation activation, std::uint64_t seed)
    : activation_(activation), seed_(seed) {
  if (layer_sizes.empty()) throw InvalidArgument("mlp: empty layer list");
  if (layer_sizes.size() < 3) throw InvalidArgument("mlp: at least one hidden layer is required");
  for (auto s : layer_sizes)
    if (s == 0) throw InvalidArgument("mlp: layer sizes must be positive");

  // Glorot-uniform weights, zero biases.
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    const auto in = Eigen::Index(layer_sizes[i]);
    const auto out = Eigen::Index(layer_sizes[i + 1]);
    const double limit = std::sqrt(6.0 / double(in + out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer L{Matrix(out, in), Vector::Zero(out)};
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) L.weights(r, c) = dist(rng);
    layers_.push_back(std::move(L));
  }
}

Mlp::Mlp(std::vector<DenseLayer> layers, Activation activation, std::uint64_t seed)
    : layers_(std::move(layers)), activation_(activation), seed_(seed) {
  validate_layers(layers_);
}

std::size_t Mlp::input_dim() const { return std::size_t(layers_.front().weights.cols()); }
std::size_t Mlp::num_classes() const { return std::size_t(layers_.back().weights.rows()); }

std::vector<std::size_t> Mlp::layer_sizes() const {
  std::vector<std::size_t> sizes{input_dim()};
  for (const auto& L : layers_) sizes.push_back(std::size_t(L.weights.rows()));
  return sizes;
}

Mlp::Tape Mlp::forward(const Vector& x) const {
  check_input(x);
  Tape tape;
  tape.pre.reserve(layers_.size());
  tape.post.reserve(layers_.size() + 1);
  tape.post.push_back(x);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Vector z = layers_[i].weights * tape.post.back() + layers_[i].bias;
    Vector a = z;
    if (i + 1 < layers_.size()) a = z.unaryExpr([this](double v) { return activate(activation_, v); });
    tape.pre.push_back(std::move(z));
    tape.post.push_back(std::move(a));
  }
  return tape;
}

Vector Mlp::backward(const Tape& tape, const Vector& logit_adjoint,
                     std::vector<DenseLayer>* grads) const {
  Vector adj = logit_adjoint;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (i + 1 < layers_.size())
      adj = adj.cwiseProduct(
          tape.pre[i].unaryExpr([this](double v) { return activate_derivative(activation_, v); }));
    if (grads) {
      (*grads)[i].weights.noalias() += adj * tape.post[i].transpose();
      (*grads)[i].bias += adj;
    }
    adj = layers_[i].weights.transpose() * adj;
  }
  return adj;
}

Vector Mlp::logits(const Vector& x) const { return forward(x).post.back(); }

Vector Mlp::gradient(const Vector& x, ClassIndex k) const {
  check_class(k);
  const Tape tape = forward(x);
  Vector seed = Vector::Zero(Eigen::Index(num_classes()));
  seed[Eigen::Index(k)] = 1.0;
  return backward(tape, seed, nullptr);
}

Matrix Mlp::jacobian(const Vector& x) const {
  const Tape tape = forward(x);
  Matrix J(num_classes(), input_dim());
  for (ClassIndex k = 0; k < num_classes(); ++k) {
    Vector seed = Vector::Zero(Eigen::Index(num_classes()));
    seed[Eigen::Index(k)] = 1.0;
    J.row(Eigen::Index(k)) = backward(tape, seed, nullptr);
  }
  return J;
}

std::unique_ptr<Classifier> Mlp::clone() const { return std::make_unique<Mlp>(*this); }

std::unique_ptr<Classifier> make_affine_binary(Vector w, double b) {
  return std::make_unique<AffineBinary>(std::move(w), b);
}

std::unique_ptr<Classifier> make_affine_multiclass(Matrix W, Vector b) {
  return std::make_unique<AffineMulticlass>(std::move(W), std::move(b));
}

std::unique_ptr<Classifier> make_quadric_binary(Matrix Q, double c) {
  return std::make_unique<QuadricBinary>(std::move(Q), c);
}

std::unique_ptr<Mlp> make_mlp(const std::vector<std::size_t>& layer_sizes, Activation activation,
                              std::uint64_t seed) {
  return std::make_unique<Mlp>(layer_sizes, activation, seed);
}

}  // namespace minperturb
