#include "minperturb/model_io.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace minperturb {

namespace {

using nlohmann::json;

json matrix_json(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Matrix json_matrix(const json& j) {
  if (!j.is_array() || j.empty()) throw InvalidArgument("model json: matrix must be a non-empty nested array");
  const auto rows = Eigen::Index(j.size());
  const auto cols = Eigen::Index(j.at(0).size());
  Matrix M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j.at(std::size_t(r));
    if (Eigen::Index(row.size()) != cols) throw InvalidArgument("model json: ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = row.at(std::size_t(c)).get<double>();
  }
  return M;
}

Vector json_vector(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), Eigen::Index(v.size()));
}

double json_scalar(const json& j) {
  const Vector v = json_vector(j);
  if (v.size() != 1) throw InvalidArgument("model json: expected a single bias value");
  return v[0];
}

}  // namespace

json model_to_json(const Classifier& clf) {
  json doc;
  doc["kind"] = std::string(to_string(clf.kind()));
  doc["layer_sizes"] = std::vector<std::size_t>{clf.input_dim(), clf.num_classes()};
  doc["activation"] = nullptr;
  doc["seed"] = 0;
  switch (clf.kind()) {
    case ClassifierKind::AffineBinary: {
      const auto& a = static_cast<const AffineBinary&>(clf);
      doc["weights"] = json::array({matrix_json(a.weights().transpose())});
      doc["biases"] = json::array({json::array({a.bias()})});
      break;
    }
    case ClassifierKind::AffineMulticlass: {
      const auto& a = static_cast<const AffineMulticlass&>(clf);
      doc["weights"] = json::array({matrix_json(a.weights())});
      doc["biases"] = json::array({vector_json(a.bias())});
      break;
    }
    case ClassifierKind::QuadricBinary: {
      const auto& q = static_cast<const QuadricBinary&>(clf);
      doc["weights"] = json::array({matrix_json(q.form())});
      doc["biases"] = json::array({json::array({-q.level()})});
      break;
    }
    case ClassifierKind::Mlp: {
      const auto& m = static_cast<const Mlp&>(clf);
      doc["layer_sizes"] = m.layer_sizes();
      doc["activation"] = std::string(to_string(m.activation()));
      doc["seed"] = m.seed();
      json W = json::array();
      json b = json::array();
      for (const auto& L : m.layers()) {
        W.push_back(matrix_json(L.weights));
        b.push_back(vector_json(L.bias));
      }
      doc["weights"] = std::move(W);
      doc["biases"] = std::move(b);
      break;
    }
  }
  return doc;
}

std::unique_ptr<Classifier> model_from_json(const json& doc) {
  try {
    const ClassifierKind kind = classifier_kind_from_string(doc.at("kind").get<std::string>());
    const json& W = doc.at("weights");
    const json& b = doc.at("biases");
    if (!W.is_array() || !b.is_array() || W.size() != b.size() || W.empty())
      throw InvalidArgument("model json: weights and biases must be equal-length lists");
    switch (kind) {
      case ClassifierKind::AffineBinary: {
        const Matrix w = json_matrix(W.at(0));
        if (w.rows() != 1) throw InvalidArgument("model json: affine-binary weight must be 1 x d");
        return make_affine_binary(w.row(0).transpose(), json_scalar(b.at(0)));
      }
      case ClassifierKind::AffineMulticlass:
        return make_affine_multiclass(json_matrix(W.at(0)), json_vector(b.at(0)));
      case ClassifierKind::QuadricBinary:
        return make_quadric_binary(json_matrix(W.at(0)), -json_scalar(b.at(0)));
      case ClassifierKind::Mlp: {
        std::vector<DenseLayer> layers;
        for (std::size_t i = 0; i < W.size(); ++i) layers.push_back({json_matrix(W.at(i)), json_vector(b.at(i))});
        auto model = std::make_unique<Mlp>(std::move(layers),
                                           activation_from_string(doc.at("activation").get<std::string>()),
                                           doc.value("seed", std::uint64_t{0}));
        if (doc.contains("layer_sizes") && doc.at("layer_sizes").get<std::vector<std::size_t>>() != model->layer_sizes())
          throw InvalidArgument("model json: layer_sizes disagree with the weight shapes");
        return model;
      }
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("model json: ") + e.what());
  }
  throw InvalidArgument("model json: unsupported kind");
}

void save_model(const Classifier& clf, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file '" + path + "'");
  out << model_to_json(clf).dump(2) << '\n';
}

std::unique_ptr<Classifier> load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read model file '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InvalidArgument("model file '" + path + "' is not valid JSON: " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace minperturb
