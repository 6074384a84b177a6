#pragma once

#include <memory>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "minperturb/classifier.hpp"

namespace minperturb {

// Model document:
//   {"kind": "...", "layer_sizes": [d, ..., C], "activation": "tanh" | null,
//    "weights": [W_0, ...], "biases": [b_0, ...], "seed": s}
// Each W_i is a row-major nested array. Affine and quadric models store a
// single matrix: w as 1 x d, W as C x d, Q as d x d with bias [-c].
nlohmann::json model_to_json(const Classifier& clf);
std::unique_ptr<Classifier> model_from_json(const nlohmann::json& doc);

void save_model(const Classifier& clf, const std::string& path);
std::unique_ptr<Classifier> load_model(const std::string& path);

}  // namespace minperturb
