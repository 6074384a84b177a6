// minperturb command-line front end.
//
//   minperturb train    --dataset two-gaussians --layers 2,8,2 --seed 7
//   minperturb attack   --config exp.json [--seed N] [--out-dir DIR]
//   minperturb diagnose --config exp.json [--results out/report.json]
//   minperturb at-train --config exp.json
//   minperturb oracle   --config exp.json
//
// Exit status: 0 ok, 1 usage or config error, 2 numerical failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "minperturb/harness.hpp"

namespace mp = minperturb;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitNumeric = 2;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

void add_common(CLI::App* sub, Common& c, bool config_required) {
  auto* opt = sub->add_option("--config", c.config, "experiment config (JSON)");
  if (config_required) opt->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "override the global seed");
  sub->add_option("--out-dir", c.out_dir, "override the output directory");
}

mp::ExperimentConfig load(const Common& c) {
  return mp::with_overrides(mp::load_experiment(c.config), c.seed, c.out_dir);
}

std::vector<std::size_t> parse_layers(const std::string& text) {
  std::vector<std::size_t> sizes;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != item.size() || v == 0) throw mp::InvalidArgument("--layers: bad size '" + item + "'");
    sizes.push_back(v);
  }
  if (sizes.size() < 2) throw mp::InvalidArgument("--layers needs at least an input and an output size");
  return sizes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-norm adversarial perturbations: DeepFool and SuperDeepFool"};
  app.set_version_flag("--version", std::string(mp::kVersion));
  app.require_subcommand(1);

  Common train_opts;
  std::string dataset = "two-gaussians";
  std::size_t size = 200;
  std::string layers;
  std::string activation = "tanh";
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  std::string model_out;
  auto* train = app.add_subcommand("train", "train an MLP and write its model file");
  add_common(train, train_opts, false);
  train->add_option("--dataset", dataset, "synthetic dataset name");
  train->add_option("--size", size, "number of training samples");
  train->add_option("--layers", layers, "comma-separated layer sizes, e.g. 2,8,2");
  train->add_option("--activation", activation, "tanh, softplus or relu");
  train->add_option("--epochs", epochs, "full-batch gradient steps");
  train->add_option("--lr", lr, "learning rate");
  train->add_option("--out", model_out, "model file name inside the output directory");

  Common attack_opts;
  auto* attack = app.add_subcommand("attack", "run the configured attacks over a dataset");
  add_common(attack, attack_opts, true);

  Common diag_opts;
  std::string results;
  auto* diagnose = app.add_subcommand("diagnose", "cosine, gamma-curve and curvature data");
  add_common(diagnose, diag_opts, true);
  diagnose->add_option("--results", results, "report.json from a previous attack run");

  Common at_opts;
  auto* at_train = app.add_subcommand("at-train", "adversarial fine-tuning with SDF examples");
  add_common(at_train, at_opts, true);

  Common oracle_opts;
  auto* oracle = app.add_subcommand("oracle", "exact or scanned minimal perturbations");
  add_common(oracle, oracle_opts, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train) {
      mp::ExperimentConfig cfg;
      if (!train_opts.config.empty()) {
        cfg = mp::load_experiment(train_opts.config);
      } else {
        if (layers.empty()) {
          std::cerr << "train: --layers is required without --config\n" << train->help();
          return kExitConfig;
        }
        nlohmann::json doc;
        doc["model"] = {{"kind", "mlp"}, {"layer_sizes", parse_layers(layers)}, {"activation", activation}};
        doc["dataset"] = {{"name", dataset}, {"size", size}};
        doc["training"] = nlohmann::json::object();
        if (epochs) doc["training"]["epochs"] = *epochs;
        if (lr) doc["training"]["learning_rate"] = *lr;
        if (!model_out.empty()) doc["model_out"] = model_out;
        cfg = mp::parse_experiment(doc);
      }
      cfg = mp::with_overrides(cfg, train_opts.seed, train_opts.out_dir);
      mp::run_train(cfg, std::cout);
    } else if (*attack) {
      mp::run_attacks(load(attack_opts), std::cout);
    } else if (*diagnose) {
      mp::run_diagnose(load(diag_opts), results, std::cout);
    } else if (*at_train) {
      mp::run_at_train(load(at_opts), std::cout);
    } else if (*oracle) {
      mp::run_oracle(load(oracle_opts), std::cout);
    }
  } catch (const mp::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const mp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
