#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "minperturb/attacks.hpp"
#include "minperturb/dataset.hpp"
#include "minperturb/diagnostics.hpp"
#include "minperturb/oracle.hpp"
#include "minperturb/training.hpp"

namespace minperturb {

inline constexpr const char* kVersion = "0.1.0";

struct DatasetSpec {
  std::string name = "two-gaussians";
  std::size_t size = 100;
  std::optional<std::uint64_t> seed;  // falls back to the experiment seed
  DatasetOptions options;
  std::string path;  // CSV file; overrides the generator when set
};

struct NamedAttack {
  std::string label;
  AttackConfig config;
};

struct GammaSpec {
  double start = 0.2;
  double stop = 1.0;
  double step = 0.01;
};

struct DiagnosticsToggles {
  bool cosine = true;
  std::optional<GammaSpec> gamma = GammaSpec{};
  bool curvature = false;
  std::size_t curvature_iters = 50;
  double curvature_h = 1e-4;
};

struct AtSpec {
  std::optional<double> norm_cap;
  double norm_cap_factor = 1.5;  // times the pre-training median SDF norm
  std::size_t epochs = 10;
  double learning_rate = 0.1;
  AttackConfig attack;       // SDF(inf, 1) capped at 6 rounds unless overridden
  AttackConfig eval_attack;  // measures robustness and the cap: SDF(inf, 1) with line search
  std::optional<DatasetSpec> eval_dataset;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  nlohmann::json model;  // {"path": ...} or an inline model description
  DatasetSpec dataset;
  TrainConfig training;
  std::vector<NamedAttack> attacks;
  bool oracle = false;
  DiagnosticsToggles diagnostics;
  AtSpec at;
  std::string model_out = "model.json";

  // The document this config was parsed from, with overrides applied.
  nlohmann::json echo;
};

// Throws InvalidArgument on schema errors or duplicate attack labels.
ExperimentConfig parse_experiment(const nlohmann::json& doc);
ExperimentConfig load_experiment(const std::string& path);
// Re-parse after changing the seed or output directory.
ExperimentConfig with_overrides(const ExperimentConfig& cfg, std::optional<std::uint64_t> seed,
                                std::optional<std::string> out_dir);

Dataset resolve_dataset(const DatasetSpec& spec, std::uint64_t fallback_seed);
// Loads, builds, or (for an inline mlp with a "train" block) trains the model.
std::unique_ptr<Classifier> resolve_model(const ExperimentConfig& cfg);

struct AttackRun {
  std::string label;
  AttackConfig config;
  std::vector<AttackResult> results;
  DiagnosticsReport summary;
  std::vector<std::optional<double>> oracle_norm;  // filled when cfg.oracle
};

struct RunReport {
  std::vector<AttackRun> attacks;
  double wall_time_seconds = 0.0;
  nlohmann::json config_echo;
};

nlohmann::json report_to_json(const RunReport& report);
void write_results_csv(std::ostream& out, const RunReport& report);

// The five CLI pipelines. Each writes its files under cfg.out_dir and
// prints a short human-readable summary to `log`.
TrainResult run_train(const ExperimentConfig& cfg, std::ostream& log);
RunReport run_attacks(const ExperimentConfig& cfg, std::ostream& log);

struct DiagnoseOutput {
  std::vector<CosineRow> cosines;
  std::vector<GammaRow> gamma;
  std::optional<CurvatureReport> curvature;
};
// Uses prior results from a report.json when `results_path` is non-empty,
// otherwise runs the configured attacks inline.
DiagnoseOutput run_diagnose(const ExperimentConfig& cfg, const std::string& results_path, std::ostream& log);

struct AtSummary {
  double norm_cap = 0.0;
  double pre_median_l2 = 0.0;
  double post_median_l2 = 0.0;
  double pre_mean_curvature = 0.0;
  double post_mean_curvature = 0.0;
  double pre_accuracy = 0.0;
  double post_accuracy = 0.0;
};
AtSummary run_at_train(const ExperimentConfig& cfg, std::ostream& log);

std::vector<OracleSolution> run_oracle(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace minperturb
