#include "minperturb/harness.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>

#include "minperturb/batch.hpp"
#include "minperturb/format.hpp"
#include "minperturb/model_io.hpp"

namespace minperturb {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw InvalidArgument(where + " must be a JSON object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw InvalidArgument(where + ": unknown field '" + key + "'");
}

DatasetSpec parse_dataset(const json& j) {
  check_keys(j, {"name", "size", "seed", "dim", "num_classes", "path"}, "dataset");
  DatasetSpec d;
  d.name = j.value("name", d.name);
  d.size = j.value("size", d.size);
  if (j.contains("seed") && !j.at("seed").is_null()) d.seed = j.at("seed").get<std::uint64_t>();
  d.options.dim = j.value("dim", d.options.dim);
  d.options.num_classes = j.value("num_classes", d.options.num_classes);
  d.path = j.value("path", std::string{});
  return d;
}

TrainConfig parse_training(const json& j) {
  check_keys(j, {"epochs", "learning_rate", "seed", "l2_weight_decay"}, "training");
  TrainConfig t;
  t.epochs = j.value("epochs", t.epochs);
  t.learning_rate = j.value("learning_rate", t.learning_rate);
  t.seed = j.value("seed", t.seed);
  t.l2_weight_decay = j.value("l2_weight_decay", t.l2_weight_decay);
  t.validate();
  return t;
}

AttackConfig default_at_attack() {
  AttackConfig a;
  a.method = Method::SuperDeepFool;
  a.max_outer_iters = 6;
  return a;
}

AttackConfig default_eval_attack() {
  AttackConfig a;
  a.method = Method::SuperDeepFool;
  a.line_search = true;
  return a;
}

Matrix json_matrix(const json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty() || rows.front().empty()) throw InvalidArgument("model: empty matrix");
  Matrix M(Eigen::Index(rows.size()), Eigen::Index(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size()) throw InvalidArgument("model: ragged matrix");
    for (std::size_t c = 0; c < rows[r].size(); ++c) M(Eigen::Index(r), Eigen::Index(c)) = rows[r][c];
  }
  return M;
}

Vector json_vector(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), Eigen::Index(v.size()));
}

std::filesystem::path out_path(const ExperimentConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return std::filesystem::path(cfg.out_dir) / name;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write '" + p.string() + "'");
  return f;
}

std::vector<Vector> points_of(const Dataset& data) {
  std::vector<Vector> pts;
  for (const auto& s : data.samples) pts.push_back(s.point);
  return pts;
}

void check_model_data(const Classifier& clf, const Dataset& data) {
  if (data.dim() != clf.input_dim())
    throw InvalidArgument("dataset dimension " + std::to_string(data.dim()) + " does not match model input " +
                          std::to_string(clf.input_dim()));
}

double attack_norm(const AttackResult& r, const AttackConfig& c) {
  return c.norm_mode == NormMode::L2 ? r.l2_norm : r.linf_norm;
}

}  // namespace

ExperimentConfig parse_experiment(const json& doc) {
  check_keys(doc, {"seed", "out_dir", "model", "dataset", "training", "attacks", "oracle", "diagnostics", "at",
                   "model_out"},
             "config");
  ExperimentConfig cfg;
  try {
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.out_dir = doc.value("out_dir", cfg.out_dir);
    cfg.model_out = doc.value("model_out", cfg.model_out);
    if (doc.contains("model")) cfg.model = doc.at("model");
    if (doc.contains("dataset")) cfg.dataset = parse_dataset(doc.at("dataset"));
    if (doc.contains("training")) cfg.training = parse_training(doc.at("training"));
    cfg.oracle = doc.value("oracle", false);

    std::set<std::string> labels;
    for (const auto& a : doc.value("attacks", json::array())) {
      NamedAttack na;
      na.label = a.value("label", std::string(to_string(a.value("method", std::string("sdf")) == "df"
                                                            ? Method::DeepFool
                                                            : Method::SuperDeepFool)));
      na.config = a.get<AttackConfig>();
      if (na.label.empty() || na.label.find_first_of(",\"\n") != std::string::npos)
        throw InvalidArgument("attack label must be non-empty and CSV-safe");
      if (!labels.insert(na.label).second) throw InvalidArgument("duplicate attack label '" + na.label + "'");
      cfg.attacks.push_back(std::move(na));
    }

    if (doc.contains("diagnostics")) {
      const json& d = doc.at("diagnostics");
      check_keys(d, {"cosine", "gamma", "curvature", "curvature_iters", "curvature_h"}, "diagnostics");
      cfg.diagnostics.cosine = d.value("cosine", true);
      if (d.contains("gamma")) {
        if (d.at("gamma").is_null() || d.at("gamma") == false) {
          cfg.diagnostics.gamma.reset();
        } else {
          const json& g = d.at("gamma");
          check_keys(g, {"start", "stop", "step"}, "diagnostics.gamma");
          GammaSpec gs;
          gs.start = g.value("start", gs.start);
          gs.stop = g.value("stop", gs.stop);
          gs.step = g.value("step", gs.step);
          gamma_grid(gs.start, gs.stop, gs.step);
          cfg.diagnostics.gamma = gs;
        }
      }
      cfg.diagnostics.curvature = d.value("curvature", false);
      cfg.diagnostics.curvature_iters = d.value("curvature_iters", cfg.diagnostics.curvature_iters);
      cfg.diagnostics.curvature_h = d.value("curvature_h", cfg.diagnostics.curvature_h);
    }

    cfg.at.attack = default_at_attack();
    cfg.at.eval_attack = default_eval_attack();
    if (doc.contains("at")) {
      const json& a = doc.at("at");
      check_keys(a, {"norm_cap", "norm_cap_factor", "epochs", "learning_rate", "attack", "eval_attack", "eval_dataset"},
                 "at");
      if (a.contains("norm_cap")) {
        cfg.at.norm_cap = a.at("norm_cap").get<double>();
        if (!(*cfg.at.norm_cap > 0.0)) throw InvalidArgument("at: norm_cap must be positive");
      }
      cfg.at.norm_cap_factor = a.value("norm_cap_factor", cfg.at.norm_cap_factor);
      if (!(cfg.at.norm_cap_factor > 0.0)) throw InvalidArgument("at: norm_cap_factor must be positive");
      cfg.at.epochs = a.value("epochs", cfg.at.epochs);
      cfg.at.learning_rate = a.value("learning_rate", cfg.at.learning_rate);
      if (a.contains("attack")) {
        json attack = default_at_attack();
        attack.update(a.at("attack"));
        cfg.at.attack = attack.get<AttackConfig>();
      }
      if (a.contains("eval_attack")) {
        json attack = default_eval_attack();
        attack.update(a.at("eval_attack"));
        cfg.at.eval_attack = attack.get<AttackConfig>();
      }
      if (a.contains("eval_dataset")) cfg.at.eval_dataset = parse_dataset(a.at("eval_dataset"));
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  cfg.echo = doc;
  cfg.echo["seed"] = cfg.seed;
  cfg.echo["out_dir"] = cfg.out_dir;
  return cfg;
}

ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot read config '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw InvalidArgument("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_experiment(doc);
}

ExperimentConfig with_overrides(const ExperimentConfig& cfg, std::optional<std::uint64_t> seed,
                                std::optional<std::string> out_dir) {
  json doc = cfg.echo;
  if (seed) doc["seed"] = *seed;
  if (out_dir) doc["out_dir"] = *out_dir;
  return parse_experiment(doc);
}

Dataset resolve_dataset(const DatasetSpec& spec, std::uint64_t fallback_seed) {
  if (!spec.path.empty()) {
    std::ifstream in(spec.path);
    if (!in) throw InvalidArgument("cannot read dataset '" + spec.path + "'");
    return read_dataset_csv(in, spec.path);
  }
  return generate_dataset(spec.name, spec.size, spec.seed.value_or(fallback_seed), spec.options);
}

std::unique_ptr<Classifier> resolve_model(const ExperimentConfig& cfg) {
  const json& m = cfg.model;
  if (m.is_null()) throw InvalidArgument("config: no model given");
  try {
    if (m.contains("path")) return load_model(m.at("path").get<std::string>());
    if (m.contains("weights")) return model_from_json(m);
    const ClassifierKind kind = classifier_kind_from_string(m.at("kind").get<std::string>());
    switch (kind) {
      case ClassifierKind::AffineBinary:
        return make_affine_binary(json_vector(m.at("w")), m.value("b", 0.0));
      case ClassifierKind::AffineMulticlass:
        return make_affine_multiclass(json_matrix(m.at("W")), json_vector(m.at("b")));
      case ClassifierKind::QuadricBinary:
        return make_quadric_binary(json_matrix(m.at("Q")), m.at("c").get<double>());
      case ClassifierKind::Mlp: {
        check_keys(m, {"kind", "layer_sizes", "activation", "seed", "train"}, "model");
        auto model = make_mlp(m.at("layer_sizes").get<std::vector<std::size_t>>(),
                              activation_from_string(m.value("activation", std::string("tanh"))),
                              m.value("seed", cfg.seed));
        if (!m.contains("train")) return model;
        const json& t = m.at("train");
        check_keys(t, {"dataset", "epochs", "learning_rate", "seed", "l2_weight_decay"}, "model.train");
        json tc = t;
        tc.erase("dataset");
        const Dataset data = resolve_dataset(parse_dataset(t.value("dataset", json::object())), cfg.seed);
        return std::make_unique<Mlp>(train(*model, data, parse_training(tc)).model);
      }
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("model: ") + e.what());
  }
  throw InvalidArgument("model: unsupported description");
}

// ---------------------------------------------------------------------------

json report_to_json(const RunReport& report) {
  json attacks = json::array();
  for (const auto& run : report.attacks) {
    json rows = json::array();
    for (std::size_t i = 0; i < run.results.size(); ++i) {
      json row = {{"sample_id", i}, {"result", run.results[i]}};
      if (i < run.oracle_norm.size()) {
        if (run.oracle_norm[i]) {
          row["oracle_norm"] = *run.oracle_norm[i];
          row["oracle_gap"] = std::abs(attack_norm(run.results[i], run.config) - *run.oracle_norm[i]);
        } else {
          row["oracle_norm"] = nullptr;
          row["oracle_gap"] = nullptr;
        }
      }
      rows.push_back(std::move(row));
    }
    attacks.push_back({{"label", run.label}, {"config", run.config}, {"summary", run.summary}, {"rows", rows}});
  }
  return {{"version", kVersion},
          {"config", report.config_echo},
          {"wall_time_seconds", report.wall_time_seconds},
          {"attacks", attacks}};
}

void write_results_csv(std::ostream& out, const RunReport& report) {
  out << "sample_id,attack,success,l2,linf,grads,iters\n";
  const std::size_t n = report.attacks.empty() ? 0 : report.attacks.front().results.size();
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& run : report.attacks) {
      const AttackResult& r = run.results[i];
      out << i << ',' << run.label << ',' << (r.success ? 1 : 0) << ',' << format_double(r.l2_norm) << ','
          << format_double(r.linf_norm) << ',' << r.gradient_evaluations << ',' << r.outer_iterations << '\n';
    }
}

TrainResult run_train(const ExperimentConfig& cfg, std::ostream& log) {
  auto model = resolve_model(cfg);
  const Dataset data = resolve_dataset(cfg.dataset, cfg.seed);
  check_model_data(*model, data);
  TrainResult res = train(*model, data, cfg.training);
  const auto path = out_path(cfg, cfg.model_out);
  save_model(res.model, path.string());
  log << "trained " << data.size() << " samples for " << cfg.training.epochs << " epochs: accuracy "
      << res.accuracy << ", loss " << res.final_loss << "\nmodel written to " << path.string() << '\n';
  return res;
}

RunReport run_attacks(const ExperimentConfig& cfg, std::ostream& log) {
  if (cfg.attacks.empty()) throw InvalidArgument("config: no attacks listed");
  const auto start = std::chrono::steady_clock::now();
  auto model = resolve_model(cfg);
  const Dataset data = resolve_dataset(cfg.dataset, cfg.seed);
  check_model_data(*model, data);
  const std::vector<Vector> points = points_of(data);

  RunReport report;
  report.config_echo = cfg.echo;
  for (const auto& na : cfg.attacks) {
    AttackRun run{na.label, na.config, attack_batch(*model, points, na.config), {}, {}};
    run.summary = aggregate(run.results);
    if (cfg.oracle) {
      OracleOptions opt;
      opt.norm = na.config.norm_mode;
      opt.boundary_margin = na.config.boundary_margin;
      run.oracle_norm.resize(points.size());
      for (std::size_t i = 0; i < points.size(); ++i) {
        try {
          const auto target = model->is_binary() ? std::nullopt : na.config.target;
          run.oracle_norm[i] = oracle_for(*model, points[i], opt, target).norm;
        } catch (const Error&) {
          run.oracle_norm[i].reset();
        }
      }
    }
    log << na.label << ": fooling rate " << run.summary.fooling_rate << ", median l2 " << run.summary.median_l2
        << ", mean grads " << run.summary.mean_grads << '\n';
    report.attacks.push_back(std::move(run));
  }
  report.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  auto csv = open_out(out_path(cfg, "results.csv"));
  write_results_csv(csv, report);
  auto js = open_out(out_path(cfg, "report.json"));
  js << report_to_json(report).dump(2) << '\n';
  return report;
}

DiagnoseOutput run_diagnose(const ExperimentConfig& cfg, const std::string& results_path, std::ostream& log) {
  auto model = resolve_model(cfg);
  const Dataset data = resolve_dataset(cfg.dataset, cfg.seed);
  check_model_data(*model, data);
  const std::vector<Vector> points = points_of(data);

  // (label, per-sample results)
  std::vector<std::pair<std::string, std::vector<AttackResult>>> runs;
  if (!results_path.empty()) {
    std::ifstream in(results_path);
    if (!in) throw InvalidArgument("cannot read results '" + results_path + "'");
    json doc;
    try {
      in >> doc;
      for (const auto& a : doc.at("attacks")) {
        std::vector<AttackResult> rows;
        for (const auto& row : a.at("rows")) rows.push_back(row.at("result").get<AttackResult>());
        if (rows.size() != points.size())
          throw InvalidArgument("results file does not match the dataset size");
        runs.emplace_back(a.at("label").get<std::string>(), std::move(rows));
      }
    } catch (const json::exception& e) {
      throw InvalidArgument("results file: " + std::string(e.what()));
    }
  } else {
    for (const auto& na : cfg.attacks) runs.emplace_back(na.label, attack_batch(*model, points, na.config));
  }
  if (runs.empty()) throw InvalidArgument("diagnose: no results to analyse");

  DiagnoseOutput out;
  for (const auto& [label, results] : runs) {
    std::vector<std::pair<Vector, Vector>> fooled;
    for (std::size_t i = 0; i < results.size(); ++i) {
      const AttackResult& r = results[i];
      if (!r.success) continue;
      fooled.emplace_back(points[i], r.perturbation);
      if (cfg.diagnostics.cosine) {
        double c = std::numeric_limits<double>::quiet_NaN();
        try {
          c = cosine_alignment(points[i], r.perturbation, *model);
        } catch (const Error&) {
        }
        out.cosines.push_back({label, i, c});
      }
    }
    if (cfg.diagnostics.gamma && !fooled.empty()) {
      const auto& g = *cfg.diagnostics.gamma;
      for (const auto& p : gamma_fooling_curve(fooled, *model, gamma_grid(g.start, g.stop, g.step)))
        out.gamma.push_back({label, p});
    }
    log << label << ": " << fooled.size() << " successful samples analysed\n";
  }
  if (cfg.diagnostics.curvature)
    out.curvature = curvature_report(*model, points, 1e-8, cfg.diagnostics.curvature_iters,
                                     cfg.diagnostics.curvature_h, cfg.seed);

  auto cos_csv = open_out(out_path(cfg, "cosine_hist.csv"));
  write_cosine_csv(cos_csv, out.cosines);
  auto gamma_csv = open_out(out_path(cfg, "gamma_curve.csv"));
  write_gamma_csv(gamma_csv, out.gamma);
  auto curv_csv = open_out(out_path(cfg, "curvature.csv"));
  if (out.curvature) write_curvature_csv(curv_csv, *out.curvature);
  else write_curvature_csv(curv_csv, CurvatureReport{});
  return out;
}

AtSummary run_at_train(const ExperimentConfig& cfg, std::ostream& log) {
  auto base = resolve_model(cfg);
  if (base->kind() != ClassifierKind::Mlp) throw InvalidArgument("at-train needs an mlp model");
  const Dataset train_set = resolve_dataset(cfg.dataset, cfg.seed);
  check_model_data(*base, train_set);
  DatasetSpec eval_spec = cfg.at.eval_dataset.value_or(cfg.dataset);
  if (!cfg.at.eval_dataset) eval_spec.seed = cfg.dataset.seed.value_or(cfg.seed) + 1;
  const Dataset eval_set = resolve_dataset(eval_spec, cfg.seed);
  check_model_data(*base, eval_set);
  const std::vector<Vector> eval_points = points_of(eval_set);

  auto measure = [&](const Classifier& clf, double& median_l2, double& curvature, double& acc) {
    const DiagnosticsReport rep = aggregate(attack_batch(clf, eval_points, cfg.at.eval_attack));
    median_l2 = rep.median_l2;
    curvature = curvature_report(clf, eval_points, 1e-8, cfg.diagnostics.curvature_iters,
                                 cfg.diagnostics.curvature_h, cfg.seed)
                    .normalized_curvature;
    acc = accuracy(clf, eval_set);
  };

  AtSummary s;
  measure(*base, s.pre_median_l2, s.pre_mean_curvature, s.pre_accuracy);
  if (cfg.at.norm_cap) {
    s.norm_cap = *cfg.at.norm_cap;
  } else {
    const auto train_results = attack_batch(*base, points_of(train_set), cfg.at.eval_attack);
    s.norm_cap = cfg.at.norm_cap_factor * aggregate(train_results).median_l2;
    if (!(s.norm_cap > 0.0)) throw Error("at-train: could not derive a positive norm cap");
  }
  const Mlp tuned = adversarial_fine_tune(*base, train_set, cfg.at.attack, s.norm_cap, cfg.at.epochs,
                                          cfg.at.learning_rate, cfg.training.l2_weight_decay);
  measure(tuned, s.post_median_l2, s.post_mean_curvature, s.post_accuracy);

  save_model(tuned, out_path(cfg, cfg.model_out).string());
  json summary = {{"norm_cap", s.norm_cap},
                  {"epochs", cfg.at.epochs},
                  {"before", {{"median_l2", s.pre_median_l2}, {"mean_normalized_curvature", s.pre_mean_curvature},
                              {"accuracy", s.pre_accuracy}}},
                  {"after", {{"median_l2", s.post_median_l2}, {"mean_normalized_curvature", s.post_mean_curvature},
                             {"accuracy", s.post_accuracy}}},
                  {"config", cfg.echo}};
  auto js = open_out(out_path(cfg, "at_summary.json"));
  js << summary.dump(2) << '\n';
  log << "norm cap " << s.norm_cap << "; median l2 " << s.pre_median_l2 << " -> " << s.post_median_l2
      << "; mean normalized curvature " << s.pre_mean_curvature << " -> " << s.post_mean_curvature << '\n';
  return s;
}

std::vector<OracleSolution> run_oracle(const ExperimentConfig& cfg, std::ostream& log) {
  auto model = resolve_model(cfg);
  const Dataset data = resolve_dataset(cfg.dataset, cfg.seed);
  check_model_data(*model, data);
  std::vector<OracleSolution> out;
  auto csv = open_out(out_path(cfg, "oracle.csv"));
  csv << "sample_id,method,norm,certified_gap\n";
  std::size_t found = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vector& x0 = data.samples[i].point;
    try {
      out.push_back(oracle_for(*model, x0));
      ++found;
      csv << i << ',' << to_string(out.back().method) << ',' << format_double(out.back().norm) << ','
          << format_double(out.back().certified_gap) << '\n';
    } catch (const NotFound&) {
      out.push_back({Vector::Zero(x0.size()), std::numeric_limits<double>::quiet_NaN(), OracleMethod::GridScan, 0.0});
      csv << i << ",none,nan,nan\n";
    }
  }
  log << "oracle solved " << found << " of " << data.size() << " samples\n";
  return out;
}

}  // namespace minperturb
