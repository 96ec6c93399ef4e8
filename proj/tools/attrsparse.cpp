// attrsparse: train / compare / attribute / gini / verify / synth.
//
// Exit codes: 0 ok, 1 config or data error, 2 training diverged,
// 3 a verification check failed.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "attrsparse/attribution.hpp"
#include "attrsparse/experiment.hpp"
#include "attrsparse/gini.hpp"
#include "attrsparse/io.hpp"
#include "attrsparse/model_io.hpp"
#include "attrsparse/theory.hpp"
#include "attrsparse/training.hpp"

namespace fs = std::filesystem;
using namespace attrsparse;

namespace {

constexpr int kExitError = 1;
constexpr int kExitDiverged = 2;
constexpr int kExitCheckFailed = 3;

// "0.1,0.2" -> {0.1, 0.2}; "" or "none" -> {}.
Vector parse_list(const std::string& text, const char* what) {
  Vector out;
  if (text.empty() || text == "none") return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = parse_double(item);
    if (!v) throw ConfigError(std::string("bad number in ") + what + ": '" + item + "'");
    out.push_back(*v);
  }
  return out;
}

struct DataArgs {
  std::string data;
  std::string schema;
  std::string label;

  void add(CLI::App* app) {
    app->add_option("--data", data, "CSV dataset (header row required)")->required();
    app->add_option("--schema", schema,
                    "Schema JSON (default: <stem>.schema.json next to the CSV if present)");
    app->add_option("--label", label, "Label column when no schema is found (default: last)");
  }
  Dataset load() const {
    std::optional<fs::path> sp;
    if (!schema.empty()) sp = schema;
    return load_csv_auto(data, sp, label);
  }
};

// Flags override the config file, which overrides the defaults.
struct TrainArgs {
  std::string config;
  std::string regime;
  double eps = 0.0, lambda = 0.0, lr = 0.01;
  std::size_t batch = 32, epochs = 30;
  std::uint64_t seed = 0;
  std::string optimizer;
  bool bias = false;
  CLI::Option *o_regime{}, *o_eps{}, *o_lambda{}, *o_lr{}, *o_batch{}, *o_epochs{}, *o_seed{},
      *o_opt{}, *o_bias{};

  void add(CLI::App* app, bool with_regime) {
    app->add_option("--config", config, "Training config JSON");
    if (with_regime)
      o_regime = app->add_option("--regime", regime, "natural | adversarial | l1 | stable-ig");
    o_eps = app->add_option("--eps", eps, "l-inf budget for adversarial / stable-ig");
    o_lambda = app->add_option("--lambda", lambda, "l1 strength");
    o_lr = app->add_option("--lr", lr, "Learning rate (default 0.01)");
    o_batch = app->add_option("--batch", batch, "Batch size (default 32)");
    o_epochs = app->add_option("--epochs", epochs, "Epochs (default 30)");
    o_seed = app->add_option("--seed", seed, "Seed (default 0)");
    o_opt = app->add_option("--optimizer", optimizer, "adam | sgd (default adam)");
    o_bias = app->add_flag("--bias", bias, "Fit a bias term");
  }
  TrainConfig resolve() const {
    TrainConfig cfg;
    if (!config.empty()) cfg = train_config_from_json(read_text_file(config));
    if (o_regime && o_regime->count()) cfg.regime = parse_regime(regime);
    if (o_eps->count()) cfg.epsilon = eps;
    if (o_lambda->count()) cfg.lambda = lambda;
    if (o_lr->count()) cfg.learning_rate = lr;
    if (o_batch->count()) cfg.batch_size = batch;
    if (o_epochs->count()) cfg.epochs = epochs;
    if (o_seed->count()) cfg.seed = seed;
    if (o_opt->count()) cfg.optimizer = parse_optimizer(optimizer);
    if (o_bias->count()) cfg.fit_bias = bias;
    cfg.validate();
    return cfg;
  }
};

void say(const std::string& s) { std::cout << s << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attribution sparseness under adversarial, l1 and natural training"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  // train ------------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "Train a model; write model JSON and trace CSV");
  DataArgs train_data;
  TrainArgs train_args;
  std::string loss_name = "logistic", model_out = "model.json", trace_out = "trace.csv";
  std::size_t hidden = 0;
  std::string activation = "softplus";
  train_data.add(train_cmd);
  train_args.add(train_cmd, true);
  train_cmd->add_option("--loss", loss_name, "logistic | hinge | softplus-hinge");
  train_cmd->add_option("--hidden", hidden, "Hidden units: train a 1-hidden-layer MLP");
  train_cmd->add_option("--activation", activation, "MLP hidden activation: softplus | tanh | relu");
  train_cmd->add_option("--model-out", model_out, "Model JSON path");
  train_cmd->add_option("--trace-out", trace_out, "Trace CSV path");

  // compare ----------------------------------------------------------------
  auto* cmp_cmd = app.add_subcommand("compare", "Compare n / a(eps) / l(lambda) attribution sparseness");
  DataArgs cmp_data;
  TrainArgs cmp_args;
  std::string cmp_eps = "0.1", cmp_lambda = "0.02", cmp_method = "closed", out_dir = "out";
  std::string dataset_id, task = "tabular";
  std::size_t cmp_steps = 256;
  std::string blob_seeds = "0,1,2,3,4";
  cmp_cmd->add_option("--task", task, "tabular | blobs (synthetic 8x8 images, MLP)");
  cmp_cmd->add_option("--data", cmp_data.data, "CSV dataset (tabular task)");
  cmp_cmd->add_option("--schema", cmp_data.schema, "Schema JSON");
  cmp_cmd->add_option("--label", cmp_data.label, "Label column when no schema is found");
  cmp_args.add(cmp_cmd, false);
  cmp_cmd->add_option("--eps-list", cmp_eps, "Comma-separated eps values ('' for none)");
  cmp_cmd->add_option("--lambda-list", cmp_lambda, "Comma-separated lambda values ('' for none)");
  cmp_cmd->add_option("--method", cmp_method, "IG method: closed | numeric");
  cmp_cmd->add_option("--steps", cmp_steps, "IG steps for the numeric method");
  cmp_cmd->add_option("--dataset-id", dataset_id, "Name used in the report (default: file stem)");
  cmp_cmd->add_option("--blob-seeds", blob_seeds, "Seeds for the blobs task");
  cmp_cmd->add_option("--out-dir", out_dir, "Output directory");

  // attribute --------------------------------------------------------------
  auto* attr_cmd = app.add_subcommand("attribute", "Integrated Gradients for a saved model");
  DataArgs attr_data;
  std::string attr_model, attr_method = "closed", attr_baseline, attr_split = "test";
  std::string attr_out = "attrib";
  std::size_t attr_steps = 256;
  attr_data.add(attr_cmd);
  attr_cmd->add_option("--model", attr_model, "Model JSON")->required();
  attr_cmd->add_option("--method", attr_method, "closed | numeric (MLP: always numeric)");
  attr_cmd->add_option("--steps", attr_steps, "Steps for the numeric method");
  attr_cmd->add_option("--baseline", attr_baseline, "Comma-separated baseline (default zeros)");
  attr_cmd->add_option("--split", attr_split, "train | test");
  attr_cmd->add_option("--out-dir", attr_out, "Output directory");

  // gini -------------------------------------------------------------------
  auto* gini_cmd = app.add_subcommand("gini", "Gini index of |values|");
  std::string gini_values, gini_file;
  gini_cmd->add_option("--values", gini_values, "Comma-separated values");
  gini_cmd->add_option("--file", gini_file, "File with one value per line (or comma-separated)");

  // verify -----------------------------------------------------------------
  auto* ver_cmd = app.add_subcommand("verify", "Run a theory check: thm1-zero | thm1-bound | thm3 | lemmaD1");
  std::string theorem;
  std::size_t ver_n = 100000, ver_trials = 1000, ver_configs = 50, ver_constructions = 100;
  std::uint64_t ver_seed = 0;
  std::string ver_out;
  ver_cmd->add_option("theorem", theorem, "Check id")->required();
  ver_cmd->add_option("--n", ver_n, "Monte-Carlo samples per check");
  ver_cmd->add_option("--trials", ver_trials, "Random draws per loss (thm3)");
  ver_cmd->add_option("--configs", ver_configs, "Random configurations (thm1-bound)");
  ver_cmd->add_option("--constructions", ver_constructions, "Random constructions (lemmaD1)");
  ver_cmd->add_option("--seed", ver_seed, "Seed");
  ver_cmd->add_option("--out", ver_out, "JSON report path (default: stdout)");

  // synth ------------------------------------------------------------------
  auto* syn_cmd = app.add_subcommand("synth", "Generate a synthetic dataset CSV + schema");
  std::string syn_a = "1,0.05", syn_noise, syn_out = "synthetic.csv";
  std::size_t syn_n = 1000;
  double syn_balance = 0.5;
  std::uint64_t syn_seed = 0;
  bool syn_blobs = false;
  syn_cmd->add_option("--a", syn_a, "Comma-separated directed strengths");
  syn_cmd->add_option("--noise", syn_noise, "Comma-separated noise sd (default 1 each)");
  syn_cmd->add_option("--n", syn_n, "Examples");
  syn_cmd->add_option("--balance", syn_balance, "P(y = +1)");
  syn_cmd->add_option("--seed", syn_seed, "Seed");
  syn_cmd->add_flag("--blobs", syn_blobs, "Generate 8x8 blob images instead");
  syn_cmd->add_option("--out", syn_out, "Output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  try {
    if (*train_cmd) {
      const Dataset ds = train_data.load();
      const TrainConfig cfg = train_args.resolve();
      const LossSpec loss = LossSpec::parse(loss_name);
      TrainTrace trace;
      AnyModel model;
      std::string acc;
      if (hidden > 0) {
        TrainConfig c = cfg;
        const auto init = MlpModel::init({ds.dim(), hidden, 1}, parse_hidden_activation(activation),
                                         mix_seed(cfg.seed, 0x1417));
        auto res = train_mlp(ds, loss, c, init);
        acc = format_double(evaluate(res.model, ds, Split::test, loss).accuracy);
        trace = std::move(res.trace);
        model = std::move(res.model);
      } else if (ds.label_kind == LabelKind::multiclass) {
        auto res = train_one_vs_all(ds, loss, cfg);
        acc = format_double(evaluate(res.model, ds, Split::test, loss).accuracy);
        trace = std::move(res.trace);
        model = std::move(res.model);
      } else {
        auto res = train(ds, loss, cfg);
        acc = format_double(evaluate(res.model, ds, Split::test, loss).accuracy);
        trace = std::move(res.trace);
        model = std::move(res.model);
      }
      save_model(model, model_out);
      write_text_file(trace_out, trace_csv(trace));
      say("regime " + to_string(cfg.regime) + ", test accuracy " + acc);
      say("wrote " + model_out + " and " + trace_out);
      return 0;
    }

    if (*cmp_cmd) {
      fs::create_directories(out_dir);
      if (task == "blobs") {
        BlobStudyConfig bc;
        bc.seeds.clear();
        for (double s : parse_list(blob_seeds, "--blob-seeds"))
          bc.seeds.push_back(static_cast<std::uint64_t>(s));
        if (cmp_args.o_eps->count()) bc.epsilon = cmp_args.eps;
        const Vector lambdas = parse_list(cmp_lambda, "--lambda-list");
        if (cmp_cmd->get_option("--lambda-list")->count()) bc.lambdas = lambdas;
        if (cmp_args.o_epochs->count()) bc.epochs = cmp_args.epochs;
        const auto t0 = std::chrono::steady_clock::now();
        const BlobStudy s = run_blob_study(bc);
        write_text_file(fs::path(out_dir) / "blob_study.json", blob_study_json(bc, s));
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        say("natural gini " + format_double(s.natural_gini) + ", adversarial gini " +
            format_double(s.adversarial_gini) + " (" + format_double(secs) + " s)");
        return 0;
      }
      if (task != "tabular") throw ConfigError("unknown task '" + task + "' (valid: tabular, blobs)");
      if (cmp_data.data.empty()) throw ConfigError("compare: --data is required");
      const Dataset ds = cmp_data.load();
      CompareConfig cc;
      cc.base = cmp_args.resolve();
      cc.epsilons = parse_list(cmp_eps, "--eps-list");
      cc.lambdas = parse_list(cmp_lambda, "--lambda-list");
      cc.method = parse_ig_method(cmp_method);
      cc.ig_steps = cmp_steps;
      const std::string id = dataset_id.empty() ? fs::path(cmp_data.data).stem().string() : dataset_id;
      const ExperimentReport rep = run_compare(ds, id, cc);
      const fs::path dir(out_dir);
      write_text_file(dir / "report.json", report_json(rep));
      write_text_file(dir / "table1.csv", table1_csv(rep.comparison, id));
      write_text_file(dir / "per_example_dG.csv", per_example_dg_csv(rep.comparison));
      write_text_file(dir / "sweep.csv", sweep_csv(rep));
      write_text_file(dir / "run_info.json",
                      nlohmann::json{{"runtime_seconds", rep.runtime_seconds}}.dump(2) + "\n");
      std::cout << table1_csv(rep.comparison, id);
      return 0;
    }

    if (*attr_cmd) {
      const Dataset ds = attr_data.load();
      const AnyModel model = load_model(attr_model);
      const Split split = attr_split == "train" ? Split::train : Split::test;
      if (attr_split != "train" && attr_split != "test")
        throw ConfigError("--split must be train or test");
      Vector u = attr_baseline.empty() ? Vector(ds.dim(), 0.0) : parse_list(attr_baseline, "--baseline");
      if (u.size() != ds.dim())
        throw DimensionError("baseline has " + std::to_string(u.size()) + " values, dataset has " +
                             std::to_string(ds.dim()) + " features");
      std::vector<AttributionVector> attribs;
      if (const auto* lin = std::get_if<LinearModel>(&model)) {
        attribs = attribute_dataset(*lin, ds, split, u, parse_ig_method(attr_method), attr_steps);
      } else if (const auto* mlp = std::get_if<MlpModel>(&model)) {
        attribs = attribute_dataset(*mlp, ds, split, u, attr_steps);
      } else {
        throw ConfigError("attribute: one-vs-all models are not supported");
      }
      const fs::path dir(attr_out);
      fs::create_directories(dir);
      write_text_file(dir / "attributions.csv", attributions_csv(attribs, ds.feature_names));
      const ImpactReport rep = impact_report(attribs, ds);
      write_text_file(dir / "fv.csv", impact_fv_csv(rep));
      write_text_file(dir / "fi.csv", impact_fi_csv(rep));
      if (ds.image_shape) {
        fs::create_directories(dir / "pgm");
        for (std::size_t k = 0; k < attribs.size(); ++k) {
          char name[32];
          std::snprintf(name, sizeof name, "example_%05zu.pgm", k);
          write_text_file(dir / "pgm" / name, attribution_pgm(attribs[k], *ds.image_shape));
        }
      }
      say("wrote " + std::to_string(attribs.size()) + " attributions to " + dir.string());
      return 0;
    }

    if (*gini_cmd) {
      std::string text = gini_values;
      if (!gini_file.empty()) {
        text = read_text_file(gini_file);
        for (char& c : text)
          if (c == '\n' || c == '\r' || c == ' ' || c == '\t') c = ',';
        std::string cleaned;
        for (std::size_t i = 0; i < text.size(); ++i)
          if (!(text[i] == ',' && (cleaned.empty() || cleaned.back() == ','))) cleaned += text[i];
        if (!cleaned.empty() && cleaned.back() == ',') cleaned.pop_back();
        text = cleaned;
      }
      const Vector v = parse_list(text, "values");
      if (v.empty()) throw ConfigError("gini: no values given (use --values or --file)");
      const GiniValue g = gini_abs(v);
      say(format_double(g.value) + (g.degenerate ? " (degenerate: all zero)" : ""));
      return 0;
    }

    if (*ver_cmd) {
      std::vector<TheoremCheckResult> results;
      if (theorem == "thm1-zero") results = run_theorem1_zero_suite(ver_n, ver_seed);
      else if (theorem == "thm1-bound") results = run_theorem1_bound_suite(ver_configs, ver_n, ver_seed);
      else if (theorem == "thm3") results = run_theorem3_suite(ver_trials, ver_seed);
      else if (theorem == "lemmaD1") results = run_lemma_suite(ver_constructions, ver_n, ver_seed);
      else
        throw ConfigError("unknown theorem id '" + theorem +
                          "' (valid: thm1-zero, thm1-bound, thm3, lemmaD1)");
      const std::string report = theorem_report_json(results);
      if (ver_out.empty()) std::cout << report;
      else write_text_file(ver_out, report);
      std::size_t failed = 0;
      for (const auto& r : results) failed += !r.pass;
      std::cerr << theorem << ": " << results.size() - failed << "/" << results.size()
                << " checks passed\n";
      return failed == 0 ? 0 : kExitCheckFailed;
    }

    if (*syn_cmd) {
      Dataset ds;
      Schema schema;
      if (syn_blobs) {
        BlobImageSpec spec;
        spec.seed = syn_seed;
        ds = generate_blob_images(spec, syn_n);
        schema.image_shape = ds.image_shape;
      } else {
        SyntheticSpec spec;
        spec.a = parse_list(syn_a, "--a");
        spec.noise_sd = syn_noise.empty() ? Vector(spec.a.size(), 1.0) : parse_list(syn_noise, "--noise");
        spec.class_balance = syn_balance;
        spec.seed = syn_seed;
        ds = generate_synthetic(spec, syn_n);
      }
      write_csv(ds, syn_out);
      schema.label_column = "label";
      schema.positive_label = ds.class_names[1];
      schema.split_seed = syn_seed;
      for (const auto& name : ds.feature_names) schema.columns.push_back({name, ColumnType::numeric, {}});
      fs::path sp(syn_out);
      sp.replace_extension(".schema.json");
      write_text_file(sp, schema_to_json(schema));
      say("wrote " + syn_out + " and " + sp.string());
      return 0;
    }
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return 0;
}
