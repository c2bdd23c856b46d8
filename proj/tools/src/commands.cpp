#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "csocnn/cso/swarm.hpp"
#include "csocnn/data/dataset.hpp"
#include "csocnn/data/scaler.hpp"
#include "csocnn/data/split.hpp"
#include "csocnn/data/synthetic.hpp"
#include "csocnn/detect/detector.hpp"
#include "csocnn/hyperopt/hyperopt.hpp"
#include "csocnn/metrics/confusion.hpp"
#include "csocnn/metrics/report.hpp"
#include "csocnn/metrics/roc.hpp"
#include "csocnn/nn/layer.hpp"
#include "csocnn/nn/model_io.hpp"
#include "csocnn/random.hpp"
#include "csocnn/train/trainer.hpp"
#include "csocnn_cli/cli.hpp"
#include "csocnn_cli/svg.hpp"

namespace csocnn::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr const char* kModelName = "csocnn.model";
constexpr std::size_t kSyntheticClasses = 5;

struct Seeds {
  std::uint64_t global, data, split, network, shuffle, swarm;

  explicit Seeds(std::uint64_t g)
      : global(g),
        data(derive_seed(g, 1)),
        split(derive_seed(g, 2)),
        network(derive_seed(g, 3)),
        shuffle(derive_seed(g, 4)),
        swarm(derive_seed(g, 5)) {}

  json to_json() const {
    return {{"global", global}, {"data", data},       {"split", split},
            {"network", network}, {"shuffle", shuffle}, {"swarm", swarm}};
  }
};

std::uint64_t resolve_seed(const Options& o, const json& metadata = json::object()) {
  if (o.seed) return *o.seed;
  if (metadata.is_object() && metadata.contains("seed")) {
    return metadata.at("seed").get<std::uint64_t>();
  }
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

std::string g17(double v) { return fmt::format("{:.17g}", v); }

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << content;
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

json options_json(const Options& o) {
  json j{{"synthetic", o.synthetic},
         {"samples", o.samples},
         {"separation", o.separation},
         {"label_column", o.label_column},
         {"ignore_columns", o.ignore_columns},
         {"features", o.features},
         {"out", o.out},
         {"epochs", o.epochs},
         {"batch", o.batch},
         {"lr", o.lr},
         {"cats", o.cats},
         {"iters", o.iters},
         {"mr", o.mr},
         {"smp", o.smp},
         {"srd", o.srd},
         {"cdc", o.cdc},
         {"c1", o.c1},
         {"workers", o.workers},
         {"split", o.split},
         {"input", o.input},
         {"threshold", o.threshold},
         {"score_kind", o.score_kind}};
  j["data"] = o.data ? json(*o.data) : json(nullptr);
  j["model"] = o.model ? json(*o.model) : json(nullptr);
  j["calibrate"] = o.calibrate ? json(*o.calibrate) : json(nullptr);
  j["benign_class"] = o.benign_class ? json(*o.benign_class) : json(nullptr);
  j["scaler"] = o.scaler ? json(*o.scaler) : json(nullptr);
  return j;
}

// Output directory bookkeeping and the manifest written at the end.
class Run {
 public:
  Run(std::string command, const Options& o, const Seeds& seeds, Io io)
      : command_(std::move(command)),
        dir_(o.out),
        seeds_(seeds),
        config_(options_json(o)),
        quiet_(o.quiet),
        io_(io),
        start_(std::chrono::steady_clock::now()) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory '" + dir_.string() + "'");
  }

  const fs::path& dir() const noexcept { return dir_; }

  void emit(const std::string& name, const std::string& content) {
    write_file(dir_ / name, content);
    add_artifact(name);
  }

  void add_artifact(const std::string& name) {
    if (std::find(artifacts_.begin(), artifacts_.end(), name) == artifacts_.end()) {
      artifacts_.push_back(name);
    }
  }

  template <typename... Args>
  void log(fmt::format_string<Args...> f, Args&&... args) {
    if (!quiet_) io_.err << fmt::format(f, std::forward<Args>(args)...) << '\n';
  }

  json inputs = json::object();
  json metrics = json::object();
  json details = json::object();

  void finish(bool partial) {
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json manifest{{"command", command_},
                  {"version", "0.1.0"},
                  {"status", partial ? "interrupted" : "complete"},
                  {"partial", partial},
                  {"config", config_},
                  {"seeds", seeds_.to_json()},
                  {"inputs", inputs},
                  {"output_dir", dir_.string()},
                  {"duration_seconds", seconds},
                  {"artifacts", artifacts_},
                  {"metrics", metrics},
                  {"details", details}};
    write_file(dir_ / "manifest.json", manifest.dump(2) + "\n");
  }

 private:
  std::string command_;
  fs::path dir_;
  Seeds seeds_;
  json config_;
  bool quiet_;
  Io io_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> artifacts_;
};

struct Loaded {
  data::Dataset dataset;
  json source;
};

Loaded load_data(const Options& o, const Seeds& seeds,
                 const std::vector<std::string>& class_names) {
  if (o.synthetic && o.data) throw UsageError("--data and --synthetic are mutually exclusive");
  Loaded l;
  if (o.synthetic) {
    l.dataset = data::make_synthetic_blobs(o.samples, kSyntheticClasses, o.features,
                                           o.separation, seeds.data);
    if (!class_names.empty() && class_names != l.dataset.codec.names()) {
      throw LabelError("model classes differ from the synthetic classes");
    }
    l.source = {{"kind", "synthetic"},     {"samples", o.samples},
                {"classes", kSyntheticClasses}, {"features", o.features},
                {"separation", o.separation}, {"seed", seeds.data}};
    return l;
  }
  if (!o.data) throw UsageError("either --data PATH or --synthetic is required");
  data::CsvSchema schema;
  schema.label_column = o.label_column;
  schema.expected_features = o.features;
  schema.class_names = class_names;
  schema.ignore_columns = o.ignore_columns;
  l.dataset = data::load_csv(*o.data, schema);
  const auto& st = l.dataset.stats;
  l.source = {{"kind", "csv"},
              {"path", *o.data},
              {"rows", st.rows},
              {"nan_values", st.nan_values},
              {"inf_values", st.inf_values},
              {"unparseable_values", st.unparseable_values}};
  return l;
}

data::SplitSpec split_spec(const Seeds& seeds) {
  data::SplitSpec spec;
  spec.seed = seeds.split;
  return spec;
}

json split_json(const data::SplitSpec& spec) {
  return {{"test_fraction", spec.test_fraction},
          {"val_fraction_of_remainder", spec.val_fraction_of_remainder},
          {"stratified", spec.stratified},
          {"seed", spec.seed}};
}

struct Prepared {
  data::ScalerStats stats;
  data::CleaningReport cleaning;
  data::Splits scaled;
  data::NetworkInput train, val, test;
};

data::NetworkInput network_input(const std::vector<data::FlowRecord>& records,
                                 std::size_t features) {
  return data::to_network_input(std::span<const data::FlowRecord>(records), features);
}

// Fits the scaler on the training partition unless `fixed` is given.
Prepared prepare(data::Splits raw, const std::optional<data::ScalerStats>& fixed) {
  Prepared p;
  if (fixed) {
    p.stats = *fixed;
    p.scaled = std::move(raw);
    p.cleaning += data::apply_scaler(p.scaled.train, p.stats);
  } else {
    auto cs = data::clean_and_scale(std::move(raw.train));
    p.stats = std::move(cs.stats);
    p.cleaning = cs.report;
    p.scaled.train = std::move(cs.records);
    p.scaled.val = std::move(raw.val);
    p.scaled.test = std::move(raw.test);
  }
  p.cleaning += data::apply_scaler(p.scaled.val, p.stats);
  p.cleaning += data::apply_scaler(p.scaled.test, p.stats);
  const std::size_t d = p.stats.num_features();
  p.train = network_input(p.scaled.train, d);
  p.val = network_input(p.scaled.val, d);
  p.test = network_input(p.scaled.test, d);
  return p;
}

json cleaning_json(const data::CleaningReport& r) {
  return {{"nan_replaced", r.nan_replaced},
          {"posinf_replaced", r.posinf_replaced},
          {"neginf_replaced", r.neginf_replaced},
          {"clamped", r.clamped}};
}

json model_metadata(const Prepared& p, const Seeds& seeds, const Loaded& loaded,
                    const std::string& command) {
  return {{detect::kScalerKey, p.stats.to_json()},
          {detect::kScalerFingerprintKey, p.stats.fingerprint()},
          {"seed", seeds.global},
          {"command", command},
          {"source", loaded.source},
          {"split", split_json(split_spec(seeds))}};
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw StateError("missing CSV column " + name);
    return static_cast<std::size_t>(it - header.begin());
  }
};

CsvTable parse_table(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  if (std::getline(in, line)) t.header = data::split_csv_line(line);
  while (std::getline(in, line)) {
    if (!line.empty()) t.rows.push_back(data::split_csv_line(line));
  }
  return t;
}

double parse_number(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::stod(s);
}

// Series drawn from two columns of CSV text, optionally only rows whose
// `key_col` equals `key`.
svg::Series series_from(const CsvTable& t, const std::string& x_col, const std::string& y_col,
                        std::string name, const std::string& key_col = "",
                        const std::string& key = "") {
  const std::size_t xi = t.column(x_col), yi = t.column(y_col);
  const std::size_t ki = key_col.empty() ? 0 : t.column(key_col);
  svg::Series s{std::move(name), {}};
  for (const auto& row : t.rows) {
    if (!key_col.empty() && row[ki] != key) continue;
    s.points.push_back({row[xi], row[yi], parse_number(row[xi]), parse_number(row[yi])});
  }
  return s;
}

void emit_curves(Run& run, const std::string& history_csv) {
  const auto table = parse_table(history_csv);
  svg::LineChart acc{"Training and validation accuracy", "epoch", "accuracy",
                     {series_from(table, "epoch", "train_acc", "train"),
                      series_from(table, "epoch", "val_acc", "validation")}};
  run.emit("accuracy.svg", svg::render(acc));
  svg::LineChart loss{"Training and validation loss", "epoch", "loss",
                      {series_from(table, "epoch", "train_loss", "train"),
                       series_from(table, "epoch", "val_loss", "validation")}};
  run.emit("loss.svg", svg::render(loss));
}

void register_checkpoints(Run& run, const fs::path& dir) {
  if (!fs::exists(dir)) return;
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    names.push_back(entry.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  for (const auto& n : names) run.add_artifact((fs::path("checkpoints") / n).generic_string());
}

json fitness_json(const hyperopt::Fitness& f) {
  return {{"val_accuracy", f.val_accuracy}, {"val_loss", f.val_loss}, {"diverged", f.diverged}};
}

// Scores the held-out partitions and writes metrics.json.
json emit_metrics(Run& run, const nn::Network& network, const Prepared& p,
                  const std::vector<std::string>& names) {
  const auto train_eval = train::evaluate(network, p.train);
  const auto val_eval = train::evaluate(network, p.val);
  const auto test_eval = train::evaluate(network, p.test);
  const auto cm = metrics::confusion(p.test.labels, test_eval.predictions, names.size(), names);
  const auto record =
      metrics::performance_record(train_eval.accuracy, val_eval.accuracy,
                                  metrics::scalar_metrics(cm));
  run.emit("metrics.json", record.dump(2) + "\n");
  return {{"train_accuracy", train_eval.accuracy},
          {"val_accuracy", val_eval.accuracy},
          {"val_loss", val_eval.loss},
          {"test_accuracy", test_eval.accuracy},
          {"test_loss", test_eval.loss},
          {"kappa", record.at("kappa_score")}};
}

}  // namespace

int cmd_train(const Options& o, Io io) {
  const Seeds seeds(resolve_seed(o));
  Run run("train", o, seeds, io);
  auto loaded = load_data(o, seeds, {});
  run.inputs = loaded.source;
  const auto spec = split_spec(seeds);
  const auto prep = prepare(data::split(loaded.dataset.records, spec), std::nullopt);
  const auto& names = loaded.dataset.codec.names();
  run.details["split"] = split_json(spec);
  run.details["sizes"] = {{"train", prep.train.labels.size()},
                          {"val", prep.val.labels.size()},
                          {"test", prep.test.labels.size()}};
  run.details["cleaning"] = cleaning_json(prep.cleaning);
  run.details["class_names"] = names;

  nn::Network network(nn::baseline_architecture(names.size()),
                      nn::baseline_input_shape(prep.stats.num_features()), seeds.network);
  train::TrainConfig config;
  config.epochs = o.epochs;
  config.batch_size = o.batch;
  config.initial_lr = o.lr;
  config.min_lr = std::min(config.min_lr, o.lr);
  config.seed = seeds.shuffle;
  config.checkpoint_dir = run.dir() / "checkpoints";
  config.class_names = names;

  train::TrainHooks hooks;
  hooks.on_epoch = [&](const train::EpochRecord& r) {
    run.log("epoch {}/{} loss={:.4f} acc={:.4f} val_loss={:.4f} val_acc={:.4f} lr={:.3g}",
            r.epoch, o.epochs, r.train_loss, r.train_acc, r.val_loss, r.val_acc, r.lr);
  };
  hooks.should_stop = [] { return interrupt_requested(); };
  auto result = train::train(std::move(network), prep.train, prep.val, config, hooks);

  std::ostringstream history;
  result.state.write_csv(history);
  run.emit("history.csv", history.str());
  emit_curves(run, history.str());
  register_checkpoints(run, config.checkpoint_dir);
  run.details["best_epoch"] = result.state.best_epoch;
  run.details["epochs_run"] = result.state.history.size();
  run.details["stopped_early"] = result.state.stopped_early;
  if (result.state.interrupted) {
    run.finish(true);
    return kExitInterrupted;
  }

  nn::save_model(run.dir() / kModelName, result.network, names,
                 model_metadata(prep, seeds, loaded, "train"));
  run.add_artifact(kModelName);
  run.emit("scaler.json", prep.stats.to_json().dump(2) + "\n");
  run.metrics = emit_metrics(run, result.network, prep, names);
  run.finish(false);
  run.log("test accuracy {:.4f}; artifacts in {}", run.metrics.at("test_accuracy").get<double>(),
          run.dir().string());
  return kExitOk;
}

int cmd_optimize(const Options& o, Io io) {
  const Seeds seeds(resolve_seed(o));
  Run run("optimize", o, seeds, io);
  auto loaded = load_data(o, seeds, {});
  run.inputs = loaded.source;
  const auto spec = split_spec(seeds);
  const auto prep = prepare(data::split(loaded.dataset.records, spec), std::nullopt);
  const auto& names = loaded.dataset.codec.names();
  run.details["split"] = split_json(spec);
  run.details["class_names"] = names;

  cso::SwarmConfig swarm;
  swarm.n_cats = o.cats;
  swarm.max_iters = o.iters;
  swarm.mixture_ratio = o.mr;
  swarm.smp = o.smp;
  swarm.srd = o.srd;
  swarm.cdc = o.cdc;
  swarm.c1 = o.c1;
  swarm.workers = o.workers;
  swarm.seed = seeds.swarm;
  swarm.validate();

  const hyperopt::SearchSpace space;
  const hyperopt::Datasets datasets{prep.train, prep.val};
  const auto arch = nn::baseline_architecture(names.size());
  const train::TrainConfig base;
  run.details["search_space"] = {
      {"learning_rate", {space.learning_rate.lo, space.learning_rate.hi}},
      {"batch_size", {space.batch_size.lo, space.batch_size.hi}},
      {"epochs", {space.epochs.lo, space.epochs.hi}}};

  hyperopt::HyperoptResult result;
  try {
    result = hyperopt::optimize_hyperparams(space, datasets, arch, swarm, base,
                                            [] { return interrupt_requested(); });
  } catch (const cso::EvaluationError& e) {
    try {
      std::rethrow_if_nested(e);
    } catch (const Cancelled&) {
      run.finish(true);
      return kExitInterrupted;
    } catch (...) {
    }
    throw;
  }

  std::ostringstream convergence;
  result.write_history_csv(convergence);
  run.emit("convergence.csv", convergence.str());
  const auto table = parse_table(convergence.str());
  svg::LineChart chart{"Best validation accuracy per iteration", "iteration", "val accuracy",
                       {series_from(table, "iter", "best_val_accuracy", "best so far")}};
  run.emit("convergence.svg", svg::render(chart));

  std::string evaluations =
      "iteration,cat,candidate,learning_rate,batch_size,epochs,val_accuracy,val_loss,diverged\n";
  for (const auto& e : result.evaluations) {
    evaluations += fmt::format("{},{},{},{},{},{},{},{},{}\n", e.iteration, e.cat_index,
                               e.candidate, g17(e.hyperparams.learning_rate),
                               e.hyperparams.batch_size, e.hyperparams.epochs,
                               g17(e.fitness.val_accuracy), g17(e.fitness.val_loss),
                               e.fitness.diverged ? 1 : 0);
  }
  run.emit("evaluations.csv", evaluations);
  run.emit("best_hyperparams.json", result.best_record().dump(2) + "\n");

  auto best = hyperopt::train_candidate(result.best, datasets, arch, result.best_seed, base);
  nn::save_model(run.dir() / kModelName, best.network, names,
                 model_metadata(prep, seeds, loaded, "optimize"));
  run.add_artifact(kModelName);
  run.emit("scaler.json", prep.stats.to_json().dump(2) + "\n");
  run.metrics = emit_metrics(run, best.network, prep, names);
  run.metrics["best_fitness"] = fitness_json(result.fitness);
  run.metrics["first_iteration_best"] = fitness_json(result.history.front().best);
  run.metrics["evaluations"] = result.evaluations.size();
  run.details["best_hyperparams"] = result.best.to_json();
  run.finish(false);
  run.log("best lr={:.4g} batch={} epochs={} fitness=({:.4f}, {:.4f})",
          result.best.learning_rate, result.best.batch_size, result.best.epochs,
          result.fitness.val_accuracy, result.fitness.val_loss);
  return kExitOk;
}

int cmd_evaluate(const Options& o, Io io) {
  auto model = nn::load_model(*o.model);
  const Seeds seeds(resolve_seed(o, model.metadata));
  Run run("evaluate", o, seeds, io);
  if (!model.metadata.is_object() || !model.metadata.contains(detect::kScalerKey)) {
    throw ModelFormatError("model metadata carries no scaler statistics");
  }
  const auto stats = data::ScalerStats::from_json(model.metadata.at(detect::kScalerKey));
  auto names = model.class_names;
  auto loaded = load_data(o, seeds, names);
  if (names.empty()) names = loaded.dataset.codec.names();
  if (names.size() != model.network.num_classes()) {
    throw LabelError("dataset classes differ from the model's output layer");
  }
  run.inputs = {{"model", *o.model}, {"data", loaded.source}};

  data::Splits raw;
  if (o.split == "all") {
    raw.test = std::move(loaded.dataset.records);
  } else {
    raw = data::split(loaded.dataset.records, split_spec(seeds));
    run.details["split"] = split_json(split_spec(seeds));
  }
  const auto prep = prepare(std::move(raw), stats);
  run.details["cleaning"] = cleaning_json(prep.cleaning);
  if (prep.test.labels.empty()) throw PreconditionError("no records to evaluate");

  const auto& network = model.network;
  const auto test_eval = train::evaluate(network, prep.test);
  std::optional<double> train_acc, val_acc;
  if (!prep.train.labels.empty()) train_acc = train::evaluate(network, prep.train).accuracy;
  if (!prep.val.labels.empty()) val_acc = train::evaluate(network, prep.val).accuracy;

  const std::size_t k = names.size();
  const auto cm = metrics::confusion(prep.test.labels, test_eval.predictions, k, names);
  const auto scalars = metrics::scalar_metrics(cm);
  run.emit("classification_report.txt", metrics::class_report(cm).to_text());

  std::ostringstream cm_csv;
  cm.write_csv(cm_csv);
  run.emit("confusion_matrix.csv", cm_csv.str());
  const auto cm_table = parse_table(cm_csv.str());
  svg::Heatmap heat{"Confusion matrix (rows: true class)", names, {}};
  for (const auto& row : cm_table.rows) heat.cells.emplace_back(row.begin() + 1, row.end());
  run.emit("confusion_matrix.svg", svg::render(heat));

  std::string roc_csv = "class,fpr,tpr,threshold\n";
  json auc = json::object();
  json skipped = json::array();
  auto add_curve = [&](const std::string& label, const metrics::RocCurve& curve) {
    for (const auto& p : curve.points) {
      roc_csv += fmt::format("{},{},{},{}\n", label, g17(p.fpr), g17(p.tpr), g17(p.threshold));
    }
    auc[label] = curve.auc;
  };
  std::vector<std::string> curve_labels;
  for (std::size_t c = 0; c < k; ++c) {
    try {
      add_curve(names[c], metrics::roc_curve(prep.test.labels, test_eval.probabilities, c));
      curve_labels.push_back(names[c]);
    } catch (const DegenerateClass&) {
      skipped.push_back(names[c]);
    }
  }
  try {
    add_curve("micro", metrics::roc_curve_micro(prep.test.labels, test_eval.probabilities));
    curve_labels.push_back("micro");
  } catch (const DegenerateClass&) {
    skipped.push_back("micro");
  }
  run.emit("roc.csv", roc_csv);
  const auto roc_table = parse_table(roc_csv);
  svg::LineChart roc{"ROC (one-vs-rest)", "false positive rate", "true positive rate", {}, true};
  for (const auto& label : curve_labels) {
    roc.series.push_back(series_from(roc_table, "fpr", "tpr", label, "class", label));
  }
  run.emit("roc.svg", svg::render(roc));

  std::string probs = "index,true_label,predicted_label";
  for (const auto& n : names) probs += ",p_" + n;
  probs += '\n';
  for (std::size_t i = 0; i < prep.test.labels.size(); ++i) {
    probs += fmt::format("{},{},{}", i, names[static_cast<std::size_t>(prep.test.labels[i])],
                         names[static_cast<std::size_t>(test_eval.predictions[i])]);
    for (std::size_t c = 0; c < k; ++c) {
      probs += fmt::format(",{:.9g}", test_eval.probabilities[i * k + c]);
    }
    probs += '\n';
  }
  run.emit("probabilities.csv", probs);

  auto record = metrics::performance_record(train_acc.value_or(0.0), val_acc.value_or(0.0),
                                            scalars);
  if (!train_acc) record["training_accuracy"] = nullptr;
  if (!val_acc) record["validating_accuracy"] = nullptr;
  record["roc_auc"] = auc;
  record["roc_skipped"] = skipped;
  run.emit("metrics.json", record.dump(2) + "\n");

  run.metrics = {{"test_accuracy", test_eval.accuracy},
                 {"test_loss", test_eval.loss},
                 {"kappa", record.at("kappa_score")},
                 {"roc_auc", auc}};
  run.metrics["train_accuracy"] = train_acc ? json(*train_acc) : json(nullptr);
  run.metrics["val_accuracy"] = val_acc ? json(*val_acc) : json(nullptr);
  run.finish(false);
  run.log("test accuracy {:.4f} on {} records", test_eval.accuracy, prep.test.labels.size());
  return kExitOk;
}

int cmd_detect(const Options& o, Io io) {
  auto model = nn::load_model(*o.model);
  const Seeds seeds(resolve_seed(o, model.metadata));
  Run run("detect", o, seeds, io);
  const auto names = model.class_names;

  detect::DetectionPolicy policy;
  policy.threshold = o.threshold;
  policy.score_kind = detect::score_kind_from_string(o.score_kind);
  if (o.benign_class) {
    const auto it = std::find(names.begin(), names.end(), *o.benign_class);
    if (it == names.end()) throw UsageError("unknown benign class '" + *o.benign_class + "'");
    policy.benign_class_index = static_cast<std::size_t>(it - names.begin());
  } else if (const auto it = std::find(names.begin(), names.end(), "Benign"); it != names.end()) {
    policy.benign_class_index = static_cast<std::size_t>(it - names.begin());
  }

  auto det = [&] {
    if (o.scaler) {
      auto stats = data::ScalerStats::from_json(json::parse(read_file(*o.scaler)));
      return detect::Detector(model, std::move(stats), policy);
    }
    return detect::Detector::from_model(model, policy);
  }();
  run.inputs = {{"model", *o.model}, {"input", o.input}};

  if (o.calibrate) {
    detect::CalibrationTarget target;
    if (*o.calibrate == "max_f1") {
      target = detect::CalibrationTarget::max_f1();
    } else if (o.calibrate->rfind("fpr:", 0) == 0) {
      try {
        target = detect::CalibrationTarget::fpr_at(std::stod(o.calibrate->substr(4)));
      } catch (const std::logic_error&) {
        throw UsageError("--calibrate fpr:X needs a number, got '" + *o.calibrate + "'");
      }
    } else {
      throw UsageError("--calibrate must be max_f1 or fpr:X");
    }
    auto loaded = load_data(o, seeds, names);
    const auto raw = data::split(loaded.dataset.records, split_spec(seeds));
    const double t = det.calibrate_threshold(raw.val, target);
    det.set_threshold(t);
    run.details["calibration"] = {{"target", *o.calibrate},
                                  {"threshold", t},
                                  {"records", raw.val.size()},
                                  {"data", loaded.source}};
    io.err << "calibrated threshold " << g17(t) << '\n';
  }

  std::ifstream file;
  if (o.input != "-") {
    file.open(o.input);
    if (!file) throw IoError("cannot read '" + o.input + "'");
  }
  std::istream& in = o.input == "-" ? io.in : file;

  data::CsvSchema schema;
  schema.label_column = o.label_column;
  schema.expected_features = det.scaler().num_features();
  schema.ignore_columns = o.ignore_columns;
  schema.require_label = false;
  data::CsvReader reader(in, schema);

  io.out << "score,verdict,predicted_class";
  for (const auto& n : names) io.out << ",p_" << n;
  io.out << '\n';
  std::size_t total = 0, anomalous = 0;
  bool interrupted = false;
  while (auto row = reader.next()) {
    if (interrupt_requested()) {
      interrupted = true;
      break;
    }
    const auto d = det.score(data::FlowRecord{std::move(row->features), 0});
    ++total;
    anomalous += d.verdict == detect::Verdict::anomalous;
    const auto cls = static_cast<std::size_t>(d.predicted_class);
    io.out << g17(d.score) << ',' << detect::to_string(d.verdict) << ','
           << (cls < names.size() ? names[cls] : std::to_string(cls));
    for (double p : d.probabilities) io.out << ',' << fmt::format("{:.9g}", p);
    io.out << '\n' << std::flush;
  }

  run.metrics = {{"records", total},
                 {"anomalous", anomalous},
                 {"normal", total - anomalous},
                 {"threshold", det.policy().threshold},
                 {"score_kind", detect::to_string(det.policy().score_kind)},
                 {"benign_class", names.empty() ? json(policy.benign_class_index)
                                                : json(names[policy.benign_class_index])}};
  run.finish(interrupted);
  return interrupted ? kExitInterrupted : kExitOk;
}

}  // namespace csocnn::cli
