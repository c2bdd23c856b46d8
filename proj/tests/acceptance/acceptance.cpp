// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

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
#include "csocnn/nn/layer.hpp"
#include "csocnn/nn/network.hpp"
#include "csocnn/random.hpp"
#include "csocnn/train/trainer.hpp"
#include "csocnn_cli/cli.hpp"
#include "support/callback_script.hpp"
#include "support/detector_oracle.hpp"
#include "support/gradcheck.hpp"
#include "support/metrics_oracle.hpp"
#include "support/objectives.hpp"
#include "support/temp_dir.hpp"

using namespace csocnn;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Each check returns an empty string on success or the reason it failed,
// plus a short detail for the log line.
struct Outcome {
  std::string failure;
  std::string detail;
};

Outcome pass(std::string detail) { return {{}, std::move(detail)}; }
Outcome fail(std::string why) { return {std::move(why), {}}; }

Outcome architecture() {
  const auto layers = nn::baseline_architecture(5);
  const nn::Shape input{75, 1, 1};
  const auto counts = nn::count_params(layers, input);
  if (counts != nn::ParamCounts{60997, 60613, 384}) {
    return fail(fmt::format("params ({}, {}, {})", counts.total, counts.trainable,
                            counts.non_trainable));
  }
  const std::vector<nn::Shape> expected = {{75, 1, 1}, {70, 1, 64}, {70, 1, 64}, {35, 1, 64},
                                           {33, 1, 64}, {33, 1, 64}, {17, 1, 64}, {15, 1, 64},
                                           {15, 1, 64}, {8, 1, 64},  {512},       {64},
                                           {32},        {5}};
  const auto shapes = nn::infer_shapes(layers, input);
  if (shapes.size() != 14) return fail(fmt::format("{} shape rows", shapes.size()));
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (shapes[i] != expected[i]) return fail(fmt::format("shape row {} differs", i));
  }
  const nn::Network net(layers, input, 1);
  if (net.count_params() != counts) return fail("built network disagrees with count_params");
  return pass("(60997, 60613, 384), 14 shapes");
}

Outcome gradients() {
  double worst = 0.0;
  std::size_t checked = 0, nets = 0;
  for (const auto& toy : test::toy_networks()) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      nn::Network64 net(toy.layers, toy.input, seed);
      if (net.count_params().total > 500) return fail("toy network over 500 parameters");
      nn::Shape shape{6};
      shape.insert(shape.end(), toy.input.begin(), toy.input.end());
      const auto batch = test::normal_batch(shape, 100 + seed);
      const auto labels = test::random_labels(6, toy.classes, 200 + seed);
      const auto r = test::gradient_check(net, batch, labels);
      if (r.checked == 0) return fail("no parameter checked");
      worst = std::max(worst, r.max_rel_error);
      checked += r.checked;
      ++nets;
    }
  }
  if (!(worst < 1e-4)) return fail(fmt::format("max relative error {:.3g}", worst));
  return pass(fmt::format("{} nets, {} params, max rel err {:.2e}", nets, checked, worst));
}

Outcome cso_convergence() {
  const cso::Bounds five(5, cso::Bound{-5, 5}), two(2, cso::Bound{-5, 5});
  cso::SwarmConfig config;
  config.n_cats = 30;
  config.max_iters = 100;
  config.seed = 0;
  const auto sphere = cso::optimize(test::sphere, five, config);
  if (!(sphere.best_fitness < 1e-3)) return fail(fmt::format("sphere {:.3g}", sphere.best_fitness));
  const auto rosen = cso::optimize(test::rosenbrock, two, config);
  if (!(rosen.best_fitness < 1e-1)) return fail(fmt::format("rosenbrock {:.3g}", rosen.best_fitness));

  Rng rng(42);
  std::size_t monotone = 0;
  for (int run = 0; run < 100; ++run) {
    config.seed = rng();
    const auto r = cso::optimize(test::sphere, five, config);
    bool ok = r.history.records.size() == config.max_iters;
    for (std::size_t i = 1; ok && i < r.history.records.size(); ++i) {
      ok = r.history.records[i].best_fitness <= r.history.records[i - 1].best_fitness;
    }
    monotone += ok;
  }
  if (monotone != 100) return fail(fmt::format("monotone in {}/100 runs", monotone));
  return pass(fmt::format("sphere {:.2e}, rosenbrock {:.2e}, monotone 100/100",
                          sphere.best_fitness, rosen.best_fitness));
}

Outcome metric_oracle() {
  Rng rng(20240611);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto counts = test::random_counts(rng);
    const auto cm = metrics::ConfusionMatrix::from_counts(counts);
    const auto pairs = test::expand_pairs(counts, rng);
    const auto oracle = test::brute_force_metrics(pairs, counts.size());
    const auto mismatch = test::compare_with_oracle(metrics::scalar_metrics(cm), cm, oracle);
    if (!mismatch.empty()) return fail(fmt::format("grid {}: {}", trial, mismatch));
  }
  return pass("1000 grids bit-identical");
}

Outcome reported_arithmetic() {
  const auto f1 = metrics::f1_score(0.84, 0.94);
  if (!f1 || fmt::format("{:.2f}", *f1) != "0.89") return fail("Lateral f1 does not round to 0.89");

  const std::vector<std::uint64_t> diagonal{8609, 2060, 1664, 464, 2300};
  std::uint64_t trace = 0;
  for (auto d : diagonal) trace += d;
  // Off-diagonal cells are not printed; spread them so the row sums match the supports.
  const auto cm = metrics::ConfusionMatrix::from_counts({{8609, 0, 40, 30, 37},
                                                         {0, 2060, 0, 0, 0},
                                                         {30, 0, 1664, 20, 11},
                                                         {10, 0, 6, 464, 10},
                                                         {20, 0, 10, 30, 2300}});
  if (cm.total() != 15351 || cm.trace() != trace) return fail("grid totals");
  const auto acc = fmt::format("{:.4f}", metrics::scalar_metrics(cm).accuracy);
  if (acc != "0.9835") return fail("accuracy " + acc);
  return pass(fmt::format("f1 {:.2f}, accuracy {}/15351 = {}", *f1, trace, acc));
}

Outcome split_fidelity() {
  const std::vector<std::size_t> support{43579, 10301, 8625, 2449, 11800};
  std::vector<int> labels;
  for (std::size_t c = 0; c < support.size(); ++c) {
    labels.insert(labels.end(), support[c], static_cast<int>(c));
  }
  Rng rng(1);
  shuffle(std::span(labels), rng);
  data::SplitSpec spec;
  spec.seed = 17;
  const auto idx = data::split_indices(labels, spec);
  if (idx.train.size() != 55262 || idx.val.size() != 6141 || idx.test.size() != 15351) {
    return fail(fmt::format("sizes ({}, {}, {})", idx.train.size(), idx.val.size(),
                            idx.test.size()));
  }
  const double n = static_cast<double>(labels.size());
  double worst = 0.0;
  for (const auto* part : {&idx.train, &idx.val, &idx.test}) {
    std::vector<std::size_t> count(support.size(), 0);
    for (auto i : *part) ++count[static_cast<std::size_t>(labels[i])];
    for (std::size_t c = 0; c < support.size(); ++c) {
      const double share = static_cast<double>(support[c]) * static_cast<double>(part->size()) / n;
      worst = std::max(worst, std::abs(static_cast<double>(count[c]) - share));
    }
  }
  if (worst > 1.0) return fail(fmt::format("class share off by {:.3f}", worst));
  return pass(fmt::format("(55262, 6141, 15351), worst class deviation {:.3f}", worst));
}

Outcome callbacks() {
  train::TrainConfig plateau_cfg;
  plateau_cfg.epochs = 10;
  const auto plateau = test::run_script({0.90, 0.91, 0.91, 0.91}, plateau_cfg);
  if (plateau.lr_after != std::vector<double>{1e-3, 1e-3, 1e-3, 5e-4}) {
    return fail("plateau schedule");
  }
  train::TrainConfig clamp_cfg;
  clamp_cfg.initial_lr = 1.5e-5;
  clamp_cfg.early_stop_patience = 10;
  const auto clamp = test::run_script({0.90, 0.90, 0.90, 0.90, 0.90}, clamp_cfg);
  if (clamp.lr_after != std::vector<double>{1.5e-5, 1.5e-5, 1e-5, 1e-5, 1e-5}) {
    return fail("clamp schedule");
  }
  const auto decline = test::run_script({0.90, 0.89, 0.88, 0.99, 0.99}, train::TrainConfig{});
  if (!decline.stopped || decline.epochs_run != 3) return fail("decline did not stop at epoch 3");
  return pass("halving, clamp and early stop scripts");
}

Outcome desk_training() {
  const auto ds = data::make_synthetic_blobs(10000, 5, data::kFlowFeatureCount, 6.0, 7);
  data::SplitSpec spec;
  spec.seed = 7;
  const auto parts = data::split(ds.records, spec);
  auto train_part = data::clean_and_scale(parts.train);
  auto val = parts.val, test_part = parts.test;
  data::apply_scaler(val, train_part.stats);
  data::apply_scaler(test_part, train_part.stats);
  const auto d = data::kFlowFeatureCount;

  train::TrainConfig config;
  config.seed = 7;
  const auto start = std::chrono::steady_clock::now();
  nn::Network net(nn::baseline_architecture(5), nn::baseline_input_shape(d), 7);
  const auto result = train::train(std::move(net), data::to_network_input(train_part.records, d),
                                   data::to_network_input(val, d), config);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto eval = train::evaluate(result.network, data::to_network_input(test_part, d));
  const auto epochs = result.state.history.size();
  if (epochs > 5) return fail(fmt::format("{} epochs", epochs));
  if (!(eval.accuracy >= 0.95)) return fail(fmt::format("test accuracy {:.4f}", eval.accuracy));
  if (seconds > 600) return fail(fmt::format("{:.0f} s", seconds));
  return pass(fmt::format("test accuracy {:.4f} after {} epochs in {:.1f} s", eval.accuracy,
                          epochs, seconds));
}

Outcome hybrid_search() {
  const auto d = data::kFlowFeatureCount;
  const auto ds = data::make_synthetic_blobs(1500, 5, d, 2.0, 11);
  data::SplitSpec spec;
  spec.seed = 11;
  const auto parts = data::split(ds.records, spec);
  auto train_part = data::clean_and_scale(parts.train);
  auto val = parts.val;
  data::apply_scaler(val, train_part.stats);
  const hyperopt::Datasets sets{data::to_network_input(train_part.records, d),
                                data::to_network_input(val, d)};
  const hyperopt::SearchSpace space;
  const auto arch = nn::baseline_architecture(5);

  cso::SwarmConfig swarm;
  swarm.n_cats = 4;
  swarm.max_iters = 3;
  swarm.seed = 11;
  const auto cso_result = hyperopt::optimize_hyperparams(space, sets, arch, swarm);
  const auto baseline = hyperopt::random_search(space, sets, arch, 12, 11);

  for (std::size_t i = 1; i < cso_result.history.size(); ++i) {
    if (cso_result.history[i].best_key < cso_result.history[i - 1].best_key) {
      return fail(fmt::format("history decreases at iteration {}", i + 1));
    }
  }
  const auto detail = fmt::format("swarm ({:.4f}, {:.4f}) over {} evaluations, random ({:.4f}, {:.4f})",
                                  cso_result.fitness.val_accuracy, cso_result.fitness.val_loss,
                                  cso_result.evaluations.size(), baseline.fitness.val_accuracy,
                                  baseline.fitness.val_loss);
  if (hyperopt::better(baseline.fitness, cso_result.fitness)) return fail(detail);
  return pass(detail);
}

// Column layout of a flow-meter export: identifiers, 75 numeric features,
// an activity column and the stage label.
std::string flow_export_csv(std::size_t rows, std::uint64_t seed) {
  const auto ds = data::make_synthetic_blobs(rows, 5, data::kFlowFeatureCount, 5.0, seed);
  const std::vector<std::string> stage{"BENIGN", "Data Exfiltration", "Establish Foothold",
                                       "Lateral Movement", "Reconnaissance"};
  const std::vector<std::string> leading{"Flow Duration", "Total Fwd Packet", "Total Bwd packets",
                                         "Total Length of Fwd Packet", "Flow Bytes/s",
                                         "Flow Packets/s"};
  std::string out = "Flow ID,Src IP,Dst IP,Timestamp";
  for (std::size_t k = 0; k < data::kFlowFeatureCount; ++k) {
    out += ',' + (k < leading.size() ? leading[k] : fmt::format("Feature {}", k));
  }
  out += ",Activity,Stage\n";
  Rng rng(seed);
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& r = ds.records[i];
    out += fmt::format("10.0.0.{0}-10.0.1.{1}-6,10.0.0.{0},10.0.1.{1},2020-07-0{2} 10:00:00",
                       i % 250, (i * 7) % 250, 1 + i % 5);
    for (std::size_t k = 0; k < r.features.size(); ++k) {
      const double u = uniform01(rng);
      if (k == 4 && u < 0.01) out += ",Infinity";
      else if (k == 5 && u < 0.01) out += ",NaN";
      else out += fmt::format(",{:.6g}", r.features[k]);
    }
    out += fmt::format(",{},\"{}\"\n", r.label == 0 ? "Normal" : "Attack",
                       stage[static_cast<std::size_t>(r.label)]);
  }
  return out;
}

int cli_run(const std::vector<std::string>& args, std::string* out = nullptr,
            const std::string& input = "") {
  std::vector<std::string> full{"csocnn"};
  full.insert(full.end(), args.begin(), args.end());
  std::istringstream in(input);
  std::ostringstream o, e;
  const int code = cli::run(full, in, o, e);
  if (out) *out = o.str();
  if (code != 0) std::fprintf(stderr, "%s", e.str().c_str());
  return code;
}

Outcome flow_export_pipeline() {
  test::TempDir dir("csocnn-accept-flows");
  const auto csv = dir / "flows.csv";
  test::spit(csv, flow_export_csv(1200, 3));
  const std::vector<std::string> columns{"--data", csv.string(), "--label-column", "Stage",
                                         "--ignore-columns", "Flow ID,Src IP,Dst IP,Timestamp,Activity"};
  std::vector<std::string> train_args{"train", "--epochs", "2", "--batch", "64", "--seed", "3",
                                      "--out", (dir / "train").string(), "--quiet"};
  train_args.insert(train_args.end(), columns.begin(), columns.end());
  if (const int code = cli_run(train_args); code != 0) return fail(fmt::format("train exit {}", code));

  std::vector<std::string> eval_args{"evaluate", "--model", (dir / "train" / "csocnn.model").string(),
                                     "--out", (dir / "eval").string(), "--quiet"};
  eval_args.insert(eval_args.end(), columns.begin(), columns.end());
  if (const int code = cli_run(eval_args); code != 0) return fail(fmt::format("evaluate exit {}", code));

  for (const char* sub : {"train", "eval"}) {
    const auto metrics = json::parse(test::slurp(dir / sub / "metrics.json"));
    for (const auto& field : metrics::performance_field_names()) {
      if (!metrics.contains(field)) return fail(fmt::format("{} metrics lack {}", sub, field));
    }
  }
  const auto manifest = json::parse(test::slurp(dir / "train" / "manifest.json"));
  return pass(fmt::format("train and evaluate complete, {} fields, {} non-finite cells cleaned",
                          metrics::performance_field_names().size(),
                          manifest.at("inputs").at("nan_values").get<std::size_t>() +
                              manifest.at("inputs").at("inf_values").get<std::size_t>()));
}

Outcome detector_consistency() {
  const auto ds = data::make_synthetic_blobs(150, 3, 6, 1.5, 6);
  const auto stats = data::fit_scaler(ds.records);
  const auto det = detect::Detector::from_model(test::random_model(6, 3, stats, 4), {});
  const auto detections = det.score_batch(ds.records);
  std::vector<double> scores;
  std::vector<bool> anomalous;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    scores.push_back(detections[i].score);
    anomalous.push_back(ds.records[i].label != 0);
  }
  if (const auto why = test::sweep_against_roc(scores, anomalous); !why.empty()) return fail(why);

  const auto f = test::twenty_sample_fixture();
  if (const auto why = test::sweep_against_roc(f.scores, f.anomalous); !why.empty()) {
    return fail("fixture " + why);
  }
  auto flags = std::make_unique<bool[]>(f.anomalous.size());
  std::copy(f.anomalous.begin(), f.anomalous.end(), flags.get());
  const std::span<const bool> labels(flags.get(), f.anomalous.size());
  const double t = detect::calibrate_from_scores(f.scores, labels, detect::CalibrationTarget::max_f1());
  if (t != test::exhaustive_max_f1(f.scores, f.anomalous)) return fail("max_f1 threshold");
  for (double x : {0.0, 0.1, 0.25, 0.5, 1.0}) {
    if (detect::calibrate_from_scores(f.scores, labels, detect::CalibrationTarget::fpr_at(x)) !=
        test::exhaustive_fpr_at(f.scores, f.anomalous, x)) {
      return fail(fmt::format("fpr_at({}) threshold", x));
    }
  }
  return pass(fmt::format("{} roc points reproduced, max_f1 threshold {}",
                          test::roc_of(scores, anomalous).points.size(), t));
}

Outcome cli_determinism() {
  test::TempDir dir("csocnn-accept-det");
  const auto flows = dir / "flows.csv";
  {
    const auto ds = data::make_synthetic_blobs(40, 5, data::kFlowFeatureCount, 6.0, 5);
    std::ostringstream s;
    data::write_csv(s, ds);
    test::spit(flows, s.str());
  }
  struct Command {
    std::string name;
    std::vector<std::string> args;
    std::vector<std::string> compare;
  };
  auto model = [&](const std::string& run) { return (dir / run / "csocnn.model").string(); };
  std::vector<Command> commands{
      {"train",
       {"train", "--synthetic", "--samples", "800", "--epochs", "2", "--batch", "64", "--seed", "21"},
       {"history.csv", "metrics.json", "scaler.json", "csocnn.model"}},
      {"optimize",
       {"optimize", "--synthetic", "--samples", "300", "--features", "20", "--cats", "2",
        "--iters", "2", "--smp", "2", "--seed", "21"},
       {"convergence.csv", "evaluations.csv", "best_hyperparams.json", "metrics.json"}},
      {"evaluate",
       {"evaluate", "--model", "", "--synthetic", "--samples", "800", "--seed", "21"},
       {"metrics.json", "roc.csv", "probabilities.csv", "confusion_matrix.csv",
        "classification_report.txt"}},
      {"detect",
       {"detect", "--model", "", "--input", flows.string(), "--calibrate", "max_f1",
        "--synthetic", "--samples", "800", "--seed", "21"},
       {}}};

  std::vector<std::string> checked;
  for (auto& c : commands) {
    std::string streamed[2];
    for (int rep = 0; rep < 2; ++rep) {
      auto args = c.args;
      if (args[0] == "evaluate" || args[0] == "detect") args[2] = model("train-0");
      const auto out = dir / fmt::format("{}-{}", c.name, rep);
      args.insert(args.end(), {"--out", out.string(), "--quiet"});
      if (const int code = cli_run(args, &streamed[rep]); code != 0) {
        return fail(fmt::format("{} exit {}", c.name, code));
      }
    }
    if (streamed[0] != streamed[1]) return fail(c.name + " standard output differs");
    const auto m0 = json::parse(test::slurp(dir / (c.name + "-0") / "manifest.json"));
    const auto m1 = json::parse(test::slurp(dir / (c.name + "-1") / "manifest.json"));
    if (m0.at("metrics") != m1.at("metrics")) return fail(c.name + " manifest metrics differ");
    for (const auto& f : c.compare) {
      if (test::slurp(dir / (c.name + "-0") / f) != test::slurp(dir / (c.name + "-1") / f)) {
        return fail(c.name + " " + f + " differs");
      }
    }
    checked.push_back(c.name);
  }
  std::string names;
  for (const auto& n : checked) names += (names.empty() ? "" : ", ") + n;
  return pass(names + " repeat identically");
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {"architecture fidelity", architecture},
      {"gradient correctness", gradients},
      {"cso convergence", cso_convergence},
      {"metric oracle equivalence", metric_oracle},
      {"reported arithmetic", reported_arithmetic},
      {"split fidelity", split_fidelity},
      {"callback semantics", callbacks},
      {"desk-scale training", desk_training},
      {"hybrid search sanity", hybrid_search},
      {"flow-export csv pipeline", flow_export_pipeline},
      {"detector consistency", detector_consistency},
      {"cli determinism", cli_determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      o = criteria[i].check();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool ok = o.failure.empty();
    failures += !ok;
    std::printf("%s %2zu %s: %s [%.1f s]\n", ok ? "PASS" : "FAIL", i + 1, criteria[i].name,
                ok ? o.detail.c_str() : o.failure.c_str(), seconds);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
