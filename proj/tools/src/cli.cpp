#include "csocnn_cli/cli.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "commands.hpp"
#include "csocnn/cso/swarm.hpp"
#include "csocnn/error.hpp"

namespace csocnn::cli {

namespace {

std::atomic<bool> g_interrupted{false};

void add_data_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--data", o.data, "Labeled flow CSV");
  cmd->add_flag("--synthetic", o.synthetic, "Use generated Gaussian blobs instead of --data");
  cmd->add_option("--samples", o.samples, "Synthetic record count")->capture_default_str();
  cmd->add_option("--separation", o.separation, "Synthetic class separation")
      ->capture_default_str();
  cmd->add_option("--label-column", o.label_column, "Label column name")->capture_default_str();
  cmd->add_option("--ignore-columns", o.ignore_columns, "Non-feature columns to skip")
      ->delimiter(',');
  cmd->add_option("--features", o.features, "Expected feature columns")->capture_default_str();
}

void add_common_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--seed", o.seed, "Global seed (random and recorded when absent)");
  cmd->add_option("--out", o.out, "Output directory")
      ->envname("CSOCNN_OUT")
      ->capture_default_str();
  cmd->add_flag("--quiet", o.quiet, "No progress output");
}

void add_train_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--epochs", o.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--batch", o.batch, "Batch size")->capture_default_str();
  cmd->add_option("--lr", o.lr, "Initial learning rate")->capture_default_str();
}

void add_swarm_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--cats", o.cats, "Swarm size")->capture_default_str();
  cmd->add_option("--iters", o.iters, "Swarm iterations")->capture_default_str();
  cmd->add_option("--mr", o.mr, "Mixture ratio (fraction tracing)")->capture_default_str();
  cmd->add_option("--smp", o.smp, "Seeking memory pool")->capture_default_str();
  cmd->add_option("--srd", o.srd, "Seeking range of the selected dimension")
      ->capture_default_str();
  cmd->add_option("--cdc", o.cdc, "Counts of dimension to change")->capture_default_str();
  cmd->add_option("--c1", o.c1, "Tracing acceleration constant")->capture_default_str();
  cmd->add_option("--workers", o.workers, "Parallel candidate evaluations")
      ->capture_default_str();
}

struct Classified {
  const char* type;
  int code;
};

Classified classify(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e)) return {"UsageError", kExitUsage};
  if (dynamic_cast<const SchemaError*>(&e)) return {"SchemaError", kExitFormat};
  if (dynamic_cast<const ParseError*>(&e)) return {"ParseError", kExitFormat};
  if (dynamic_cast<const ModelFormatError*>(&e)) return {"ModelFormatError", kExitFormat};
  if (dynamic_cast<const ScalerMismatch*>(&e)) return {"ScalerMismatch", kExitFormat};
  if (dynamic_cast<const FormatError*>(&e)) return {"FormatError", kExitFormat};
  if (dynamic_cast<const TrainingDiverged*>(&e)) return {"TrainingDiverged", kExitNumeric};
  if (dynamic_cast<const UndefinedMetric*>(&e)) return {"UndefinedMetric", kExitNumeric};
  if (dynamic_cast<const NumericError*>(&e)) return {"NumericError", kExitNumeric};
  if (dynamic_cast<const IoError*>(&e)) return {"IoError", kExitFormat};
  if (dynamic_cast<const ShapeError*>(&e)) return {"ShapeError", kExitFormat};
  if (dynamic_cast<const LabelError*>(&e)) return {"LabelError", kExitFormat};
  if (dynamic_cast<const StratifyError*>(&e)) return {"StratifyError", kExitFormat};
  if (dynamic_cast<const DegenerateClass*>(&e)) return {"DegenerateClass", kExitFormat};
  if (dynamic_cast<const PreconditionError*>(&e)) return {"PreconditionError", kExitUsage};
  if (dynamic_cast<const BoundsError*>(&e)) return {"BoundsError", kExitUsage};
  if (dynamic_cast<const StateError*>(&e)) return {"StateError", kExitFailure};
  return {"Error", kExitFailure};
}

int report(const std::exception& e, std::ostream& err) {
  const auto c = classify(e);
  nlohmann::json record{{"error", {{"type", c.type}, {"message", e.what()}, {"exit_code", c.code}}}};
  err << record.dump() << '\n';
  return c.code;
}

// EvaluationError wraps whatever the fitness function threw.
int report_nested(const cso::EvaluationError& e, std::ostream& err) {
  try {
    std::rethrow_if_nested(e);
  } catch (const Cancelled&) {
    return kExitInterrupted;
  } catch (const std::exception& inner) {
    return report(inner, err);
  }
  return report(e, err);
}

}  // namespace

void request_interrupt() noexcept { g_interrupted.store(true); }
void clear_interrupt() noexcept { g_interrupted.store(false); }
bool interrupt_requested() noexcept { return g_interrupted.load(); }

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err) {
  Options o;
  CLI::App app{"CNN intrusion-stage classifier with cat swarm hyperparameter search", "csocnn"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "Train the baseline network");
  add_data_options(train, o);
  add_common_options(train, o);
  add_train_options(train, o);

  auto* optimize = app.add_subcommand("optimize", "Search lr/batch/epochs with the cat swarm");
  add_data_options(optimize, o);
  add_common_options(optimize, o);
  add_swarm_options(optimize, o);

  auto* evaluate = app.add_subcommand("evaluate", "Score a model on a labeled dataset");
  evaluate->add_option("--model", o.model, "Model file")->required();
  evaluate->add_option("--split", o.split, "Records to score: test or all")
      ->check(CLI::IsMember({"test", "all"}))
      ->capture_default_str();
  add_data_options(evaluate, o);
  add_common_options(evaluate, o);

  auto* detect = app.add_subcommand("detect", "Stream anomaly verdicts for flow records");
  detect->add_option("--model", o.model, "Model file")->required();
  detect->add_option("--input", o.input, "Record CSV, '-' for standard input")
      ->capture_default_str();
  detect->add_option("--threshold", o.threshold, "Anomaly threshold in [0, 1]")
      ->capture_default_str();
  detect->add_option("--score-kind", o.score_kind, "non_benign_mass or one_minus_max_prob")
      ->capture_default_str();
  detect->add_option("--calibrate", o.calibrate,
                     "Pick the threshold on the validation split: max_f1 or fpr:X");
  detect->add_option("--benign-class", o.benign_class, "Name of the normal class");
  detect->add_option("--scaler", o.scaler, "Scaler statistics JSON (default: from the model)");
  add_data_options(detect, o);
  add_common_options(detect, o);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    if (e.get_name() == "CallForHelp") {
      out << sub->help();
      return kExitOk;
    }
    nlohmann::json record{
        {"error", {{"type", "UsageError"}, {"message", e.what()}, {"exit_code", kExitUsage}}}};
    err << record.dump() << '\n';
    return kExitUsage;
  }

  Io io{in, out, err};
  try {
    if (*train) return cmd_train(o, io);
    if (*optimize) return cmd_optimize(o, io);
    if (*evaluate) return cmd_evaluate(o, io);
    return cmd_detect(o, io);
  } catch (const cso::EvaluationError& e) {
    return report_nested(e, err);
  } catch (const std::exception& e) {
    return report(e, err);
  }
}

}  // namespace csocnn::cli
