#include "csocnn/train/callbacks.hpp"

#include <algorithm>
#include <ostream>

#include <fmt/format.h>

#include "csocnn/error.hpp"
#include "csocnn/nn/model_io.hpp"

namespace csocnn::train {

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw PreconditionError(std::string("train config: ") + what);
  };
  require(epochs >= 1, "epochs must be >= 1");
  require(batch_size >= 1, "batch size must be >= 1");
  require(initial_lr > 0.0, "initial learning rate must be positive");
  require(lr_factor > 0.0 && lr_factor < 1.0, "lr factor must lie in (0, 1)");
  require(min_lr > 0.0, "minimum learning rate must be positive");
  require(min_lr <= initial_lr, "minimum learning rate exceeds the initial rate");
}

TrainingState TrainingState::start(const TrainConfig& config) {
  TrainingState s;
  s.lr = config.initial_lr;
  return s;
}

void TrainingState::write_csv(std::ostream& out) const {
  out << "epoch,train_loss,train_acc,val_loss,val_acc,lr\n";
  for (const auto& r : history) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.epoch, r.train_loss,
                       r.train_acc, r.val_loss, r.val_acc, r.lr);
  }
}

std::string checkpoint_filename(std::size_t epoch, double val_loss) {
  return fmt::format("checkpoint-{:03}-{:.4}.model", epoch, val_loss);
}

bool checkpoint(const nn::Network* network, TrainingState& state, std::size_t epoch,
                double val_loss, double val_acc, const std::filesystem::path& dir,
                const std::vector<std::string>& class_names) {
  if (!(val_acc > state.best_val_acc)) return false;
  if (network != nullptr && !dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create checkpoint directory '" + dir.string() + "'");
    const auto path = dir / checkpoint_filename(epoch, val_loss);
    nn::save_model(path, *network, class_names);
    state.checkpoint_path = path;
  }
  state.best_val_acc = val_acc;
  state.best_val_loss = val_loss;
  state.best_epoch = epoch;
  return true;
}

bool reduce_lr_on_plateau(TrainingState& state, const TrainConfig& config, bool improved) {
  if (improved) {
    state.lr_wait = 0;
    return false;
  }
  if (++state.lr_wait < config.lr_patience) return false;
  const double reduced = std::max(state.lr * config.lr_factor, config.min_lr);
  if (!(reduced < state.lr)) return false;
  state.lr = reduced;
  state.lr_wait = 0;
  return true;
}

bool early_stopping(TrainingState& state, const TrainConfig& config, bool improved) {
  if (improved) {
    state.stop_wait = 0;
    return false;
  }
  if (++state.stop_wait < config.early_stop_patience) return false;
  state.stopped_early = true;
  return true;
}

EpochDecision apply_callbacks(const nn::Network* network, TrainingState& state,
                              const TrainConfig& config, std::size_t epoch, double val_loss,
                              double val_acc) {
  EpochDecision d;
  d.improved = checkpoint(network, state, epoch, val_loss, val_acc, config.checkpoint_dir,
                          config.class_names);
  d.lr_reduced = reduce_lr_on_plateau(state, config, d.improved);
  d.stop = early_stopping(state, config, d.improved);
  return d;
}

}  // namespace csocnn::train
