#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "csocnn/nn/network.hpp"

namespace csocnn::train {

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 640;
  double initial_lr = 1e-3;
  double lr_factor = 0.5;
  std::size_t lr_patience = 2;
  double min_lr = 1e-5;
  std::size_t early_stop_patience = 2;
  std::uint64_t seed = 0;
  // Where improving epochs are written; empty keeps the best model in memory only.
  std::filesystem::path checkpoint_dir;
  std::vector<std::string> class_names;  // stored in checkpoint files

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double lr = 0.0;  // rate used during this epoch
};

struct TrainingState {
  std::vector<EpochRecord> history;
  double lr = 0.0;
  double best_val_acc = -std::numeric_limits<double>::infinity();
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  std::size_t lr_wait = 0;    // epochs without improvement, reduce-on-plateau
  std::size_t stop_wait = 0;  // epochs without improvement, early stopping
  bool stopped_early = false;
  bool interrupted = false;
  std::filesystem::path checkpoint_path;

  static TrainingState start(const TrainConfig& config);

  // Columns: epoch,train_loss,train_acc,val_loss,val_acc,lr
  void write_csv(std::ostream& out) const;
};

// checkpoint-{epoch:03}-{val_loss:.4}.model
std::string checkpoint_filename(std::size_t epoch, double val_loss);

// Records a new best when val_acc strictly exceeds the previous best and, if
// `dir` is non-empty, writes the model there. Returns whether it improved.
// Throws IoError when the file cannot be written.
bool checkpoint(const nn::Network* network, TrainingState& state, std::size_t epoch,
                double val_loss, double val_acc, const std::filesystem::path& dir,
                const std::vector<std::string>& class_names = {});

// Returns true when the rate was lowered (never below min_lr).
bool reduce_lr_on_plateau(TrainingState& state, const TrainConfig& config, bool improved);

// Returns true when training should halt.
bool early_stopping(TrainingState& state, const TrainConfig& config, bool improved);

struct EpochDecision {
  bool improved = false;
  bool lr_reduced = false;
  bool stop = false;
};

// Checkpoint, then reduce-on-plateau, then early stopping.
EpochDecision apply_callbacks(const nn::Network* network, TrainingState& state,
                              const TrainConfig& config, std::size_t epoch, double val_loss,
                              double val_acc);

}  // namespace csocnn::train
