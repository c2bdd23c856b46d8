#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "csocnn/cso/swarm.hpp"
#include "csocnn/data/dataset.hpp"
#include "csocnn/nn/layer.hpp"
#include "csocnn/train/callbacks.hpp"
#include "csocnn/train/trainer.hpp"

namespace csocnn::hyperopt {

struct RealRange {
  double lo = 0.0;
  double hi = 1.0;
};

struct IntRange {
  std::size_t lo = 0;
  std::size_t hi = 1;
};

struct SearchSpace {
  RealRange learning_rate{1e-4, 1e-2};  // searched in log10
  IntRange batch_size{32, 1024};
  IntRange epochs{1, 5};

  void validate() const;
};

struct HyperParams {
  double learning_rate = 1e-3;
  std::size_t batch_size = 640;
  std::size_t epochs = 5;

  nlohmann::json to_json() const;
  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

// Maps a point of the unit cube onto the space; coordinates are clamped to [0, 1].
HyperParams decode(std::span<const double> position, const SearchSpace& space);

// Loss assigned to a diverged candidate: the cross-entropy of the probability floor.
extern const double kWorstLoss;

struct Fitness {
  double val_accuracy = 0.0;
  double val_loss = 0.0;
  bool diverged = false;

  static Fitness worst();
  friend bool operator==(const Fitness&, const Fitness&) = default;
};

// Higher accuracy wins; equal accuracy goes to the lower loss.
bool better(const Fitness& a, const Fitness& b);

// Scalar that orders candidates like better() when accuracies are multiples
// of 1/validation_size; the swarm maximizes it.
double fitness_key(const Fitness& f, std::size_t validation_size);

struct Datasets {
  data::NetworkInput train;
  data::NetworkInput validation;
};

// Trains a fresh network built from `seed`. `base` supplies the callback
// settings; its lr/batch/epochs/seed are replaced.
train::TrainResult train_candidate(const HyperParams& hp, const Datasets& datasets,
                                   const std::vector<nn::LayerSpec>& architecture,
                                   std::uint64_t seed, const train::TrainConfig& base = {});

// Validation fitness of train_candidate's restored best model. Divergence
// yields Fitness::worst().
Fitness evaluate_candidate(const HyperParams& hp, const Datasets& datasets,
                           const std::vector<nn::LayerSpec>& architecture, std::uint64_t seed,
                           const train::TrainConfig& base = {});

struct Evaluation {
  std::size_t iteration = 0;
  std::size_t cat_index = 0;
  std::size_t candidate = 0;
  std::uint64_t seed = 0;  // passed to evaluate_candidate
  std::vector<double> position;
  HyperParams hyperparams;
  Fitness fitness;
};

struct ConvergenceRow {
  std::size_t iter = 0;
  Fitness best;
  HyperParams best_hyperparams;
  double best_key = 0.0;
  double mean_key = 0.0;
};

struct HyperoptResult {
  HyperParams best;
  Fitness fitness;
  std::uint64_t best_seed = 0;
  std::vector<double> best_position;
  std::vector<ConvergenceRow> history;
  std::vector<Evaluation> evaluations;  // ordered by (iteration, cat, candidate)

  // Columns: iter,best_fitness,mean_fitness,best_val_accuracy,best_val_loss,
  // learning_rate,batch_size,epochs
  void write_history_csv(std::ostream& out) const;
  // learning_rate, batch_size, epochs, val_accuracy, val_loss
  nlohmann::json best_record() const;
};

// Each candidate network is seeded from (swarm.seed, cat index, iteration).
// The swarm searches the unit cube and always maximizes. When `cancel`
// returns true before an evaluation, Cancelled is thrown (nested inside
// cso::EvaluationError).
HyperoptResult optimize_hyperparams(const SearchSpace& space, const Datasets& datasets,
                                    const std::vector<nn::LayerSpec>& architecture,
                                    cso::SwarmConfig swarm, const train::TrainConfig& base = {},
                                    const std::function<bool()>& cancel = {});

struct RandomSearchResult {
  HyperParams best;
  Fitness fitness;
  std::vector<Evaluation> evaluations;
};

// Uniform samples of the unit cube; sample i is seeded from (seed, i).
RandomSearchResult random_search(const SearchSpace& space, const Datasets& datasets,
                                 const std::vector<nn::LayerSpec>& architecture,
                                 std::size_t samples, std::uint64_t seed,
                                 const train::TrainConfig& base = {});

}  // namespace csocnn::hyperopt
