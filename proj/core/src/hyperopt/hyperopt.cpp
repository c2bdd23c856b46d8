#include "csocnn/hyperopt/hyperopt.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <tuple>
#include <ostream>

#include <fmt/format.h>

#include "csocnn/error.hpp"
#include "csocnn/nn/loss.hpp"
#include "csocnn/nn/network.hpp"
#include "csocnn/random.hpp"
#include "csocnn/train/trainer.hpp"

namespace csocnn::hyperopt {

const double kWorstLoss = -std::log(nn::kProbabilityFloor);

namespace {

std::size_t interpolate(const IntRange& r, double p) {
  const double v = static_cast<double>(r.lo) + p * static_cast<double>(r.hi - r.lo);
  return std::clamp(static_cast<std::size_t>(std::llround(v)), r.lo, r.hi);
}

nn::Shape sample_shape(const data::NetworkInput& set) {
  const auto& shape = set.batch.shape();
  return nn::Shape(shape.begin() + 1, shape.end());
}

}  // namespace

void SearchSpace::validate() const {
  if (!(learning_rate.lo > 0.0 && learning_rate.lo < learning_rate.hi)) {
    throw PreconditionError("learning rate range must satisfy 0 < lo < hi");
  }
  if (!(batch_size.lo >= 1 && batch_size.lo < batch_size.hi)) {
    throw PreconditionError("batch size range must satisfy 1 <= lo < hi");
  }
  if (!(epochs.lo >= 1 && epochs.lo < epochs.hi)) {
    throw PreconditionError("epoch range must satisfy 1 <= lo < hi");
  }
}

nlohmann::json HyperParams::to_json() const {
  return {{"learning_rate", learning_rate}, {"batch_size", batch_size}, {"epochs", epochs}};
}

HyperParams decode(std::span<const double> position, const SearchSpace& space) {
  if (position.size() != 3) throw ShapeError("hyperparameter position must have 3 coordinates");
  const double p0 = std::clamp(position[0], 0.0, 1.0);
  const double lo = std::log10(space.learning_rate.lo), hi = std::log10(space.learning_rate.hi);
  HyperParams hp;
  hp.learning_rate = std::clamp(std::pow(10.0, lo + p0 * (hi - lo)), space.learning_rate.lo,
                                space.learning_rate.hi);
  hp.batch_size = interpolate(space.batch_size, std::clamp(position[1], 0.0, 1.0));
  hp.epochs = interpolate(space.epochs, std::clamp(position[2], 0.0, 1.0));
  return hp;
}

Fitness Fitness::worst() { return {0.0, kWorstLoss, true}; }

bool better(const Fitness& a, const Fitness& b) {
  if (a.val_accuracy != b.val_accuracy) return a.val_accuracy > b.val_accuracy;
  return a.val_loss < b.val_loss;
}

double fitness_key(const Fitness& f, std::size_t validation_size) {
  const double loss = std::clamp(f.val_loss, 0.0, kWorstLoss);
  const double n = static_cast<double>(std::max<std::size_t>(validation_size, 1));
  return f.val_accuracy - loss / (2.0 * n * (kWorstLoss + 1.0));
}

train::TrainResult train_candidate(const HyperParams& hp, const Datasets& datasets,
                                   const std::vector<nn::LayerSpec>& architecture,
                                   std::uint64_t seed, const train::TrainConfig& base) {
  if (hp.epochs < 1) throw PreconditionError("candidate needs at least one epoch");
  if (hp.batch_size < 1) throw PreconditionError("candidate batch size must be >= 1");
  if (!(hp.learning_rate > 0.0)) throw PreconditionError("candidate learning rate must be > 0");

  train::TrainConfig config = base;
  config.epochs = hp.epochs;
  config.batch_size = hp.batch_size;
  config.initial_lr = hp.learning_rate;
  config.min_lr = std::min(config.min_lr, hp.learning_rate);
  config.seed = derive_seed(seed, 2);
  config.checkpoint_dir.clear();

  nn::Network network(architecture, sample_shape(datasets.train), derive_seed(seed, 1));
  return train::train(std::move(network), datasets.train, datasets.validation, config);
}

Fitness evaluate_candidate(const HyperParams& hp, const Datasets& datasets,
                           const std::vector<nn::LayerSpec>& architecture, std::uint64_t seed,
                           const train::TrainConfig& base) {
  try {
    const auto result = train_candidate(hp, datasets, architecture, seed, base);
    const auto val = train::evaluate(result.network, datasets.validation);
    if (!std::isfinite(val.loss)) return Fitness::worst();
    return {val.accuracy, val.loss, false};
  } catch (const TrainingDiverged&) {
    return Fitness::worst();
  }
}

void HyperoptResult::write_history_csv(std::ostream& out) const {
  out << "iter,best_fitness,mean_fitness,best_val_accuracy,best_val_loss,learning_rate,"
         "batch_size,epochs\n";
  for (const auto& r : history) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{},{}\n", r.iter, r.best_key,
                       r.mean_key, r.best.val_accuracy, r.best.val_loss,
                       r.best_hyperparams.learning_rate, r.best_hyperparams.batch_size,
                       r.best_hyperparams.epochs);
  }
}

nlohmann::json HyperoptResult::best_record() const {
  auto record = best.to_json();
  record["val_accuracy"] = fitness.val_accuracy;
  record["val_loss"] = fitness.val_loss;
  return record;
}

HyperoptResult optimize_hyperparams(const SearchSpace& space, const Datasets& datasets,
                                    const std::vector<nn::LayerSpec>& architecture,
                                    cso::SwarmConfig swarm, const train::TrainConfig& base,
                                    const std::function<bool()>& cancel) {
  space.validate();
  swarm.objective = cso::Objective::maximize;
  const std::size_t n_val = datasets.validation.labels.size();

  std::mutex log_mutex;
  std::vector<Evaluation> log;
  const cso::FitnessFn fitness = [&](std::span<const double> x, const cso::EvalContext& ctx) {
    if (cancel && cancel()) throw Cancelled("hyperparameter search cancelled");
    Evaluation e;
    e.iteration = ctx.iteration;
    e.cat_index = ctx.cat_index;
    e.candidate = ctx.candidate;
    e.seed = derive_seed(swarm.seed, ctx.cat_index, ctx.iteration);
    e.position.assign(x.begin(), x.end());
    e.hyperparams = decode(x, space);
    e.fitness = evaluate_candidate(e.hyperparams, datasets, architecture, e.seed, base);
    const double key = fitness_key(e.fitness, n_val);
    std::lock_guard lock(log_mutex);
    log.push_back(std::move(e));
    return key;
  };

  const cso::Bounds unit(3, cso::Bound{0.0, 1.0});
  const auto run = cso::optimize(fitness, unit, swarm);

  std::sort(log.begin(), log.end(), [](const Evaluation& a, const Evaluation& b) {
    return std::tie(a.iteration, a.cat_index, a.candidate) <
           std::tie(b.iteration, b.cat_index, b.candidate);
  });
  auto lookup = [&](const std::vector<double>& position, double key) -> const Evaluation& {
    for (const auto& e : log) {
      if (e.position == position && fitness_key(e.fitness, n_val) == key) return e;
    }
    throw StateError("best swarm position missing from the evaluation log");
  };

  HyperoptResult result;
  for (const auto& r : run.history.records) {
    const auto& e = lookup(r.best_position, r.best_fitness);
    result.history.push_back({r.iter, e.fitness, e.hyperparams, r.best_fitness, r.mean_fitness});
  }
  const auto& best = lookup(run.best_position, run.best_fitness);
  result.best = best.hyperparams;
  result.fitness = best.fitness;
  result.best_seed = best.seed;
  result.best_position = run.best_position;
  result.evaluations = std::move(log);
  return result;
}

RandomSearchResult random_search(const SearchSpace& space, const Datasets& datasets,
                                 const std::vector<nn::LayerSpec>& architecture,
                                 std::size_t samples, std::uint64_t seed,
                                 const train::TrainConfig& base) {
  space.validate();
  if (samples == 0) throw PreconditionError("random search needs at least one sample");
  Rng rng(derive_seed(seed, 0x5eed));
  RandomSearchResult result;
  for (std::size_t i = 0; i < samples; ++i) {
    Evaluation e;
    e.cat_index = i;
    e.seed = derive_seed(seed, i);
    e.position = {uniform01(rng), uniform01(rng), uniform01(rng)};
    e.hyperparams = decode(e.position, space);
    e.fitness = evaluate_candidate(e.hyperparams, datasets, architecture, e.seed, base);
    if (i == 0 || better(e.fitness, result.fitness)) {
      result.best = e.hyperparams;
      result.fitness = e.fitness;
    }
    result.evaluations.push_back(std::move(e));
  }
  return result;
}

}  // namespace csocnn::hyperopt
