#include "csocnn/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "csocnn/error.hpp"
#include "csocnn/nn/loss.hpp"
#include "csocnn/random.hpp"

namespace csocnn::train {

namespace {

std::size_t sample_size(const nn::Tensor& batch) {
  return batch.dim(0) == 0 ? nn::shape_size(batch.shape()) : batch.size() / batch.dim(0);
}

nn::Tensor gather_rows(const nn::Tensor& source, std::span<const std::size_t> rows) {
  const std::size_t width = sample_size(source);
  nn::Shape shape = source.shape();
  shape[0] = rows.size();
  nn::Tensor out(shape);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy_n(source.data().begin() + static_cast<std::ptrdiff_t>(rows[r] * width), width,
                out.data().begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  return out;
}

nn::Tensor slice_rows(const nn::Tensor& source, std::size_t begin, std::size_t end) {
  const std::size_t width = sample_size(source);
  nn::Shape shape = source.shape();
  shape[0] = end - begin;
  std::vector<float> values(source.data().begin() + static_cast<std::ptrdiff_t>(begin * width),
                            source.data().begin() + static_cast<std::ptrdiff_t>(end * width));
  return nn::Tensor(shape, std::move(values));
}

void check_input(const data::NetworkInput& set, const char* name) {
  if (set.batch.rank() == 0 || set.batch.dim(0) != set.labels.size()) {
    throw ShapeError(std::string(name) + " set: batch rows and labels disagree");
  }
}

}  // namespace

std::vector<int> argmax_rows(const nn::Tensor& probabilities) {
  const std::size_t n = probabilities.dim(0), k = probabilities.dim(1);
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = probabilities.data().subspan(i * k, k);
    out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

EvalResult evaluate(const nn::Network& network, const data::NetworkInput& dataset,
                    std::size_t batch_size) {
  check_input(dataset, "evaluation");
  const std::size_t n = dataset.labels.size();
  const std::size_t k = network.num_classes();
  EvalResult result;
  result.probabilities = nn::Tensor({n, k});
  if (n == 0) return result;
  batch_size = std::max<std::size_t>(batch_size, 1);

  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const std::size_t end = std::min(n, begin + batch_size);
    const auto probs = network.predict(slice_rows(dataset.batch, begin, end));
    std::copy(probs.data().begin(), probs.data().end(),
              result.probabilities.data().begin() + static_cast<std::ptrdiff_t>(begin * k));
  }
  result.loss = nn::sparse_categorical_crossentropy(result.probabilities, dataset.labels);
  result.predictions = argmax_rows(result.probabilities);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) correct += result.predictions[i] == dataset.labels[i];
  result.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  return result;
}

TrainResult train(nn::Network network, const data::NetworkInput& train_set,
                  const data::NetworkInput& val_set, const TrainConfig& config,
                  const TrainHooks& hooks) {
  config.validate();
  check_input(train_set, "training");
  check_input(val_set, "validation");
  if (train_set.labels.empty()) throw PreconditionError("training set is empty");
  if (val_set.labels.empty()) throw PreconditionError("validation set is empty");

  const std::size_t n = train_set.labels.size();
  TrainingState state = TrainingState::start(config);
  nn::AdamState<float> optimizer;
  auto best_params = network.params();
  std::vector<std::size_t> order(n);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(derive_seed(config.seed, epoch));
    shuffle(std::span(order), rng);

    optimizer.learning_rate = state.lr;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::vector<int> labels;
    for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
      if (hooks.should_stop && hooks.should_stop()) {
        state.interrupted = true;
        break;
      }
      const std::size_t end = std::min(n, begin + config.batch_size);
      const auto rows = std::span(order).subspan(begin, end - begin);
      labels.clear();
      for (std::size_t r : rows) labels.push_back(train_set.labels[r]);

      auto fwd = network.forward(gather_rows(train_set.batch, rows), nn::Mode::train);
      const double loss = nn::sparse_categorical_crossentropy(fwd.probabilities, labels);
      if (!std::isfinite(loss) || !fwd.probabilities.all_finite()) {
        throw TrainingDiverged("non-finite training loss at epoch " + std::to_string(epoch));
      }
      const auto predicted = argmax_rows(fwd.probabilities);
      for (std::size_t i = 0; i < labels.size(); ++i) correct += predicted[i] == labels[i];
      loss_sum += loss * static_cast<double>(labels.size());

      const auto grads = network.backward(fwd.cache, labels);
      network.apply_gradients(optimizer, grads);
    }
    if (state.interrupted) break;

    const auto val = evaluate(network, val_set);
    if (!std::isfinite(val.loss)) {
      throw TrainingDiverged("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    EpochRecord record{epoch,
                       loss_sum / static_cast<double>(n),
                       static_cast<double>(correct) / static_cast<double>(n),
                       val.loss,
                       val.accuracy,
                       state.lr};
    state.history.push_back(record);

    const auto decision = apply_callbacks(&network, state, config, epoch, val.loss, val.accuracy);
    if (decision.improved) best_params = network.params();
    if (hooks.on_epoch) hooks.on_epoch(record);
    if (decision.stop) break;
  }

  network.mutable_params() = std::move(best_params);
  return {std::move(network), std::move(state)};
}

}  // namespace csocnn::train
