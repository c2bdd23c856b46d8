#pragma once

#include <functional>
#include <vector>

#include "csocnn/data/dataset.hpp"
#include "csocnn/nn/network.hpp"
#include "csocnn/train/callbacks.hpp"

namespace csocnn::train {

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
  // Polled between batches; returning true ends training after restoring
  // the best model seen so far.
  std::function<bool()> should_stop;
};

struct TrainResult {
  nn::Network network;  // restored from the best checkpoint
  TrainingState state;
};

// Mini-batch Adam over a seeded per-epoch shuffle; the last partial batch is
// kept. Throws TrainingDiverged on a non-finite loss.
TrainResult train(nn::Network network, const data::NetworkInput& train_set,
                  const data::NetworkInput& val_set, const TrainConfig& config,
                  const TrainHooks& hooks = {});

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<int> predictions;
  nn::Tensor probabilities;  // (n, K), exactly as produced by the network
};

EvalResult evaluate(const nn::Network& network, const data::NetworkInput& dataset,
                    std::size_t batch_size = 1024);

// Row-wise argmax; ties go to the lowest class index.
std::vector<int> argmax_rows(const nn::Tensor& probabilities);

}  // namespace csocnn::train
