#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "csocnn/nn/adam.hpp"
#include "csocnn/nn/layer.hpp"
#include "csocnn/nn/tensor.hpp"

namespace csocnn::nn {

enum class Mode { train, inference };

struct BatchNormConfig {
  double epsilon = 1e-3;
  double momentum = 0.99;
  // Zero-debiased running statistics. Without it the running mean and
  // variance start at 0 and 1 and need several hundred updates to forget them.
  bool debias = true;
};

// Parameters of one layer. Conv2D weights are (kh, kw, in_channels, filters),
// Dense weights are (in, out). For BatchNorm `weight`/`bias` hold the scale and
// shift and the running statistics are the non-trainable part.
template <typename T>
struct LayerParams {
  BasicTensor<T> weight;
  BasicTensor<T> bias;
  BasicTensor<T> running_mean;
  BasicTensor<T> running_var;

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

template <typename T>
class BasicNetwork;

// Intermediates of a train- or inference-mode forward pass. Only the network
// that produced it can consume it, and only until its parameters change.
template <typename T>
class ForwardCache {
 public:
  Mode mode() const noexcept { return mode_; }
  std::size_t batch_size() const noexcept { return batch_size_; }

  // ReLU on/off pattern and max-pool winners, flattened. Two passes with equal
  // signatures take the same branch at every kink.
  std::vector<std::uint8_t> branch_signature() const;

 private:
  friend class BasicNetwork<T>;

  Mode mode_ = Mode::inference;
  std::uint64_t network_id_ = 0;
  std::uint64_t version_ = 0;
  std::size_t batch_size_ = 0;
  std::vector<BasicTensor<T>> activations_;  // [0] is the input batch
  std::vector<BasicTensor<T>> bn_normalized_;
  std::vector<std::vector<T>> bn_inv_std_;
  std::vector<std::vector<std::uint32_t>> pool_argmax_;
  std::vector<Activation> layer_activation_;
};

template <typename T>
struct ForwardResult {
  BasicTensor<T> probabilities;
  ForwardCache<T> cache;
};

// Gradient tensors aligned with BasicNetwork::trainable_parameters().
template <typename T>
using Gradients = std::vector<BasicTensor<T>>;

template <typename T>
class BasicNetwork {
 public:
  // Glorot-uniform weights, zero biases, unit BatchNorm scale, zero shift,
  // running variance 1. Throws ShapeError if the sequence does not infer.
  BasicNetwork(std::vector<LayerSpec> layers, Shape input_shape, std::uint64_t seed,
               BatchNormConfig batch_norm = {});

  // Adopts existing parameters (e.g. from a model file); shapes are checked.
  BasicNetwork(std::vector<LayerSpec> layers, Shape input_shape,
               std::vector<LayerParams<T>> params, BatchNormConfig batch_norm = {});

  BasicNetwork(const BasicNetwork& other);
  BasicNetwork& operator=(const BasicNetwork& other);
  BasicNetwork(BasicNetwork&&) noexcept = default;
  BasicNetwork& operator=(BasicNetwork&&) noexcept = default;

  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }
  const Shape& input_shape() const noexcept { return input_shape_; }
  const std::vector<Shape>& output_shapes() const noexcept { return shapes_; }
  std::size_t num_classes() const { return shapes_.back().back(); }
  const BatchNormConfig& batch_norm_config() const noexcept { return bn_; }
  // Train-mode forward passes folded into the running statistics.
  std::uint64_t batch_norm_updates() const noexcept { return bn_updates_; }
  void set_batch_norm_updates(std::uint64_t updates) noexcept { bn_updates_ = updates; }

  // Counted from the allocated tensors, not from the layer specs.
  ParamCounts count_params() const;

  const std::vector<LayerParams<T>>& params() const noexcept { return params_; }
  // Mutable access invalidates outstanding forward caches.
  std::vector<LayerParams<T>>& mutable_params();

  std::vector<BasicTensor<T>*> trainable_parameters();
  std::vector<const BasicTensor<T>*> trainable_parameters() const;

  // `batch` is (n, ...input_shape). Train mode normalizes with batch
  // statistics and folds them into the running statistics.
  ForwardResult<T> forward(const BasicTensor<T>& batch, Mode mode);

  // Inference-mode forward without a cache; pure.
  BasicTensor<T> predict(const BasicTensor<T>& batch) const;

  // Gradient of mean sparse categorical cross-entropy. Requires a train-mode
  // cache from this network at its current parameter version (StateError
  // otherwise) and a softmax output layer.
  Gradients<T> backward(const ForwardCache<T>& cache, std::span<const int> labels) const;

  void apply_gradients(AdamState<T>& optimizer, const Gradients<T>& grads);

  template <typename U>
  BasicNetwork<U> cast() const {
    std::vector<LayerParams<U>> converted;
    converted.reserve(params_.size());
    for (const auto& p : params_) {
      converted.push_back({p.weight.template cast<U>(), p.bias.template cast<U>(),
                           p.running_mean.template cast<U>(),
                           p.running_var.template cast<U>()});
    }
    return BasicNetwork<U>(layers_, input_shape_, std::move(converted), bn_);
  }

  friend bool operator==(const BasicNetwork& a, const BasicNetwork& b) {
    return a.layers_ == b.layers_ && a.input_shape_ == b.input_shape_ &&
           a.params_ == b.params_;
  }

 private:
  void validate();
  BasicTensor<T> run(const BasicTensor<T>& batch, Mode mode, ForwardCache<T>* cache,
                     std::vector<LayerParams<T>>* stats_sink, double momentum) const;

  std::vector<LayerSpec> layers_;
  Shape input_shape_;
  std::vector<Shape> shapes_;
  std::vector<LayerParams<T>> params_;
  BatchNormConfig bn_;
  std::uint64_t id_ = 0;
  std::uint64_t version_ = 0;
  std::uint64_t bn_updates_ = 0;
};

using Network = BasicNetwork<float>;
using Network64 = BasicNetwork<double>;

extern template class ForwardCache<float>;
extern template class ForwardCache<double>;
extern template class BasicNetwork<float>;
extern template class BasicNetwork<double>;

}  // namespace csocnn::nn
