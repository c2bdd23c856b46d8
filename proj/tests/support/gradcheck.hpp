#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "csocnn/nn/layer.hpp"
#include "csocnn/nn/loss.hpp"
#include "csocnn/nn/network.hpp"
#include "csocnn/random.hpp"

namespace csocnn::test {

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // perturbation crossed a ReLU or max-pool kink
};

// Central differences of the train-mode loss against backward(). The
// relative error denominator is max(|analytic|, |numeric|, floor).
inline GradCheck gradient_check(nn::Network64& net, const nn::Tensor64& batch,
                                std::span<const int> labels, double h = 1e-3,
                                double floor = 1e-6) {
  auto base = net.forward(batch, nn::Mode::train);
  const auto grads = net.backward(base.cache, labels);
  const auto signature = base.cache.branch_signature();

  GradCheck out;
  auto params = net.trainable_parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p]->size(); ++i) {
      double& w = (*params[p])[i];
      const double orig = w;
      w = orig + h;
      auto plus = net.forward(batch, nn::Mode::train);
      w = orig - h;
      auto minus = net.forward(batch, nn::Mode::train);
      w = orig;
      if (plus.cache.branch_signature() != signature ||
          minus.cache.branch_signature() != signature) {
        ++out.skipped;
        continue;
      }
      const double numeric = (nn::sparse_categorical_crossentropy(plus.probabilities, labels) -
                              nn::sparse_categorical_crossentropy(minus.probabilities, labels)) /
                             (2.0 * h);
      const double analytic = grads[p][i];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      out.max_rel_error = std::max(out.max_rel_error, std::abs(analytic - numeric) / denom);
      ++out.checked;
    }
  }
  return out;
}

inline nn::Tensor64 normal_batch(const nn::Shape& shape, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  nn::Tensor64 t(shape);
  for (auto& v : t.storage()) v = scale * standard_normal(rng);
  return t;
}

inline std::vector<int> random_labels(std::size_t n, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> labels(n);
  for (auto& l : labels) l = static_cast<int>(uniform_index(rng, k));
  return labels;
}

// Toy networks covering every layer kind, each under 500 parameters.
struct ToyNet {
  std::vector<nn::LayerSpec> layers;
  nn::Shape input;
  std::size_t classes;
};

inline std::vector<ToyNet> toy_networks() {
  using nn::Activation;
  using nn::LayerSpec;
  return {
      {{LayerSpec::input(), LayerSpec::conv2d(3, 2, 2), LayerSpec::batch_norm(Activation::relu),
        LayerSpec::max_pool2d(2, 1), LayerSpec::flatten(), LayerSpec::dense(4, Activation::relu),
        LayerSpec::dense(3, Activation::softmax)},
       {6, 2, 2},
       3},
      {{LayerSpec::input(), LayerSpec::conv2d(4, 3, 1), LayerSpec::batch_norm(Activation::relu),
        LayerSpec::max_pool2d(2, 1), LayerSpec::conv2d(3, 2, 1),
        LayerSpec::batch_norm(Activation::relu), LayerSpec::max_pool2d(2, 1),
        LayerSpec::flatten(), LayerSpec::dense(5, Activation::relu),
        LayerSpec::dense(3, Activation::softmax)},
       {13, 1, 1},
       3},
      {{LayerSpec::input(), LayerSpec::conv2d(2, 2, 1, Activation::relu),
        LayerSpec::max_pool2d(3, 1), LayerSpec::batch_norm(), LayerSpec::flatten(),
        LayerSpec::dense(4, Activation::softmax)},
       {8, 3, 1},
       4},
  };
}

}  // namespace csocnn::test
