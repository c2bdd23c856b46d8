#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "csocnn/nn/tensor.hpp"

namespace csocnn::nn {

// Moments are allocated lazily on the first step so a default-constructed
// state can be handed to any network.
template <typename T>
struct AdamState {
  std::uint64_t step = 0;
  std::vector<BasicTensor<T>> first_moment;
  std::vector<BasicTensor<T>> second_moment;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  double learning_rate = 1e-3;
};

// One bias-corrected Adam update, in place. `params` and `grads` are aligned
// by index; a shape disagreement throws ShapeError before anything is
// modified.
template <typename T>
void adam_step(AdamState<T>& state, std::span<BasicTensor<T>* const> params,
               std::span<const BasicTensor<T>> grads);

extern template void adam_step<float>(AdamState<float>&, std::span<BasicTensor<float>* const>,
                                      std::span<const BasicTensor<float>>);
extern template void adam_step<double>(AdamState<double>&, std::span<BasicTensor<double>* const>,
                                       std::span<const BasicTensor<double>>);

}  // namespace csocnn::nn
