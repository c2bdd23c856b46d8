#pragma once

#include <span>

#include "csocnn/nn/tensor.hpp"

namespace csocnn::nn {

inline constexpr double kProbabilityFloor = 1e-12;

// Mean sparse categorical cross-entropy of an (n, K) probability matrix.
// Probabilities are clamped to [1e-12, 1] before the log. Throws LabelError
// for labels outside [0, K) and ShapeError when n disagrees.
template <typename T>
double sparse_categorical_crossentropy(const BasicTensor<T>& probs,
                                       std::span<const int> labels);

// Row-wise softmax of an (n, K) matrix, in place.
template <typename T>
void softmax_rows(BasicTensor<T>& logits);

extern template double sparse_categorical_crossentropy<float>(const Tensor&, std::span<const int>);
extern template double sparse_categorical_crossentropy<double>(const Tensor64&, std::span<const int>);
extern template void softmax_rows<float>(Tensor&);
extern template void softmax_rows<double>(Tensor64&);

}  // namespace csocnn::nn
