#include "csocnn/nn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "csocnn/error.hpp"

namespace csocnn::nn {

template <typename T>
double sparse_categorical_crossentropy(const BasicTensor<T>& probs,
                                       std::span<const int> labels) {
  if (probs.rank() != 2) throw ShapeError("loss expects an (n, K) probability matrix");
  const std::size_t n = probs.dim(0), k = probs.dim(1);
  if (labels.size() != n) {
    throw ShapeError("got " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(n) + " rows");
  }
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= k) {
      throw LabelError("label " + std::to_string(label) + " outside [0, " +
                       std::to_string(k) + ")");
    }
    const double p = std::clamp(static_cast<double>(probs[i * k + static_cast<std::size_t>(label)]),
                                kProbabilityFloor, 1.0);
    sum += std::log(p);
  }
  return -sum / static_cast<double>(n);
}

template <typename T>
void softmax_rows(BasicTensor<T>& logits) {
  if (logits.rank() != 2) throw ShapeError("softmax expects an (n, K) matrix");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  for (std::size_t i = 0; i < n; ++i) {
    T* row = logits.data().data() + i * k;
    const T peak = *std::max_element(row, row + k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      row[j] = static_cast<T>(std::exp(static_cast<double>(row[j] - peak)));
      total += row[j];
    }
    for (std::size_t j = 0; j < k; ++j) row[j] = static_cast<T>(row[j] / total);
  }
}

template double sparse_categorical_crossentropy<float>(const Tensor&, std::span<const int>);
template double sparse_categorical_crossentropy<double>(const Tensor64&, std::span<const int>);
template void softmax_rows<float>(Tensor&);
template void softmax_rows<double>(Tensor64&);

}  // namespace csocnn::nn
