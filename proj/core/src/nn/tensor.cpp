#include "csocnn/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "csocnn/error.hpp"

namespace csocnn::nn {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(shape[i]);
  }
  if (shape.size() == 1) out += ",";
  return out + ")";
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_to_string(shape_));
  }
}

template <typename T>
BasicTensor<T> BasicTensor<T>::checked(Shape shape, std::vector<T> data) {
  BasicTensor t(std::move(shape), std::move(data));
  if (!t.all_finite()) throw NumericError("tensor contains non-finite values");
  return t;
}

template <typename T>
std::size_t BasicTensor<T>::offset(std::initializer_list<std::size_t> index) const {
  if (index.size() != shape_.size()) {
    throw ShapeError("index rank " + std::to_string(index.size()) +
                     " does not match tensor rank " + std::to_string(shape_.size()));
  }
  std::size_t off = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= shape_[axis]) throw ShapeError("tensor index out of range");
    off = off * shape_[axis] + i;
    ++axis;
  }
  return off;
}

template <typename T>
T& BasicTensor<T>::at(std::initializer_list<std::size_t> index) {
  return data_[offset(index)];
}

template <typename T>
const T& BasicTensor<T>::at(std::initializer_list<std::size_t> index) const {
  return data_[offset(index)];
}

template <typename T>
void BasicTensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
bool BasicTensor<T>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](T v) { return std::isfinite(v); });
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape shape) const {
  return BasicTensor(std::move(shape), data_);
}

template class BasicTensor<float>;
template class BasicTensor<double>;

}  // namespace csocnn::nn
