#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "csocnn/nn/tensor.hpp"

namespace csocnn::nn {

enum class LayerKind { input, conv2d, batch_norm, max_pool2d, flatten, dense };
enum class Padding { valid, same };
enum class Activation { none, relu, softmax };

std::string_view to_string(LayerKind kind);
std::string_view to_string(Padding padding);
std::string_view to_string(Activation activation);
LayerKind layer_kind_from_string(std::string_view name);
Padding padding_from_string(std::string_view name);
Activation activation_from_string(std::string_view name);

// One row of a sequential architecture. `units` is the filter count for
// Conv2D and the width for Dense; other kinds ignore it. The kernel is used
// by Conv2D and MaxPool2D only. Pooling stride always equals the kernel.
struct LayerSpec {
  LayerKind kind = LayerKind::input;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t units = 1;
  Padding padding = Padding::valid;
  Activation activation = Activation::none;

  static LayerSpec input();
  static LayerSpec conv2d(std::size_t filters, std::size_t kernel_h,
                          std::size_t kernel_w,
                          Activation activation = Activation::none);
  static LayerSpec batch_norm(Activation activation = Activation::none);
  static LayerSpec max_pool2d(std::size_t kernel_h, std::size_t kernel_w,
                              Padding padding = Padding::same);
  static LayerSpec flatten();
  static LayerSpec dense(std::size_t units,
                         Activation activation = Activation::none);

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Per-sample output shape of every layer (batch axis excluded). Image-like
// shapes are (height, width, channels). Throws ShapeError on an invalid
// sequence or when any dimension would become non-positive.
std::vector<Shape> infer_shapes(std::span<const LayerSpec> layers,
                                const Shape& input_shape);

struct ParamCounts {
  std::size_t total = 0;
  std::size_t trainable = 0;
  std::size_t non_trainable = 0;

  friend bool operator==(const ParamCounts&, const ParamCounts&) = default;
};

// Parameter count of a single layer given its input shape.
ParamCounts layer_param_count(const LayerSpec& layer, const Shape& input_shape);

ParamCounts count_params(std::span<const LayerSpec> layers,
                         const Shape& input_shape);

// The compact 2D-CNN used throughout the toolkit: three Conv2D/BatchNorm/
// MaxPool blocks over a (75, 1, 1) flow-feature column, then Dense 64-32-K.
std::vector<LayerSpec> baseline_architecture(std::size_t num_classes = 5);
Shape baseline_input_shape(std::size_t num_features = 75);

}  // namespace csocnn::nn
