#include "csocnn/nn/layer.hpp"

#include <string>

#include "csocnn/error.hpp"

namespace csocnn::nn {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::input: return "Input";
    case LayerKind::conv2d: return "Conv2D";
    case LayerKind::batch_norm: return "BatchNormalization";
    case LayerKind::max_pool2d: return "MaxPooling2D";
    case LayerKind::flatten: return "Flatten";
    case LayerKind::dense: return "Dense";
  }
  return "?";
}

std::string_view to_string(Padding padding) {
  return padding == Padding::valid ? "valid" : "same";
}

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::none: return "none";
    case Activation::relu: return "relu";
    case Activation::softmax: return "softmax";
  }
  return "?";
}

LayerKind layer_kind_from_string(std::string_view name) {
  for (auto kind : {LayerKind::input, LayerKind::conv2d, LayerKind::batch_norm,
                    LayerKind::max_pool2d, LayerKind::flatten, LayerKind::dense}) {
    if (to_string(kind) == name) return kind;
  }
  throw ShapeError("unknown layer kind '" + std::string(name) + "'");
}

Padding padding_from_string(std::string_view name) {
  if (name == "valid") return Padding::valid;
  if (name == "same") return Padding::same;
  throw ShapeError("unknown padding '" + std::string(name) + "'");
}

Activation activation_from_string(std::string_view name) {
  for (auto a : {Activation::none, Activation::relu, Activation::softmax}) {
    if (to_string(a) == name) return a;
  }
  throw ShapeError("unknown activation '" + std::string(name) + "'");
}

LayerSpec LayerSpec::input() { return LayerSpec{}; }

LayerSpec LayerSpec::conv2d(std::size_t filters, std::size_t kernel_h,
                            std::size_t kernel_w, Activation activation) {
  return {LayerKind::conv2d, kernel_h, kernel_w, filters, Padding::valid, activation};
}

LayerSpec LayerSpec::batch_norm(Activation activation) {
  return {LayerKind::batch_norm, 1, 1, 1, Padding::valid, activation};
}

LayerSpec LayerSpec::max_pool2d(std::size_t kernel_h, std::size_t kernel_w,
                                Padding padding) {
  return {LayerKind::max_pool2d, kernel_h, kernel_w, 1, padding, Activation::none};
}

LayerSpec LayerSpec::flatten() {
  return {LayerKind::flatten, 1, 1, 1, Padding::valid, Activation::none};
}

LayerSpec LayerSpec::dense(std::size_t units, Activation activation) {
  return {LayerKind::dense, 1, 1, units, Padding::valid, activation};
}

namespace {

std::string where(std::size_t index, const LayerSpec& layer) {
  return "layer " + std::to_string(index) + " (" + std::string(to_string(layer.kind)) + ")";
}

std::size_t pooled(std::size_t in, std::size_t kernel, Padding padding) {
  return padding == Padding::same ? (in + kernel - 1) / kernel : in / kernel;
}

}  // namespace

std::vector<Shape> infer_shapes(std::span<const LayerSpec> layers,
                                const Shape& input_shape) {
  if (layers.empty() || layers.front().kind != LayerKind::input) {
    throw ShapeError("layer sequence must begin with Input");
  }
  if (input_shape.size() != 3 && input_shape.size() != 1) {
    throw ShapeError("input shape must have rank 3 (height, width, channels) or 1, got " +
                     shape_to_string(input_shape));
  }
  for (std::size_t d : input_shape) {
    if (d == 0) throw ShapeError("input shape has a zero dimension");
  }

  std::vector<Shape> shapes;
  shapes.reserve(layers.size());
  Shape current = input_shape;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& layer = layers[i];
    if (layer.kernel_h == 0 || layer.kernel_w == 0 || layer.units == 0) {
      throw ShapeError(where(i, layer) + ": kernel and units must be >= 1");
    }
    switch (layer.kind) {
      case LayerKind::input:
        if (i != 0) throw ShapeError(where(i, layer) + ": Input only allowed first");
        break;
      case LayerKind::conv2d: {
        if (current.size() != 3) throw ShapeError(where(i, layer) + ": needs rank-3 input");
        if (layer.padding != Padding::valid) {
          throw ShapeError(where(i, layer) + ": only valid padding is supported");
        }
        if (current[0] < layer.kernel_h || current[1] < layer.kernel_w) {
          throw ShapeError(where(i, layer) + ": kernel larger than input " +
                           shape_to_string(current));
        }
        current = {current[0] - layer.kernel_h + 1, current[1] - layer.kernel_w + 1,
                   layer.units};
        break;
      }
      case LayerKind::batch_norm:
        break;
      case LayerKind::max_pool2d: {
        if (current.size() != 3) throw ShapeError(where(i, layer) + ": needs rank-3 input");
        Shape next = {pooled(current[0], layer.kernel_h, layer.padding),
                      pooled(current[1], layer.kernel_w, layer.padding), current[2]};
        if (next[0] == 0 || next[1] == 0) {
          throw ShapeError(where(i, layer) + ": output dimension became zero");
        }
        current = std::move(next);
        break;
      }
      case LayerKind::flatten:
        current = {shape_size(current)};
        break;
      case LayerKind::dense:
        if (current.size() != 1) {
          throw ShapeError(where(i, layer) + ": needs rank-1 input, got " +
                           shape_to_string(current));
        }
        current = {layer.units};
        break;
    }
    shapes.push_back(current);
  }
  return shapes;
}

ParamCounts layer_param_count(const LayerSpec& layer, const Shape& input_shape) {
  switch (layer.kind) {
    case LayerKind::conv2d: {
      const std::size_t n =
          layer.units * (layer.kernel_h * layer.kernel_w * input_shape.back() + 1);
      return {n, n, 0};
    }
    case LayerKind::batch_norm: {
      const std::size_t channels = input_shape.back();
      return {4 * channels, 2 * channels, 2 * channels};
    }
    case LayerKind::dense: {
      const std::size_t n = input_shape.back() * layer.units + layer.units;
      return {n, n, 0};
    }
    default:
      return {};
  }
}

ParamCounts count_params(std::span<const LayerSpec> layers, const Shape& input_shape) {
  const auto shapes = infer_shapes(layers, input_shape);
  ParamCounts sum;
  for (std::size_t i = 1; i < layers.size(); ++i) {
    const auto c = layer_param_count(layers[i], shapes[i - 1]);
    sum.total += c.total;
    sum.trainable += c.trainable;
    sum.non_trainable += c.non_trainable;
  }
  return sum;
}

std::vector<LayerSpec> baseline_architecture(std::size_t num_classes) {
  return {
      LayerSpec::input(),
      LayerSpec::conv2d(64, 6, 1),
      LayerSpec::batch_norm(Activation::relu),
      LayerSpec::max_pool2d(2, 1),
      LayerSpec::conv2d(64, 3, 1),
      LayerSpec::batch_norm(Activation::relu),
      LayerSpec::max_pool2d(2, 1),
      LayerSpec::conv2d(64, 3, 1),
      LayerSpec::batch_norm(Activation::relu),
      LayerSpec::max_pool2d(2, 1),
      LayerSpec::flatten(),
      LayerSpec::dense(64, Activation::relu),
      LayerSpec::dense(32, Activation::relu),
      LayerSpec::dense(num_classes, Activation::softmax),
  };
}

Shape baseline_input_shape(std::size_t num_features) { return {num_features, 1, 1}; }

}  // namespace csocnn::nn
