#include "csocnn/nn/network.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>

#include "csocnn/error.hpp"
#include "csocnn/nn/loss.hpp"
#include "csocnn/random.hpp"

namespace csocnn::nn {

namespace {

std::atomic<std::uint64_t> g_next_network_id{1};

std::uint64_t next_network_id() { return g_next_network_id.fetch_add(1); }

template <typename T>
void glorot_uniform(BasicTensor<T>& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : w.data()) v = static_cast<T>(uniform(rng, -limit, limit));
}

Shape with_batch(std::size_t n, const Shape& sample) {
  Shape s;
  s.reserve(sample.size() + 1);
  s.push_back(n);
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

// Leading padding for stride == kernel pooling.
std::size_t pool_pad(std::size_t in, std::size_t out, std::size_t kernel) {
  const std::size_t covered = out * kernel;
  return covered > in ? (covered - in) / 2 : 0;
}

bool has_params(LayerKind kind) {
  return kind == LayerKind::conv2d || kind == LayerKind::dense ||
         kind == LayerKind::batch_norm;
}

}  // namespace

template <typename T>
std::vector<std::uint8_t> ForwardCache<T>::branch_signature() const {
  std::vector<std::uint8_t> sig;
  for (std::size_t i = 1; i < activations_.size(); ++i) {
    if (layer_activation_[i] == Activation::relu) {
      for (T v : activations_[i].data()) sig.push_back(v > T{0} ? 1 : 0);
    }
    for (std::uint32_t idx : pool_argmax_[i]) {
      for (int b = 0; b < 4; ++b) sig.push_back(static_cast<std::uint8_t>(idx >> (8 * b)));
    }
  }
  return sig;
}

template <typename T>
BasicNetwork<T>::BasicNetwork(std::vector<LayerSpec> layers, Shape input_shape,
                              std::uint64_t seed, BatchNormConfig batch_norm)
    : layers_(std::move(layers)),
      input_shape_(std::move(input_shape)),
      shapes_(infer_shapes(layers_, input_shape_)),
      params_(layers_.size()),
      bn_(batch_norm),
      id_(next_network_id()) {
  Rng rng(seed);
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    const LayerSpec& layer = layers_[i];
    const Shape& in = shapes_[i - 1];
    auto& p = params_[i];
    switch (layer.kind) {
      case LayerKind::conv2d: {
        const std::size_t c = in.back();
        p.weight = BasicTensor<T>({layer.kernel_h, layer.kernel_w, c, layer.units});
        glorot_uniform(p.weight, layer.kernel_h * layer.kernel_w * c,
                       layer.kernel_h * layer.kernel_w * layer.units, rng);
        p.bias = BasicTensor<T>({layer.units});
        break;
      }
      case LayerKind::dense:
        p.weight = BasicTensor<T>({in.back(), layer.units});
        glorot_uniform(p.weight, in.back(), layer.units, rng);
        p.bias = BasicTensor<T>({layer.units});
        break;
      case LayerKind::batch_norm: {
        const std::size_t c = in.back();
        p.weight = BasicTensor<T>({c}, T{1});
        p.bias = BasicTensor<T>({c});
        p.running_mean = BasicTensor<T>({c});
        p.running_var = BasicTensor<T>({c}, T{1});
        break;
      }
      default:
        break;
    }
  }
  validate();
}

template <typename T>
BasicNetwork<T>::BasicNetwork(std::vector<LayerSpec> layers, Shape input_shape,
                              std::vector<LayerParams<T>> params, BatchNormConfig batch_norm)
    : layers_(std::move(layers)),
      input_shape_(std::move(input_shape)),
      shapes_(infer_shapes(layers_, input_shape_)),
      params_(std::move(params)),
      bn_(batch_norm),
      id_(next_network_id()) {
  validate();
}

template <typename T>
BasicNetwork<T>::BasicNetwork(const BasicNetwork& other)
    : layers_(other.layers_),
      input_shape_(other.input_shape_),
      shapes_(other.shapes_),
      params_(other.params_),
      bn_(other.bn_),
      id_(next_network_id()),
      bn_updates_(other.bn_updates_) {}

template <typename T>
BasicNetwork<T>& BasicNetwork<T>::operator=(const BasicNetwork& other) {
  if (this != &other) {
    layers_ = other.layers_;
    input_shape_ = other.input_shape_;
    shapes_ = other.shapes_;
    params_ = other.params_;
    bn_ = other.bn_;
    id_ = next_network_id();
    version_ = 0;
    bn_updates_ = other.bn_updates_;
  }
  return *this;
}

template <typename T>
void BasicNetwork<T>::validate() {
  if (params_.size() != layers_.size()) {
    throw ShapeError("expected parameters for " + std::to_string(layers_.size()) +
                     " layers, got " + std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
    if (layers_[i].activation == Activation::softmax) {
      throw ShapeError("softmax is only supported on the output layer");
    }
  }
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    const LayerSpec& layer = layers_[i];
    const Shape& in = shapes_[i - 1];
    const auto& p = params_[i];
    auto expect = [&](const BasicTensor<T>& t, const Shape& shape, const char* name) {
      if (t.shape() != shape) {
        throw ShapeError("layer " + std::to_string(i) + " " + name + " has shape " +
                         shape_to_string(t.shape()) + ", expected " + shape_to_string(shape));
      }
    };
    switch (layer.kind) {
      case LayerKind::conv2d:
        expect(p.weight, {layer.kernel_h, layer.kernel_w, in.back(), layer.units}, "kernel");
        expect(p.bias, {layer.units}, "bias");
        break;
      case LayerKind::dense:
        expect(p.weight, {in.back(), layer.units}, "kernel");
        expect(p.bias, {layer.units}, "bias");
        break;
      case LayerKind::batch_norm:
        expect(p.weight, {in.back()}, "gamma");
        expect(p.bias, {in.back()}, "beta");
        expect(p.running_mean, {in.back()}, "moving_mean");
        expect(p.running_var, {in.back()}, "moving_variance");
        break;
      default:
        if (!p.weight.empty() || !p.bias.empty()) {
          throw ShapeError("layer " + std::to_string(i) + " takes no parameters");
        }
    }
  }
}

template <typename T>
ParamCounts BasicNetwork<T>::count_params() const {
  ParamCounts c;
  for (const auto& p : params_) {
    c.trainable += p.weight.size() + p.bias.size();
    c.non_trainable += p.running_mean.size() + p.running_var.size();
  }
  c.total = c.trainable + c.non_trainable;
  return c;
}

template <typename T>
std::vector<LayerParams<T>>& BasicNetwork<T>::mutable_params() {
  ++version_;
  return params_;
}

template <typename T>
std::vector<BasicTensor<T>*> BasicNetwork<T>::trainable_parameters() {
  std::vector<BasicTensor<T>*> out;
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    if (!has_params(layers_[i].kind)) continue;
    out.push_back(&params_[i].weight);
    out.push_back(&params_[i].bias);
  }
  return out;
}

template <typename T>
std::vector<const BasicTensor<T>*> BasicNetwork<T>::trainable_parameters() const {
  std::vector<const BasicTensor<T>*> out;
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    if (!has_params(layers_[i].kind)) continue;
    out.push_back(&params_[i].weight);
    out.push_back(&params_[i].bias);
  }
  return out;
}

template <typename T>
ForwardResult<T> BasicNetwork<T>::forward(const BasicTensor<T>& batch, Mode mode) {
  ForwardResult<T> result;
  double momentum = bn_.momentum;
  if (mode == Mode::train) {
    const double t = static_cast<double>(++bn_updates_);
    // Running averages of the debiased estimator: the first update copies
    // the batch statistics and later ones converge to plain momentum.
    if (bn_.debias) {
      momentum = bn_.momentum * (1.0 - std::pow(bn_.momentum, t - 1.0)) /
                 (1.0 - std::pow(bn_.momentum, t));
    }
  }
  result.probabilities =
      run(batch, mode, &result.cache, mode == Mode::train ? &params_ : nullptr, momentum);
  result.cache.network_id_ = id_;
  result.cache.version_ = version_;
  return result;
}

template <typename T>
BasicTensor<T> BasicNetwork<T>::predict(const BasicTensor<T>& batch) const {
  return run(batch, Mode::inference, nullptr, nullptr, 0.0);
}

template <typename T>
BasicTensor<T> BasicNetwork<T>::run(const BasicTensor<T>& batch, Mode mode,
                                    ForwardCache<T>* cache,
                                    std::vector<LayerParams<T>>* stats_sink, double momentum) const {
  if (batch.rank() != input_shape_.size() + 1 ||
      !std::equal(input_shape_.begin(), input_shape_.end(), batch.shape().begin() + 1)) {
    throw ShapeError("batch shape " + shape_to_string(batch.shape()) +
                     " does not match network input " + shape_to_string(input_shape_));
  }
  const std::size_t n = batch.dim(0);
  if (mode == Mode::train && n == 0) throw ShapeError("empty training batch");

  if (cache) {
    cache->mode_ = mode;
    cache->batch_size_ = n;
    cache->activations_.assign(1, batch);
    cache->bn_normalized_.assign(layers_.size(), {});
    cache->bn_inv_std_.assign(layers_.size(), {});
    cache->pool_argmax_.assign(layers_.size(), {});
    cache->layer_activation_.assign(layers_.size(), Activation::none);
  }

  BasicTensor<T> x = batch;
  for (std::size_t li = 1; li < layers_.size(); ++li) {
    const LayerSpec& layer = layers_[li];
    const Shape& in = shapes_[li - 1];
    const Shape& out = shapes_[li];
    const auto& p = params_[li];
    BasicTensor<T> y;

    switch (layer.kind) {
      case LayerKind::input:
        y = x;
        break;

      case LayerKind::conv2d: {
        const std::size_t H = in[0], W = in[1], C = in[2];
        const std::size_t OH = out[0], OW = out[1], F = out[2];
        const std::size_t KH = layer.kernel_h, KW = layer.kernel_w;
        y = BasicTensor<T>(with_batch(n, out));
        const T* X = x.data().data();
        const T* K = p.weight.data().data();
        const T* B = p.bias.data().data();
        T* Y = y.data().data();
        for (std::size_t b = 0; b < n; ++b) {
          for (std::size_t oh = 0; oh < OH; ++oh) {
            for (std::size_t ow = 0; ow < OW; ++ow) {
              T* o = Y + ((b * OH + oh) * OW + ow) * F;
              std::copy(B, B + F, o);
              for (std::size_t i = 0; i < KH; ++i) {
                for (std::size_t j = 0; j < KW; ++j) {
                  const T* xin = X + ((b * H + oh + i) * W + ow + j) * C;
                  const T* k = K + (i * KW + j) * C * F;
                  for (std::size_t c = 0; c < C; ++c) {
                    const T xv = xin[c];
                    const T* kr = k + c * F;
                    for (std::size_t f = 0; f < F; ++f) o[f] += xv * kr[f];
                  }
                }
              }
            }
          }
        }
        break;
      }

      case LayerKind::batch_norm: {
        const std::size_t C = in.back();
        const std::size_t M = n == 0 ? 0 : x.size() / C;
        std::vector<T> mean(C), inv_std(C);
        if (mode == Mode::train) {
          std::vector<double> sum(C, 0.0), sq(C, 0.0);
          const T* X = x.data().data();
          for (std::size_t r = 0; r < M; ++r) {
            for (std::size_t c = 0; c < C; ++c) sum[c] += X[r * C + c];
          }
          for (std::size_t c = 0; c < C; ++c) sum[c] /= static_cast<double>(M);
          for (std::size_t r = 0; r < M; ++r) {
            for (std::size_t c = 0; c < C; ++c) {
              const double d = X[r * C + c] - sum[c];
              sq[c] += d * d;
            }
          }
          for (std::size_t c = 0; c < C; ++c) {
            const double var = sq[c] / static_cast<double>(M);
            mean[c] = static_cast<T>(sum[c]);
            inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + bn_.epsilon));
            if (stats_sink) {
              auto& s = (*stats_sink)[li];
              s.running_mean[c] = static_cast<T>(momentum * s.running_mean[c] +
                                                 (1.0 - momentum) * sum[c]);
              s.running_var[c] = static_cast<T>(momentum * s.running_var[c] +
                                                (1.0 - momentum) * var);
            }
          }
        } else {
          for (std::size_t c = 0; c < C; ++c) {
            mean[c] = p.running_mean[c];
            inv_std[c] = static_cast<T>(
                1.0 / std::sqrt(static_cast<double>(p.running_var[c]) + bn_.epsilon));
          }
        }
        BasicTensor<T> xhat(x.shape());
        y = BasicTensor<T>(x.shape());
        for (std::size_t r = 0; r < M; ++r) {
          for (std::size_t c = 0; c < C; ++c) {
            const std::size_t k = r * C + c;
            xhat[k] = (x[k] - mean[c]) * inv_std[c];
            y[k] = p.weight[c] * xhat[k] + p.bias[c];
          }
        }
        if (cache) {
          cache->bn_normalized_[li] = std::move(xhat);
          cache->bn_inv_std_[li] = std::move(inv_std);
        }
        break;
      }

      case LayerKind::max_pool2d: {
        const std::size_t H = in[0], W = in[1], C = in[2];
        const std::size_t OH = out[0], OW = out[1];
        const std::size_t KH = layer.kernel_h, KW = layer.kernel_w;
        const std::size_t pad_h = pool_pad(H, OH, KH);
        const std::size_t pad_w = pool_pad(W, OW, KW);
        y = BasicTensor<T>(with_batch(n, out));
        std::vector<std::uint32_t> argmax(y.size());
        for (std::size_t b = 0; b < n; ++b) {
          for (std::size_t oh = 0; oh < OH; ++oh) {
            for (std::size_t ow = 0; ow < OW; ++ow) {
              for (std::size_t c = 0; c < C; ++c) {
                T best = -std::numeric_limits<T>::infinity();
                std::size_t best_idx = 0;
                bool found = false;
                for (std::size_t i = 0; i < KH; ++i) {
                  const std::size_t r = oh * KH + i;
                  if (r < pad_h || r - pad_h >= H) continue;
                  for (std::size_t j = 0; j < KW; ++j) {
                    const std::size_t col = ow * KW + j;
                    if (col < pad_w || col - pad_w >= W) continue;
                    const std::size_t idx = ((b * H + r - pad_h) * W + col - pad_w) * C + c;
                    if (!found || x[idx] > best) {
                      best = x[idx];
                      best_idx = idx;
                      found = true;
                    }
                  }
                }
                const std::size_t o = ((b * OH + oh) * OW + ow) * C + c;
                y[o] = best;
                argmax[o] = static_cast<std::uint32_t>(best_idx);
              }
            }
          }
        }
        if (cache) cache->pool_argmax_[li] = std::move(argmax);
        break;
      }

      case LayerKind::flatten:
        y = x.reshaped(with_batch(n, out));
        break;

      case LayerKind::dense: {
        const std::size_t I = in[0], O = out[0];
        y = BasicTensor<T>(with_batch(n, out));
        const T* X = x.data().data();
        const T* K = p.weight.data().data();
        T* Y = y.data().data();
        for (std::size_t b = 0; b < n; ++b) {
          T* o = Y + b * O;
          std::copy(p.bias.data().begin(), p.bias.data().end(), o);
          for (std::size_t k = 0; k < I; ++k) {
            const T xv = X[b * I + k];
            const T* kr = K + k * O;
            for (std::size_t j = 0; j < O; ++j) o[j] += xv * kr[j];
          }
        }
        break;
      }
    }

    switch (layer.activation) {
      case Activation::none:
        break;
      case Activation::relu:
        for (auto& v : y.data()) v = v > T{0} ? v : T{0};
        break;
      case Activation::softmax:
        softmax_rows(y);
        break;
    }

    if (cache) {
      cache->layer_activation_[li] = layer.activation;
      cache->activations_.push_back(y);
    }
    x = std::move(y);
  }
  return x;
}

template <typename T>
Gradients<T> BasicNetwork<T>::backward(const ForwardCache<T>& cache,
                                       std::span<const int> labels) const {
  if (cache.mode_ != Mode::train) {
    throw StateError("backward requires a train-mode forward cache");
  }
  if (cache.network_id_ != id_ || cache.version_ != version_) {
    throw StateError("forward cache is stale: parameters changed since the forward pass");
  }
  if (layers_.back().activation != Activation::softmax) {
    throw StateError("backward requires a softmax output layer");
  }
  const std::size_t n = cache.batch_size_;
  if (labels.size() != n) {
    throw ShapeError("got " + std::to_string(labels.size()) + " labels for a batch of " +
                     std::to_string(n));
  }
  const std::size_t K = num_classes();
  for (int label : labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= K) {
      throw LabelError("label " + std::to_string(label) + " outside [0, " +
                       std::to_string(K) + ")");
    }
  }

  std::vector<BasicTensor<T>> grad_w(layers_.size()), grad_b(layers_.size());

  // Softmax + cross-entropy: dL/dz = (p - onehot) / n.
  BasicTensor<T> dy = cache.activations_.back();
  const T inv_n = T{1} / static_cast<T>(n);
  for (std::size_t b = 0; b < n; ++b) {
    dy[b * K + static_cast<std::size_t>(labels[b])] -= T{1};
  }
  for (auto& v : dy.data()) v *= inv_n;

  for (std::size_t li = layers_.size() - 1; li >= 1; --li) {
    const LayerSpec& layer = layers_[li];
    const Shape& in = shapes_[li - 1];
    const Shape& out = shapes_[li];
    const auto& p = params_[li];
    const BasicTensor<T>& x = cache.activations_[li - 1];
    const bool need_dx = li > 1;

    if (layer.activation == Activation::relu) {
      const auto& a = cache.activations_[li];
      for (std::size_t k = 0; k < dy.size(); ++k) {
        if (!(a[k] > T{0})) dy[k] = T{0};
      }
    }

    BasicTensor<T> dx;
    switch (layer.kind) {
      case LayerKind::input:
        break;

      case LayerKind::conv2d: {
        const std::size_t H = in[0], W = in[1], C = in[2];
        const std::size_t OH = out[0], OW = out[1], F = out[2];
        const std::size_t KH = layer.kernel_h, KW = layer.kernel_w;
        BasicTensor<T> dk(p.weight.shape());
        BasicTensor<T> db(p.bias.shape());
        if (need_dx) dx = BasicTensor<T>(x.shape());
        const T* X = x.data().data();
        const T* K = p.weight.data().data();
        const T* G = dy.data().data();
        T* DK = dk.data().data();
        T* DB = db.data().data();
        T* DX = need_dx ? dx.data().data() : nullptr;
        for (std::size_t b = 0; b < n; ++b) {
          for (std::size_t oh = 0; oh < OH; ++oh) {
            for (std::size_t ow = 0; ow < OW; ++ow) {
              const T* g = G + ((b * OH + oh) * OW + ow) * F;
              for (std::size_t f = 0; f < F; ++f) DB[f] += g[f];
              for (std::size_t i = 0; i < KH; ++i) {
                for (std::size_t j = 0; j < KW; ++j) {
                  const std::size_t base = ((b * H + oh + i) * W + ow + j) * C;
                  const T* xin = X + base;
                  const std::size_t koff = (i * KW + j) * C * F;
                  for (std::size_t c = 0; c < C; ++c) {
                    const T xv = xin[c];
                    T* dkr = DK + koff + c * F;
                    const T* kr = K + koff + c * F;
                    T acc{0};
                    for (std::size_t f = 0; f < F; ++f) {
                      dkr[f] += xv * g[f];
                      acc += kr[f] * g[f];
                    }
                    if (DX) DX[base + c] += acc;
                  }
                }
              }
            }
          }
        }
        grad_w[li] = std::move(dk);
        grad_b[li] = std::move(db);
        break;
      }

      case LayerKind::batch_norm: {
        const std::size_t C = in.back();
        const std::size_t M = dy.size() / C;
        const auto& xhat = cache.bn_normalized_[li];
        const auto& inv_std = cache.bn_inv_std_[li];
        std::vector<double> sum_dy(C, 0.0), sum_dy_xhat(C, 0.0);
        for (std::size_t r = 0; r < M; ++r) {
          for (std::size_t c = 0; c < C; ++c) {
            const std::size_t k = r * C + c;
            sum_dy[c] += dy[k];
            sum_dy_xhat[c] += static_cast<double>(dy[k]) * xhat[k];
          }
        }
        BasicTensor<T> dg(p.weight.shape()), dbeta(p.bias.shape());
        for (std::size_t c = 0; c < C; ++c) {
          dg[c] = static_cast<T>(sum_dy_xhat[c]);
          dbeta[c] = static_cast<T>(sum_dy[c]);
        }
        if (need_dx) {
          dx = BasicTensor<T>(dy.shape());
          const double m = static_cast<double>(M);
          for (std::size_t r = 0; r < M; ++r) {
            for (std::size_t c = 0; c < C; ++c) {
              const std::size_t k = r * C + c;
              const double scale = static_cast<double>(p.weight[c]) * inv_std[c] / m;
              dx[k] = static_cast<T>(scale * (m * dy[k] - sum_dy[c] - xhat[k] * sum_dy_xhat[c]));
            }
          }
        }
        grad_w[li] = std::move(dg);
        grad_b[li] = std::move(dbeta);
        break;
      }

      case LayerKind::max_pool2d: {
        if (need_dx) {
          dx = BasicTensor<T>(x.shape());
          const auto& argmax = cache.pool_argmax_[li];
          for (std::size_t k = 0; k < dy.size(); ++k) dx[argmax[k]] += dy[k];
        }
        break;
      }

      case LayerKind::flatten:
        if (need_dx) dx = dy.reshaped(x.shape());
        break;

      case LayerKind::dense: {
        const std::size_t I = in[0], O = out[0];
        BasicTensor<T> dk(p.weight.shape()), db(p.bias.shape());
        if (need_dx) dx = BasicTensor<T>(x.shape());
        const T* X = x.data().data();
        const T* K = p.weight.data().data();
        const T* G = dy.data().data();
        T* DK = dk.data().data();
        for (std::size_t b = 0; b < n; ++b) {
          const T* g = G + b * O;
          for (std::size_t j = 0; j < O; ++j) db[j] += g[j];
          for (std::size_t k = 0; k < I; ++k) {
            const T xv = X[b * I + k];
            T* dkr = DK + k * O;
            const T* kr = K + k * O;
            T acc{0};
            for (std::size_t j = 0; j < O; ++j) {
              dkr[j] += xv * g[j];
              acc += kr[j] * g[j];
            }
            if (need_dx) dx[b * I + k] = acc;
          }
        }
        grad_w[li] = std::move(dk);
        grad_b[li] = std::move(db);
        break;
      }
    }
    if (!need_dx) break;
    dy = std::move(dx);
  }

  Gradients<T> grads;
  for (std::size_t li = 1; li < layers_.size(); ++li) {
    if (!has_params(layers_[li].kind)) continue;
    grads.push_back(std::move(grad_w[li]));
    grads.push_back(std::move(grad_b[li]));
  }
  return grads;
}

template <typename T>
void BasicNetwork<T>::apply_gradients(AdamState<T>& optimizer, const Gradients<T>& grads) {
  auto params = trainable_parameters();
  adam_step<T>(optimizer, params, grads);
  ++version_;
}

template class ForwardCache<float>;
template class ForwardCache<double>;
template class BasicNetwork<float>;
template class BasicNetwork<double>;

}  // namespace csocnn::nn
