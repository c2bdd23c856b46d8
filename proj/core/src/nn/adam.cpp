#include "csocnn/nn/adam.hpp"

#include <cmath>
#include <string>

#include "csocnn/error.hpp"

namespace csocnn::nn {

template <typename T>
void adam_step(AdamState<T>& state, std::span<BasicTensor<T>* const> params,
               std::span<const BasicTensor<T>> grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i].shape()) {
      throw ShapeError("adam: gradient " + std::to_string(i) + " has shape " +
                       shape_to_string(grads[i].shape()) + ", parameter has " +
                       shape_to_string(params[i]->shape()));
    }
  }
  if (state.first_moment.empty()) {
    for (const auto* p : params) {
      state.first_moment.emplace_back(p->shape());
      state.second_moment.emplace_back(p->shape());
    }
  } else if (state.first_moment.size() != params.size()) {
    throw ShapeError("adam: optimizer state belongs to a different parameter set");
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i]->data();
    auto g = grads[i].data();
    auto m = state.first_moment[i].data();
    auto v = state.second_moment[i].data();
    if (m.size() != p.size()) {
      throw ShapeError("adam: moment " + std::to_string(i) + " is not congruent");
    }
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g[k];
      const double mk = state.beta1 * m[k] + (1.0 - state.beta1) * gk;
      const double vk = state.beta2 * v[k] + (1.0 - state.beta2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double m_hat = mk / correction1;
      const double v_hat = vk / correction2;
      p[k] = static_cast<T>(p[k] - state.learning_rate * m_hat /
                                       (std::sqrt(v_hat) + state.epsilon));
    }
  }
}

template void adam_step<float>(AdamState<float>&, std::span<BasicTensor<float>* const>,
                               std::span<const BasicTensor<float>>);
template void adam_step<double>(AdamState<double>&, std::span<BasicTensor<double>* const>,
                                std::span<const BasicTensor<double>>);

}  // namespace csocnn::nn
