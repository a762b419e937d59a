/*
 * Copyright 2026 The MHP-Align Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mhp/ffn.hpp"

#include <cmath>
#include <stdexcept>

namespace mhp {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

DenseMatrix xavier_init(std::size_t rows, std::size_t cols, Rng& rng) {
  require(rows >= 1 && cols >= 1, "xavier_init: rows and cols must be >= 1");
  const double bound = std::sqrt(6.0 / double(rows + cols));
  DenseMatrix m(rows, cols);
  for (float& v : m.values()) v = static_cast<float>(rng.uniform(-bound, bound));
  return m;
}

template <typename T>
std::size_t FeedForwardNet<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

Net make_net(const std::vector<std::size_t>& dims, const std::vector<Activation>& activations, Rng& rng) {
  require(dims.size() == activations.size() + 1, "make_net: need one activation per layer");
  Net net;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    net.layers.push_back({xavier_init(dims[i + 1], dims[i], rng), std::vector<float>(dims[i + 1], 0.0f), activations[i]});
  }
  return net;
}

namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kRelu: return z > 0.0 ? z : 0.0;
    case Activation::kSigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::kIdentity: break;
  }
  return z;
}

// Derivative expressed through the pre- and post-activation values.
double activation_slope(Activation a, double pre, double post) {
  switch (a) {
    case Activation::kRelu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::kSigmoid: return post * (1.0 - post);
    case Activation::kIdentity: break;
  }
  return 1.0;
}

}  // namespace

template <typename T>
ForwardResult<T> forward(const FeedForwardNet<T>& net, const Matrix<T>& batch) {
  require(!net.layers.empty(), "forward: empty network");
  if (batch.cols() != net.input_dim()) {
    throw std::invalid_argument("forward: input dim " + std::to_string(batch.cols()) + " does not match network input " +
                                std::to_string(net.input_dim()));
  }
  ForwardResult<T> result;
  result.cache.input = batch;
  const Matrix<T>* current = &result.cache.input;
  for (const auto& layer : net.layers) {
    const std::size_t n = current->rows();
    const std::size_t out = layer.weight.rows();
    Matrix<T> pre(n, out);
    Matrix<T> post(n, out);
#pragma omp parallel for schedule(static) if (n * out * layer.weight.cols() > 200000)
    for (std::size_t s = 0; s < n; ++s) {
      auto x = current->row(s);
      for (std::size_t o = 0; o < out; ++o) {
        const double z = dot(layer.weight.row(o), x) + double(layer.bias[o]);
        pre(s, o) = static_cast<T>(z);
        post(s, o) = static_cast<T>(activate(layer.activation, z));
      }
    }
    result.cache.pre.push_back(std::move(pre));
    result.cache.post.push_back(std::move(post));
    current = &result.cache.post.back();
  }
  result.output = result.cache.post.back();
  return result;
}

template <typename T>
ForwardResult<T> forward(const FeedForwardNet<T>& net, std::span<const T> input) {
  Matrix<T> batch(1, input.size());
  std::copy(input.begin(), input.end(), batch.values().begin());
  return forward(net, batch);
}

template <typename T>
NetGradients<T> backward(const FeedForwardNet<T>& net, const ForwardCache<T>& cache, const Matrix<T>& output_grad,
                         bool input_gradient) {
  const std::size_t n_layers = net.layers.size();
  if (cache.pre.size() != n_layers || cache.post.empty() || !cache.post.back().same_shape(output_grad)) {
    throw std::invalid_argument("backward: cache does not match network or output gradient");
  }
  for (std::size_t l = 0; l < n_layers; ++l) {
    if (cache.pre[l].cols() != net.layers[l].weight.rows()) {
      throw std::invalid_argument("backward: stale cache for layer " + std::to_string(l));
    }
  }
  const std::size_t n = output_grad.rows();
  NetGradients<T> grads;
  grads.weight.resize(n_layers);
  grads.bias.resize(n_layers);

  // delta holds dL/d(post) of the current layer, in double.
  Matrix<double> delta = output_grad.template cast<double>();
  for (std::size_t li = n_layers; li-- > 0;) {
    const auto& layer = net.layers[li];
    const Matrix<T>& input = li == 0 ? cache.input : cache.post[li - 1];
    const std::size_t out = layer.weight.rows();
    const std::size_t in = layer.weight.cols();
    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t o = 0; o < out; ++o) {
        delta(s, o) *= activation_slope(layer.activation, double(cache.pre[li](s, o)), double(cache.post[li](s, o)));
      }
    }
    Matrix<double> gw(out, in);
    std::vector<double> gb(out, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      auto x = input.row(s);
      for (std::size_t o = 0; o < out; ++o) {
        const double d = delta(s, o);
        if (d == 0.0) continue;
        gb[o] += d;
        auto gw_row = gw.row(o);
        for (std::size_t i = 0; i < in; ++i) gw_row[i] += d * double(x[i]);
      }
    }
    if (li == 0 && !input_gradient) {
      grads.weight[li] = gw.template cast<T>();
      grads.bias[li].assign(gb.begin(), gb.end());
      break;
    }
    Matrix<double> next(n, in);
    for (std::size_t s = 0; s < n; ++s) {
      auto nrow = next.row(s);
      for (std::size_t o = 0; o < out; ++o) {
        const double d = delta(s, o);
        if (d == 0.0) continue;
        auto w = layer.weight.row(o);
        for (std::size_t i = 0; i < in; ++i) nrow[i] += d * double(w[i]);
      }
    }
    grads.weight[li] = gw.template cast<T>();
    grads.bias[li].assign(gb.begin(), gb.end());
    delta = std::move(next);
  }
  if (input_gradient) grads.input = delta.template cast<T>();
  return grads;
}

template struct FeedForwardNet<float>;
template struct FeedForwardNet<double>;
template ForwardResult<float> forward(const FeedForwardNet<float>&, const Matrix<float>&);
template ForwardResult<double> forward(const FeedForwardNet<double>&, const Matrix<double>&);
template ForwardResult<float> forward(const FeedForwardNet<float>&, std::span<const float>);
template ForwardResult<double> forward(const FeedForwardNet<double>&, std::span<const double>);
template NetGradients<float> backward(const FeedForwardNet<float>&, const ForwardCache<float>&, const Matrix<float>&, bool);
template NetGradients<double> backward(const FeedForwardNet<double>&, const ForwardCache<double>&, const Matrix<double>&, bool);

}  // namespace mhp
