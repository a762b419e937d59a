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

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mhp/matrix.hpp"
#include "mhp/rng.hpp"

namespace mhp {

enum class Activation { kIdentity, kRelu, kSigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

// Uniform Xavier/Glorot initialisation in +-sqrt(6 / (rows + cols)).
DenseMatrix xavier_init(std::size_t rows, std::size_t cols, Rng& rng);

template <typename T>
struct Layer {
  Matrix<T> weight;  // out x in
  std::vector<T> bias;
  Activation activation = Activation::kIdentity;
};

template <typename T>
struct FeedForwardNet {
  std::vector<Layer<T>> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols(); }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().weight.rows(); }
  std::size_t parameter_count() const;

  template <typename U>
  FeedForwardNet<U> cast() const {
    FeedForwardNet<U> out;
    for (const auto& l : layers) {
      out.layers.push_back({l.weight.template cast<U>(), std::vector<U>(l.bias.begin(), l.bias.end()), l.activation});
    }
    return out;
  }

  // Visits every parameter tensor as a flat span, weights before biases.
  template <typename F>
  void for_each_parameter(F&& f) {
    for (auto& l : layers) {
      f(l.weight.values());
      f(std::span<T>(l.bias));
    }
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    for (const auto& l : layers) {
      f(l.weight.values());
      f(std::span<const T>(l.bias));
    }
  }

  bool operator==(const FeedForwardNet& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (!(layers[i].weight == other.layers[i].weight) || layers[i].bias != other.layers[i].bias ||
          layers[i].activation != other.layers[i].activation) {
        return false;
      }
    }
    return true;
  }
};

using Net = FeedForwardNet<float>;

// Builds a net with Xavier weights and zero biases. `dims` has one more
// entry than `activations`.
Net make_net(const std::vector<std::size_t>& dims, const std::vector<Activation>& activations, Rng& rng);

// Activations recorded by forward; rows are samples.
template <typename T>
struct ForwardCache {
  Matrix<T> input;
  std::vector<Matrix<T>> pre;   // pre-activation per layer
  std::vector<Matrix<T>> post;  // post-activation per layer
};

template <typename T>
struct ForwardResult {
  Matrix<T> output;
  ForwardCache<T> cache;
};

template <typename T>
struct NetGradients {
  std::vector<Matrix<T>> weight;
  std::vector<std::vector<T>> bias;
  Matrix<T> input;

  template <typename F>
  void for_each_parameter(F&& f) const {
    for (std::size_t i = 0; i < weight.size(); ++i) {
      f(weight[i].values());
      f(std::span<const T>(bias[i]));
    }
  }
};

template <typename T>
ForwardResult<T> forward(const FeedForwardNet<T>& net, const Matrix<T>& batch);

template <typename T>
ForwardResult<T> forward(const FeedForwardNet<T>& net, std::span<const T> input);

// Backpropagates `output_grad` (same shape as the forward output) through
// the cached activations. With `input_gradient` false, grads.input is left
// empty and the last matrix product is skipped.
template <typename T>
NetGradients<T> backward(const FeedForwardNet<T>& net, const ForwardCache<T>& cache, const Matrix<T>& output_grad,
                         bool input_gradient = true);

}  // namespace mhp
