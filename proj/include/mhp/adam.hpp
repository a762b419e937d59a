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

namespace mhp {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One parameter tensor and its gradient, both flattened.
struct ParamSlot {
  std::string name;
  std::span<float> param;
  std::span<const float> grad;
};

// Adam with bias correction. Moments are allocated on the first step and
// bound to slot position; later steps must present the same tensors in
// the same order.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  void step(std::span<const ParamSlot> slots);

  std::size_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }

  const std::vector<std::vector<float>>& first_moments() const { return first_; }
  const std::vector<std::vector<float>>& second_moments() const { return second_; }

  bool operator==(const Adam&) const = default;

 private:
  AdamConfig config_;
  std::size_t step_count_ = 0;
  std::vector<std::string> names_;
  std::vector<std::vector<float>> first_;
  std::vector<std::vector<float>> second_;
};

}  // namespace mhp
