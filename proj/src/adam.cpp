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

#include "mhp/adam.hpp"

#include <cmath>
#include <stdexcept>

#include "mhp/error.hpp"

namespace mhp {

void Adam::step(std::span<const ParamSlot> slots) {
  for (const auto& slot : slots) {
    if (slot.param.size() != slot.grad.size()) {
      throw std::invalid_argument("adam: gradient shape mismatch for tensor '" + slot.name + "'");
    }
    for (float g : slot.grad) {
      if (!std::isfinite(g)) throw NumericError("adam: non-finite gradient in tensor '" + slot.name + "'");
    }
  }
  if (first_.empty()) {
    for (const auto& slot : slots) {
      names_.push_back(slot.name);
      first_.emplace_back(slot.param.size(), 0.0f);
      second_.emplace_back(slot.param.size(), 0.0f);
    }
  }
  if (slots.size() != first_.size()) throw std::invalid_argument("adam: number of tensors changed between steps");
  for (std::size_t s = 0; s < slots.size(); ++s) {
    if (slots[s].param.size() != first_[s].size() || slots[s].name != names_[s]) {
      throw std::invalid_argument("adam: tensor '" + slots[s].name + "' does not match optimizer state");
    }
  }

  ++step_count_;
  const double t = double(step_count_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t s = 0; s < slots.size(); ++s) {
    auto& m = first_[s];
    auto& v = second_[s];
    const auto& slot = slots[s];
    for (std::size_t i = 0; i < slot.param.size(); ++i) {
      const double g = slot.grad[i];
      const double mi = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      const double vi = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double update = config_.learning_rate * (mi / c1) / (std::sqrt(vi / c2) + config_.epsilon);
      slot.param[i] = static_cast<float>(double(slot.param[i]) - update);
    }
  }
}

}  // namespace mhp
