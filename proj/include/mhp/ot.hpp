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

#include "mhp/adam.hpp"
#include "mhp/embed.hpp"
#include "mhp/ffn.hpp"
#include "mhp/kg.hpp"
#include "mhp/rng.hpp"

namespace mhp {

// Clip-bounded feed-forward scorer f_D used as the Kantorovich-Rubinstein
// dual potential.
struct Critic {
  Net net;
  double clip = 0.01;
};

// dim -> hidden -> 1 with a relu hidden layer; hidden == 0 gives a single
// linear layer. Weights start clipped.
Critic make_critic(std::size_t dim, std::size_t hidden, double clip, Rng& rng);

// Clamps every weight and bias entry into [-bound, bound].
template <typename T>
void clip_weights(FeedForwardNet<T>& net, double bound);
void clip_weights(Critic& critic);

template <typename T>
struct CriticObjective {
  double value = 0.0;         // mean f(y) over targets - mean f(M x) over sources
  NetGradients<T> gradients;  // d value / d critic parameters (ascent direction)
};

template <typename T>
CriticObjective<T> critic_objective(const FeedForwardNet<T>& critic, const Mapper<T>& mapper,
                                    const Matrix<T>& source_batch, const Matrix<T>& target_batch);

template <typename T>
struct MapperObjective {
  double loss = 0.0;
  Matrix<T> mapper;  // d loss / d M
};

// -mean f(M x) over a matchable source batch; the critic is held fixed.
template <typename T>
MapperObjective<T> mapper_alignment_objective(const FeedForwardNet<T>& critic, const Mapper<T>& mapper,
                                              const Matrix<T>& source_batch);

// +mean f(M x) over a dangling batch; pushes mapped dangling entities
// towards low critic scores.
template <typename T>
MapperObjective<T> mapper_dangling_objective(const FeedForwardNet<T>& critic, const Mapper<T>& mapper,
                                             const Matrix<T>& dangling_batch);

struct OtConfig {
  std::size_t n_critic = 5;
  std::size_t batch_size = 4096;
  double learning_rate = 5e-5;
  double clip = 0.01;
  std::size_t hidden = 500;
  bool dangling_repulsion = true;
};

struct OtState {
  Critic critic;
  Adam critic_optimizer;
  Adam mapper_optimizer;
};

OtState make_ot_state(std::size_t dim, const OtConfig& config, Rng& rng);

// Entity pools the OT batches are drawn from.
struct OtPools {
  const Matrix<float>* source = nullptr;
  const Matrix<float>* target = nullptr;
  std::span<const EntityId> matchable_source;
  std::span<const EntityId> target_ids;
  std::span<const EntityId> dangling;
};

struct OtRoundStats {
  std::size_t critic_steps = 0;
  std::size_t clip_calls = 0;
  std::size_t mapper_updates = 0;
  double dual_estimate = 0.0;  // last critic objective value
  double mapper_loss = 0.0;
};

// n_critic iterations of {sample, ascend the critic objective, clip},
// then one mapper step on the sum of the alignment and dangling objectives.
OtRoundStats ot_round(OtState& state, Mapper<float>& mapper, const OtPools& pools, const OtConfig& config, Rng& rng);

// Rows of `table` at `ids`.
Matrix<float> gather_rows(const Matrix<float>& table, std::span<const EntityId> ids);

// Up to `count` distinct ids drawn uniformly from `pool`.
std::vector<EntityId> sample_ids(std::span<const EntityId> pool, std::size_t count, Rng& rng);

}  // namespace mhp
