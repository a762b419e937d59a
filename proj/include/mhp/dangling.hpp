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
#include <cstdint>
#include <span>
#include <vector>

#include "mhp/embed.hpp"
#include "mhp/ffn.hpp"
#include "mhp/kg.hpp"
#include "mhp/rng.hpp"

namespace mhp {

struct DetectConfig {
  std::size_t k = 5;  // nearest targets per source
  std::size_t m = 5;  // nearest sources per retrieved target
  double margin = 1.0;
  std::size_t br_samples = 5;
  std::size_t classifier_hidden = 128;

  std::size_t feature_dim() const { return k * (1 + m); }
};

// MR: mean over the batch of max(0, margin - |M x - x_nn|), where x_nn is the
// precomputed nearest target of each dangling entity.
template <typename T>
MappedLoss<T> mr_loss(const Mapper<T>& mapper, std::span<const EntityId> dangling,
                      std::span<const EntityId> nearest_targets, const Matrix<T>& source, const Matrix<T>& target,
                      double margin);

// Uniform target ids, `per_entity` per dangling entity, laid out contiguously.
std::vector<EntityId> sample_background(std::size_t n_dangling, std::size_t per_entity, std::size_t n_targets, Rng& rng);

// BR: mean over (dangling x, sampled target v) of | |M x - x_v| - margin |.
template <typename T>
MappedLoss<T> br_loss(const Mapper<T>& mapper, std::span<const EntityId> dangling,
                      std::span<const EntityId> sampled_targets, std::size_t per_entity, const Matrix<T>& source,
                      const Matrix<T>& target, double margin);

// d = [d1 || d2]: d1 holds the k first-order similarities between M x_s and
// its nearest targets; block j of d2 holds the m similarities between the
// j-th retrieved target and its nearest mapped sources.
struct ProximityFeature {
  std::vector<double> d1;
  std::vector<double> d2;

  std::vector<double> values() const;
};

ProximityFeature build_feature(EntityId source_id, const Mapper<float>& mapper, const Matrix<float>& source,
                               const Matrix<float>& target, std::size_t k, std::size_t m);

// Feature rows for many sources at once, sharing the similarity work.
// OpenMP-parallel over queries.
Matrix<float> build_features(std::span<const EntityId> sources, const Mapper<float>& mapper,
                             const Matrix<float>& source, const Matrix<float>& target, std::size_t k, std::size_t m);

namespace reference {
Matrix<float> build_features(std::span<const EntityId> sources, const Mapper<float>& mapper,
                             const Matrix<float>& source, const Matrix<float>& target, std::size_t k, std::size_t m);
}  // namespace reference

// k(1+m) -> hidden -> 1, relu then sigmoid.
Net make_classifier(std::size_t input_dim, std::size_t hidden, Rng& rng);

template <typename T>
struct ClassifierLoss {
  double loss = 0.0;
  NetGradients<T> gradients;
};

// Binary cross-entropy with dangling as label 1. Probabilities are clamped
// to [1e-7, 1 - 1e-7] before the log.
template <typename T>
ClassifierLoss<T> classifier_loss(const FeedForwardNet<T>& classifier, const Matrix<T>& features,
                                  std::span<const std::uint8_t> labels);

std::vector<double> predict(const Net& classifier, const Matrix<float>& features);

enum class ThresholdPolicy { kMeanProbability };

struct Decisions {
  double threshold = 0.0;
  std::vector<double> probability;
  std::vector<bool> dangling;
};

// Threshold = mean probability over the scored set; dangling iff p > threshold.
Decisions decide(std::span<const double> probabilities, ThresholdPolicy policy = ThresholdPolicy::kMeanProbability);
Decisions decide(const Net& classifier, const Matrix<float>& features,
                 ThresholdPolicy policy = ThresholdPolicy::kMeanProbability);

}  // namespace mhp
