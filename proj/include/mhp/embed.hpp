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
#include <vector>

#include "mhp/kg.hpp"
#include "mhp/matrix.hpp"
#include "mhp/rng.hpp"

namespace mhp {

template <typename T>
struct EmbeddingTable {
  Matrix<T> entities;   // n_entities x dim
  Matrix<T> relations;  // n_relations x dim

  std::size_t dim() const { return entities.cols(); }

  template <typename U>
  EmbeddingTable<U> cast() const {
    return {entities.template cast<U>(), relations.template cast<U>()};
  }
  bool operator==(const EmbeddingTable&) const = default;
};

template <typename T>
struct Mapper {
  Matrix<T> m;  // dim x dim, applied as M x

  template <typename U>
  Mapper<U> cast() const {
    return {m.template cast<U>()};
  }
  bool operator==(const Mapper&) const = default;
};

EmbeddingTable<float> init_embeddings(std::size_t n_entities, std::size_t n_relations, std::size_t dim, Rng& rng);

// Rescales every entity row whose L2 norm exceeds 1 back onto the unit sphere.
void clip_entity_norms(Matrix<float>& entities);

// Loss value plus gradients for the mapper and both entity tables.
template <typename T>
struct MappedLoss {
  double loss = 0.0;
  Matrix<T> mapper;
  Matrix<T> source;
  Matrix<T> target;
};

template <typename T>
struct TripleLoss {
  double loss = 0.0;
  Matrix<T> entities;
  Matrix<T> relations;
};

// Corrupts the tail with probability 0.5, otherwise the head, with a
// uniformly drawn entity. Layout: negatives[i * per_triple + j].
std::vector<Triple> sample_negatives(std::span<const Triple> batch, std::size_t per_triple, std::size_t n_entities,
                                     Rng& rng);

// Margin ranking over translational scores:
//   sum_j max(0, margin + |h + r - t| - |h' + r - t'|), averaged over triples.
template <typename T>
TripleLoss<T> triple_loss(const EmbeddingTable<T>& table, std::span<const Triple> batch,
                          std::span<const Triple> negatives, std::size_t per_triple, double margin);

// Mean over pairs of |M x_s - x_t|.
template <typename T>
MappedLoss<T> mapping_loss(const Mapper<T>& mapper, std::span<const SeedPair> pairs, const Matrix<T>& source,
                           const Matrix<T>& target);

struct NcaConfig {
  double alpha = 5.0;
  double beta = 10.0;
};

struct NcaResult {
  double loss = 0.0;
  Matrix<double> grad;  // dL/dS
};

// Batch NCA loss over an N x N similarity matrix whose diagonal holds the
// positive pairs. Row i supplies source-side negatives, column i the
// target-side ones.
NcaResult nca_loss(const Matrix<double>& similarity, const NcaConfig& config);

// S_ij = cos(M x_{s_i}, x_{t_j}) over the batch pairs.
template <typename T>
Matrix<double> batch_similarity(const Mapper<T>& mapper, std::span<const SeedPair> pairs, const Matrix<T>& source,
                                const Matrix<T>& target);

// Pulls dL/dS back to M and the entity tables.
template <typename T>
MappedLoss<T> batch_similarity_backward(const Mapper<T>& mapper, std::span<const SeedPair> pairs,
                                        const Matrix<T>& source, const Matrix<T>& target,
                                        const Matrix<double>& similarity_grad);

// NCA loss composed with the mapped cosine similarity of a seed batch.
template <typename T>
MappedLoss<T> nca_alignment_loss(const Mapper<T>& mapper, std::span<const SeedPair> pairs, const Matrix<T>& source,
                                 const Matrix<T>& target, const NcaConfig& config);

}  // namespace mhp
