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
#include <map>
#include <span>
#include <vector>

#include "mhp/kg.hpp"
#include "mhp/matrix.hpp"

namespace mhp::nn {

// Cosine similarity clamped to [-1, 1]. Throws NumericError on a zero vector.
double cosine(std::span<const float> u, std::span<const float> v);

struct Neighbor {
  EntityId id = 0;
  double similarity = 0.0;
  bool operator==(const Neighbor&) const = default;
};

// Neighbours in descending similarity; ties go to the smaller id.
struct NeighborList {
  std::size_t query = 0;
  std::vector<Neighbor> neighbors;
};

inline bool ranks_before(const Neighbor& a, const Neighbor& b) {
  return a.similarity > b.similarity || (a.similarity == b.similarity && a.id < b.id);
}

// Row norms in double; throws on a zero row.
std::vector<double> row_norms(const DenseMatrix& rows);

// All-pairs cosine, rows of `queries` against rows of `candidates`.
// Tiled and OpenMP-parallel over queries; every entry is computed with the
// same sequential double dot product as the serial reference, so results
// are bit-identical to it.
Matrix<double> similarity_matrix(const DenseMatrix& queries, const DenseMatrix& candidates);

// Exact top-k per row of a precomputed similarity matrix.
std::vector<NeighborList> top_k(const Matrix<double>& similarities, std::size_t k);

// Exact top-k of every query row among the candidate rows.
std::vector<NeighborList> top_k(const DenseMatrix& queries, const DenseMatrix& candidates, std::size_t k);

// Top-1 candidate id per query.
std::vector<EntityId> nearest(const DenseMatrix& queries, const DenseMatrix& candidates);

struct HubnessReport {
  std::map<EntityId, std::size_t> counts;             // occurrences as a top-1 neighbour
  std::vector<std::pair<EntityId, std::size_t>> top;  // descending count, ties by id
  std::size_t queries = 0;

  std::size_t max_count() const { return top.empty() ? 0 : top.front().second; }
};

HubnessReport hubness(std::span<const EntityId> top1, std::size_t top_n);

// Single-threaded, untiled implementations kept as the baseline for tests
// and benchmarks.
namespace reference {

Matrix<double> similarity_matrix(const DenseMatrix& queries, const DenseMatrix& candidates);
std::vector<NeighborList> top_k(const DenseMatrix& queries, const DenseMatrix& candidates, std::size_t k);

}  // namespace reference

}  // namespace mhp::nn
