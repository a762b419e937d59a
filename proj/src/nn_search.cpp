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

#include "mhp/nn_search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mhp/error.hpp"

namespace mhp::nn {

namespace {

constexpr std::size_t kQueryTile = 32;
constexpr std::size_t kCandidateTile = 256;

double clamp_unit(double s) { return std::clamp(s, -1.0, 1.0); }

double cosine_from(double dot_value, double norm_a, double norm_b) { return clamp_unit(dot_value / (norm_a * norm_b)); }

NeighborList select_top(std::size_t query, std::span<const double> sims, std::size_t k) {
  std::vector<Neighbor> all(sims.size());
  for (std::size_t c = 0; c < sims.size(); ++c) all[c] = {static_cast<EntityId>(c), sims[c]};
  const std::size_t keep = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), ranks_before);
  all.resize(keep);
  return {query, std::move(all)};
}

}  // namespace

double cosine(std::span<const float> u, std::span<const float> v) {
  require(u.size() == v.size(), "cosine: dimension mismatch");
  const double nu = l2_norm(u);
  const double nv = l2_norm(v);
  if (nu == 0.0 || nv == 0.0) throw NumericError("cosine: zero vector has no direction");
  return cosine_from(dot(u, v), nu, nv);
}

std::vector<double> row_norms(const DenseMatrix& rows) {
  std::vector<double> norms(rows.rows());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    norms[i] = l2_norm(rows.row(i));
    if (norms[i] == 0.0) throw NumericError("zero-norm embedding at row " + std::to_string(i));
  }
  return norms;
}

Matrix<double> similarity_matrix(const DenseMatrix& queries, const DenseMatrix& candidates) {
  require(queries.cols() == candidates.cols(), "similarity_matrix: dimension mismatch");
  const auto qn = row_norms(queries);
  const auto cn = row_norms(candidates);
  const std::size_t nq = queries.rows();
  const std::size_t nc = candidates.rows();
  Matrix<double> out(nq, nc);
  const std::size_t q_tiles = (nq + kQueryTile - 1) / kQueryTile;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t qt = 0; qt < q_tiles; ++qt) {
    const std::size_t q_end = std::min(nq, (qt + 1) * kQueryTile);
    for (std::size_t c0 = 0; c0 < nc; c0 += kCandidateTile) {
      const std::size_t c_end = std::min(nc, c0 + kCandidateTile);
      for (std::size_t q = qt * kQueryTile; q < q_end; ++q) {
        auto qrow = queries.row(q);
        for (std::size_t c = c0; c < c_end; ++c) out(q, c) = cosine_from(dot(qrow, candidates.row(c)), qn[q], cn[c]);
      }
    }
  }
  return out;
}

std::vector<NeighborList> top_k(const Matrix<double>& similarities, std::size_t k) {
  require(k >= 1, "top_k: k must be >= 1");
  require(similarities.cols() > 0, "top_k: empty candidate set");
  std::vector<NeighborList> out(similarities.rows());
#pragma omp parallel for schedule(static)
  for (std::size_t q = 0; q < similarities.rows(); ++q) out[q] = select_top(q, similarities.row(q), k);
  return out;
}

std::vector<NeighborList> top_k(const DenseMatrix& queries, const DenseMatrix& candidates, std::size_t k) {
  require(k >= 1, "top_k: k must be >= 1");
  require(candidates.rows() > 0, "top_k: empty candidate set");
  return top_k(similarity_matrix(queries, candidates), k);
}

std::vector<EntityId> nearest(const DenseMatrix& queries, const DenseMatrix& candidates) {
  const auto lists = top_k(queries, candidates, 1);
  std::vector<EntityId> ids(lists.size());
  for (std::size_t i = 0; i < lists.size(); ++i) ids[i] = lists[i].neighbors.front().id;
  return ids;
}

HubnessReport hubness(std::span<const EntityId> top1, std::size_t top_n) {
  HubnessReport report;
  report.queries = top1.size();
  for (EntityId id : top1) ++report.counts[id];
  report.top.assign(report.counts.begin(), report.counts.end());
  std::stable_sort(report.top.begin(), report.top.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (report.top.size() > top_n) report.top.resize(top_n);
  return report;
}

namespace reference {

Matrix<double> similarity_matrix(const DenseMatrix& queries, const DenseMatrix& candidates) {
  require(queries.cols() == candidates.cols(), "similarity_matrix: dimension mismatch");
  const auto qn = row_norms(queries);
  const auto cn = row_norms(candidates);
  Matrix<double> out(queries.rows(), candidates.rows());
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    for (std::size_t c = 0; c < candidates.rows(); ++c) {
      out(q, c) = cosine_from(dot(queries.row(q), candidates.row(c)), qn[q], cn[c]);
    }
  }
  return out;
}

std::vector<NeighborList> top_k(const DenseMatrix& queries, const DenseMatrix& candidates, std::size_t k) {
  require(k >= 1, "top_k: k must be >= 1");
  require(candidates.rows() > 0, "top_k: empty candidate set");
  const auto sims = similarity_matrix(queries, candidates);
  std::vector<NeighborList> out;
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    std::vector<Neighbor> all;
    for (std::size_t c = 0; c < candidates.rows(); ++c) all.push_back({static_cast<EntityId>(c), sims(q, c)});
    std::sort(all.begin(), all.end(), ranks_before);
    all.resize(std::min(k, all.size()));
    out.push_back({q, std::move(all)});
  }
  return out;
}

}  // namespace reference

}  // namespace mhp::nn
