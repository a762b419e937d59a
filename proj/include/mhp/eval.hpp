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

#include "mhp/embed.hpp"
#include "mhp/kg.hpp"

namespace mhp {

struct RelaxedReport {
  double hits_at_1 = 0.0;
  double hits_at_10 = 0.0;
  double mrr = 0.0;
  std::size_t queries = 0;
};

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ConsolidatedReport {
  PrecisionRecall detection;
  PrecisionRecall alignment;
};

// Zero denominators give zero.
PrecisionRecall precision_recall(std::size_t true_positive, std::size_t false_positive, std::size_t false_negative);

// Metrics from 1-based ranks of the true counterparts.
RelaxedReport relaxed_from_ranks(std::span<const std::size_t> ranks);

// Which target ids may be returned by a search. Empty means all.
struct CandidatePool {
  std::vector<EntityId> excluded;
};

// 1-based rank of each pair's true target among the candidates, ordering by
// cosine to M x_s and breaking ties by ascending id.
std::vector<std::size_t> true_ranks(const Mapper<float>& mapper, const Matrix<float>& source,
                                    const Matrix<float>& target, std::span<const SeedPair> pairs,
                                    const CandidatePool& pool = {});

RelaxedReport relaxed_eval(const Mapper<float>& mapper, const Matrix<float>& source, const Matrix<float>& target,
                           std::span<const SeedPair> pairs, const CandidatePool& pool = {});

// Dangling is the positive class.
PrecisionRecall detection_eval(const std::vector<bool>& predicted_dangling, const std::vector<bool>& truly_dangling);

// Source ids of a test partition in evaluation order: matchable seed
// sources first, then dangling entities.
std::vector<EntityId> evaluation_sources(const Partition& part);
std::vector<bool> evaluation_labels(const Partition& part);

// Two-step protocol. `predicted_dangling` follows evaluation_sources order.
// Sources predicted matchable are aligned to their top-1 target; alignment
// precision divides the correct count by the number predicted matchable and
// recall by the number truly matchable.
ConsolidatedReport consolidated_eval(const Mapper<float>& mapper, const Matrix<float>& source,
                                     const Matrix<float>& target, const Partition& test,
                                     const std::vector<bool>& predicted_dangling, const CandidatePool& pool = {});

}  // namespace mhp
