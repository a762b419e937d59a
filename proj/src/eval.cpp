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

#include "mhp/eval.hpp"

#include <limits>

#include "mhp/nn_search.hpp"
#include "mhp/ot.hpp"

namespace mhp {

PrecisionRecall precision_recall(std::size_t tp, std::size_t fp, std::size_t fn) {
  PrecisionRecall r;
  r.precision = tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp);
  r.recall = tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn);
  r.f1 = r.precision + r.recall == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

RelaxedReport relaxed_from_ranks(std::span<const std::size_t> ranks) {
  RelaxedReport r;
  r.queries = ranks.size();
  if (ranks.empty()) return r;
  for (std::size_t rank : ranks) {
    require(rank >= 1, "relaxed_from_ranks: ranks are 1-based");
    r.hits_at_1 += rank == 1 ? 1.0 : 0.0;
    r.hits_at_10 += rank <= 10 ? 1.0 : 0.0;
    r.mrr += 1.0 / double(rank);
  }
  const double n = double(ranks.size());
  r.hits_at_1 /= n;
  r.hits_at_10 /= n;
  r.mrr /= n;
  return r;
}

namespace {

// Similarities of mapped queries to all targets with excluded columns
// pushed to -inf.
Matrix<double> pooled_similarities(const Mapper<float>& mapper, const Matrix<float>& source,
                                   const Matrix<float>& target, std::span<const EntityId> queries,
                                   const CandidatePool& pool) {
  const auto mapped = map_rows(mapper.m, gather_rows(source, queries));
  auto sims = nn::similarity_matrix(mapped, target);
  for (EntityId c : pool.excluded) {
    for (std::size_t q = 0; q < sims.rows(); ++q) sims(q, c) = -std::numeric_limits<double>::infinity();
  }
  return sims;
}

}  // namespace

std::vector<std::size_t> true_ranks(const Mapper<float>& mapper, const Matrix<float>& source,
                                    const Matrix<float>& target, std::span<const SeedPair> pairs,
                                    const CandidatePool& pool) {
  std::vector<EntityId> queries;
  for (const auto& p : pairs) queries.push_back(p.source);
  const auto sims = pooled_similarities(mapper, source, target, queries, pool);
  std::vector<std::size_t> ranks(pairs.size());
#pragma omp parallel for schedule(static)
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    const nn::Neighbor truth{pairs[q].target, sims(q, pairs[q].target)};
    std::size_t ahead = 0;
    for (std::size_t c = 0; c < sims.cols(); ++c) {
      if (nn::ranks_before({static_cast<EntityId>(c), sims(q, c)}, truth)) ++ahead;
    }
    ranks[q] = ahead + 1;
  }
  return ranks;
}

RelaxedReport relaxed_eval(const Mapper<float>& mapper, const Matrix<float>& source, const Matrix<float>& target,
                           std::span<const SeedPair> pairs, const CandidatePool& pool) {
  require(!pairs.empty(), "relaxed_eval: empty test set");
  const auto ranks = true_ranks(mapper, source, target, pairs, pool);
  return relaxed_from_ranks(ranks);
}

PrecisionRecall detection_eval(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
  require(predicted.size() == truth.size(), "detection_eval: prediction and label counts differ");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] && truth[i]) ++tp;
    if (predicted[i] && !truth[i]) ++fp;
    if (!predicted[i] && truth[i]) ++fn;
  }
  return precision_recall(tp, fp, fn);
}

std::vector<EntityId> evaluation_sources(const Partition& part) {
  std::vector<EntityId> ids;
  for (const auto& p : part.seeds) ids.push_back(p.source);
  ids.insert(ids.end(), part.dangling.begin(), part.dangling.end());
  return ids;
}

std::vector<bool> evaluation_labels(const Partition& part) {
  std::vector<bool> labels(part.seeds.size(), false);
  labels.resize(part.seeds.size() + part.dangling.size(), true);
  return labels;
}

ConsolidatedReport consolidated_eval(const Mapper<float>& mapper, const Matrix<float>& source,
                                     const Matrix<float>& target, const Partition& test,
                                     const std::vector<bool>& predicted_dangling, const CandidatePool& pool) {
  const auto sources = evaluation_sources(test);
  require(predicted_dangling.size() == sources.size(), "consolidated_eval: one prediction per test source");
  ConsolidatedReport report;
  report.detection = detection_eval(predicted_dangling, evaluation_labels(test));

  std::vector<EntityId> kept;
  std::vector<std::size_t> kept_index;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (!predicted_dangling[i]) {
      kept.push_back(sources[i]);
      kept_index.push_back(i);
    }
  }
  std::size_t correct = 0;
  if (!kept.empty()) {
    const auto top = nn::top_k(pooled_similarities(mapper, source, target, kept, pool), 1);
    for (std::size_t j = 0; j < kept.size(); ++j) {
      const std::size_t i = kept_index[j];
      if (i < test.seeds.size() && top[j].neighbors.front().id == test.seeds[i].target) ++correct;
    }
  }
  const std::size_t predicted_matchable = kept.size();
  const std::size_t truly_matchable = test.seeds.size();
  report.alignment.precision = predicted_matchable == 0 ? 0.0 : double(correct) / double(predicted_matchable);
  report.alignment.recall = truly_matchable == 0 ? 0.0 : double(correct) / double(truly_matchable);
  const double pr = report.alignment.precision + report.alignment.recall;
  report.alignment.f1 = pr == 0.0 ? 0.0 : 2.0 * report.alignment.precision * report.alignment.recall / pr;
  return report;
}

}  // namespace mhp
