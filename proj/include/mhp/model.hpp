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
#include <string>
#include <vector>

#include "mhp/adam.hpp"
#include "mhp/checkpoint.hpp"
#include "mhp/dangling.hpp"
#include "mhp/embed.hpp"
#include "mhp/kg.hpp"
#include "mhp/ot.hpp"

namespace mhp {

enum class DanglingLoss { kMarginRanking, kBackgroundRanking };
enum class DetectorKind { kClassifier, kNearestDistance };

std::string to_string(DanglingLoss loss);
DanglingLoss dangling_loss_from_string(const std::string& name);

// Model hyperparameters. Learning rates follow the usual setting of 1e-3
// everywhere except the WGAN objectives (OtConfig::learning_rate, 5e-5).
struct ModelConfig {
  std::size_t dim = 64;
  double learning_rate = 1e-3;
  double triple_margin = 1.0;
  std::size_t negatives = 1;
  std::size_t triple_batch = 4096;
  std::size_t mapping_batch = 4096;
  std::size_t nca_batch = 4096;
  std::size_t dangling_batch = 4096;
  std::size_t classifier_batch = 4096;
  // Batches are cut to ceil(n / min_batches) when that is smaller.
  std::size_t min_batches = 20;
  std::size_t classifier_steps = 10;
  std::size_t ot_rounds = 1;
  NcaConfig nca;
  OtConfig ot;
  DetectConfig detect;
  bool use_ot = true;
  bool use_nca = true;
  bool use_classifier = true;
  DanglingLoss dangling_loss = DanglingLoss::kMarginRanking;
  bool freeze_entities_in_mapping = false;
  bool freeze_entities_in_detection = false;
  std::uint64_t seed = 1;
};

// Training-visible slice of a dataset. Holds no test labels.
struct TrainingData {
  std::size_t source_entities = 0;
  std::size_t target_entities = 0;
  std::size_t source_relations = 0;
  std::size_t target_relations = 0;
  std::span<const Triple> source_triples;
  std::span<const Triple> target_triples;
  std::vector<SeedPair> seeds;
  std::vector<EntityId> dangling;
  std::vector<EntityId> target_ids;  // OT target pool
};

struct ModelState {
  EmbeddingTable<float> source;
  EmbeddingTable<float> target;
  Mapper<float> mapper;
  OtState ot;
  Net classifier;

  Adam source_triple_opt;
  Adam target_triple_opt;
  Adam mapping_opt;
  Adam nca_opt;
  Adam dangling_opt;
  Adam classifier_opt;
};

ModelState init_model(const TrainingData& data, const ModelConfig& config);

struct EpochStats {
  double triple_loss = 0.0;
  double mapping_loss = 0.0;
  double ot_dual = 0.0;
  double ot_mapper_loss = 0.0;
  double nca_loss = 0.0;
  double dangling_loss = 0.0;
  double classifier_loss = 0.0;
  std::size_t ot_clip_calls = 0;

  bool operator==(const EpochStats&) const = default;
};

// Alignment phase, in order: triple batches on both KGs, mapping batches,
// OT rounds, NCA batches. Returns running means of each loss.
EpochStats train_alignment_epoch(ModelState& state, const TrainingData& data, const ModelConfig& config,
                                 std::size_t epoch);

// Detection phase: MR or BR on the training dangling entities, then
// classifier steps on freshly built proximity features. Adds to `stats`.
void train_detection_epoch(ModelState& state, const TrainingData& data, const ModelConfig& config, std::size_t epoch,
                           EpochStats& stats);

// Distance from M x to its cosine-nearest target, the first-order dangling
// score used when the classifier is off.
std::vector<double> nearest_distance_scores(const ModelState& state, std::span<const EntityId> sources);

// Dangling probabilities (classifier) or distance scores, thresholded at
// their mean over `sources`.
Decisions detect(const ModelState& state, const ModelConfig& config, std::span<const EntityId> sources,
                 DetectorKind kind);

DetectorKind default_detector(const ModelConfig& config);

Checkpoint to_checkpoint(const ModelState& state);
// Rebuilds the parameters (not the optimizer moments) from a checkpoint.
ModelState from_checkpoint(const Checkpoint& checkpoint);

}  // namespace mhp
