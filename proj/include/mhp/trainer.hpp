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
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "mhp/eval.hpp"
#include "mhp/kg.hpp"
#include "mhp/model.hpp"

namespace mhp {

struct RunConfig {
  ModelConfig model;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  SplitRatios split;
  std::uint64_t split_seed = 1;
  bool exclude_target_dangling = false;
  std::string data;
};

// Shortest text that reads back to the same double.
std::string format_double(double v);

using KeyValues = std::map<std::string, std::string>;

// Flat `key = value` file; '#' starts a comment. Unknown keys are rejected
// when applied, not when read.
KeyValues read_key_values(const std::filesystem::path& path);
void write_key_values(const KeyValues& values, const std::filesystem::path& path);

// Throws UsageError for unknown keys or unparsable values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);
void apply_settings(RunConfig& config, const KeyValues& values);
KeyValues to_key_values(const RunConfig& config);
std::vector<std::string> config_keys();

// Throws UsageError.
void validate(const RunConfig& config);

TrainingData make_training_data(const Dataset& dataset, const DatasetSplit& split);
CandidatePool candidate_pool(const Dataset& dataset, const RunConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  EpochStats stats;
  PrecisionRecall validation_detection;
  PrecisionRecall validation_alignment;
  double wall_seconds = 0.0;
};

struct TrainResult {
  ModelState best;
  std::size_t best_epoch = 0;
  double best_f1 = 0.0;
  std::vector<EpochRecord> history;
};

// Keeps the best score seen; reports stop once `patience` epochs in a row
// failed to beat it strictly.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  // Returns true when `score` is a new best.
  bool improved(double score);
  bool should_stop() const { return stale_ >= patience_; }
  double best() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t stale_ = 0;
  double best_ = -1.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Alternating training with early stopping on validation two-step F1. Only
// the train and validation partitions are read.
TrainResult train(const Dataset& dataset, const DatasetSplit& split, const RunConfig& config,
                  const EpochCallback& on_epoch = {});

std::string training_log_header();
std::string training_log_row(const EpochRecord& record);

}  // namespace mhp
