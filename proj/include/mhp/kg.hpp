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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace mhp {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;
  auto operator<=>(const Triple&) const = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const {
    std::uint64_t h = (std::uint64_t(t.head) << 32) ^ (std::uint64_t(t.relation) << 16) ^ t.tail;
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    return std::size_t(h ^ (h >> 33));
  }
};

// String <-> dense id map, ids assigned in first-appearance order.
class Vocabulary {
 public:
  std::uint32_t intern(const std::string& name);
  std::optional<std::uint32_t> find(const std::string& name) const;
  const std::string& name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  bool operator==(const Vocabulary& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

struct KnowledgeGraph {
  Vocabulary entities;
  Vocabulary relations;
  std::vector<Triple> triples;  // file order, duplicates removed

  std::size_t entity_count() const { return entities.size(); }
  std::size_t relation_count() const { return relations.size(); }

  bool operator==(const KnowledgeGraph&) const = default;
};

// Tab-separated `head relation tail` lines; '#' starts a comment line.
// Duplicate triples are dropped with a warning appended to `warnings`.
KnowledgeGraph load_kg(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);
void save_kg(const KnowledgeGraph& kg, const std::filesystem::path& path);

struct SeedPair {
  EntityId source = 0;
  EntityId target = 0;
  bool operator==(const SeedPair&) const = default;
};

struct AlignmentSeeds {
  std::vector<SeedPair> pairs;
};

AlignmentSeeds load_links(const std::filesystem::path& path, const KnowledgeGraph& source, const KnowledgeGraph& target);
void save_links(const AlignmentSeeds& seeds, const KnowledgeGraph& source, const KnowledgeGraph& target,
                const std::filesystem::path& path);

std::vector<EntityId> load_entity_list(const std::filesystem::path& path, const KnowledgeGraph& kg);
void save_entity_list(const std::vector<EntityId>& ids, const KnowledgeGraph& kg, const std::filesystem::path& path);

struct DanglingLabels {
  std::unordered_set<EntityId> dangling;
  std::unordered_set<EntityId> matchable;

  bool is_dangling(EntityId id) const { return dangling.count(id) > 0; }
};

// Validates dangling ids against the KG and against the seed sources.
DanglingLabels make_dangling_labels(const AlignmentSeeds& seeds, const std::vector<EntityId>& dangling,
                                    const KnowledgeGraph& source);

struct SplitRatios {
  double train = 0.3;
  double validation = 0.2;
  double test = 0.5;
};

struct Partition {
  std::vector<SeedPair> seeds;
  std::vector<EntityId> dangling;
};

// Train/validation/test partitions. Reads of the test partition are
// counted so a training run can prove it never touched test labels.
class DatasetSplit {
 public:
  DatasetSplit() = default;
  DatasetSplit(Partition train, Partition validation, Partition test)
      : train_(std::move(train)), validation_(std::move(validation)), test_(std::move(test)) {}

  const Partition& train() const { return train_; }
  const Partition& validation() const { return validation_; }
  const Partition& test() const {
    ++test_reads_;
    return test_;
  }
  std::size_t test_reads() const { return test_reads_; }

 private:
  Partition train_;
  Partition validation_;
  Partition test_;
  mutable std::size_t test_reads_ = 0;
};

// Shuffles seeds and dangling ids independently with `rng_seed` and cuts
// each by floor(ratio * n), the remainder going to test.
DatasetSplit split_dataset(const AlignmentSeeds& seeds, const std::vector<EntityId>& dangling,
                           const SplitRatios& ratios, std::uint64_t rng_seed);

// A KG pair as laid out in a data directory:
//   source_triples.tsv, target_triples.tsv, links.tsv,
//   source_dangling.tsv, target_dangling.tsv (optional)
struct Dataset {
  KnowledgeGraph source;
  KnowledgeGraph target;
  AlignmentSeeds seeds;
  std::vector<EntityId> source_dangling;
  std::vector<EntityId> target_dangling;
};

Dataset load_dataset(const std::filesystem::path& dir, std::vector<std::string>* warnings = nullptr);

}  // namespace mhp
