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
#include <filesystem>
#include <vector>

#include "mhp/kg.hpp"

namespace mhp {

struct SynthConfig {
  std::size_t n_matchable = 1000;
  std::size_t n_dangling_source = 250;
  std::size_t n_dangling_target = 250;
  std::size_t n_relations = 20;
  double avg_degree = 8.0;
  double edge_noise = 0.05;  // fraction of target core triples rewired
  double hub_exponent = 0.0;  // 0 gives uniform endpoints, > 0 a Zipf-skewed degree profile
  // Triples per dangling entity; 0 means round(avg_degree).
  std::size_t dangling_degree = 0;
  // Relations private to each KG. Dangling attachments use one of them with
  // probability `specific_share`, otherwise a shared relation.
  std::size_t specific_relations = 0;
  double specific_share = 0.0;
  std::uint64_t rng_seed = 1;
};

struct SynthPair {
  KnowledgeGraph source;
  KnowledgeGraph target;
  AlignmentSeeds seeds;
  std::vector<EntityId> source_dangling;
  std::vector<EntityId> target_dangling;
  std::size_t core_triples = 0;       // triples among matchable entities
  std::size_t perturbed_triples = 0;  // rewired target core triples
};

void validate(const SynthConfig& config);

// Builds a source KG over matchable + dangling entities and a target KG
// that is a relabelled copy of the matchable core plus its own dangling
// entities. Dangling entities are wired into the core by random triples.
SynthPair generate(const SynthConfig& config);

// Writes the data-directory layout read by load_dataset plus meta.json.
void write_synth(const SynthPair& pair, const SynthConfig& config, const std::filesystem::path& dir);

}  // namespace mhp
