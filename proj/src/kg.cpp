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

#include "mhp/kg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mhp/error.hpp"
#include "mhp/rng.hpp"

namespace mhp {

std::uint32_t Vocabulary::intern(const std::string& name) {
  auto [it, inserted] = index_.try_emplace(name, static_cast<std::uint32_t>(names_.size()));
  if (inserted) names_.push_back(name);
  return it->second;
}

std::optional<std::uint32_t> Vocabulary::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

// Calls `f(line_number, fields)` for every content line.
template <typename F>
void for_each_record(const std::filesystem::path& path, F&& f) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    f(line_no, split_tabs(line));
  }
}

std::string where(const std::filesystem::path& path, std::size_t line_no) {
  return path.string() + ":" + std::to_string(line_no);
}

}  // namespace

KnowledgeGraph load_kg(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  KnowledgeGraph kg;
  std::unordered_set<Triple, TripleHash> seen;
  for_each_record(path, [&](std::size_t line_no, const std::vector<std::string>& f) {
    if (f.size() != 3 || f[0].empty() || f[1].empty() || f[2].empty()) {
      throw DataError(where(path, line_no) + ": expected 3 tab-separated fields, got " + std::to_string(f.size()));
    }
    const Triple t{kg.entities.intern(f[0]), kg.relations.intern(f[1]), kg.entities.intern(f[2])};
    if (seen.insert(t).second) {
      kg.triples.push_back(t);
    } else {
      if (warnings) warnings->push_back(where(path, line_no) + ": duplicate triple dropped");
    }
  });
  if (kg.triples.empty()) throw DataError(path.string() + ": a knowledge graph needs at least one triple");
  return kg;
}

void save_kg(const KnowledgeGraph& kg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& t : kg.triples) {
    out << kg.entities.name(t.head) << '\t' << kg.relations.name(t.relation) << '\t' << kg.entities.name(t.tail)
        << '\n';
  }
}

AlignmentSeeds load_links(const std::filesystem::path& path, const KnowledgeGraph& source,
                          const KnowledgeGraph& target) {
  AlignmentSeeds seeds;
  std::unordered_set<EntityId> used_source;
  std::unordered_set<EntityId> used_target;
  for_each_record(path, [&](std::size_t line_no, const std::vector<std::string>& f) {
    if (f.size() != 2) {
      throw DataError(where(path, line_no) + ": expected 2 tab-separated fields, got " + std::to_string(f.size()));
    }
    const auto s = source.entities.find(f[0]);
    if (!s) throw DataError(where(path, line_no) + ": unknown source entity '" + f[0] + "'");
    const auto t = target.entities.find(f[1]);
    if (!t) throw DataError(where(path, line_no) + ": unknown target entity '" + f[1] + "'");
    if (!used_source.insert(*s).second) {
      throw DataError(where(path, line_no) + ": source entity '" + f[0] + "' repeated in links");
    }
    if (!used_target.insert(*t).second) {
      throw DataError(where(path, line_no) + ": target entity '" + f[1] + "' repeated in links");
    }
    seeds.pairs.push_back({*s, *t});
  });
  return seeds;
}

void save_links(const AlignmentSeeds& seeds, const KnowledgeGraph& source, const KnowledgeGraph& target,
                const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& p : seeds.pairs) out << source.entities.name(p.source) << '\t' << target.entities.name(p.target) << '\n';
}

std::vector<EntityId> load_entity_list(const std::filesystem::path& path, const KnowledgeGraph& kg) {
  std::vector<EntityId> ids;
  std::unordered_set<EntityId> seen;
  for_each_record(path, [&](std::size_t line_no, const std::vector<std::string>& f) {
    if (f.size() != 1) throw DataError(where(path, line_no) + ": expected a single entity per line");
    const auto id = kg.entities.find(f[0]);
    if (!id) throw DataError(where(path, line_no) + ": unknown entity '" + f[0] + "'");
    if (!seen.insert(*id).second) throw DataError(where(path, line_no) + ": entity '" + f[0] + "' listed twice");
    ids.push_back(*id);
  });
  return ids;
}

void save_entity_list(const std::vector<EntityId>& ids, const KnowledgeGraph& kg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (EntityId id : ids) out << kg.entities.name(id) << '\n';
}

DanglingLabels make_dangling_labels(const AlignmentSeeds& seeds, const std::vector<EntityId>& dangling,
                                    const KnowledgeGraph& source) {
  DanglingLabels labels;
  for (const auto& p : seeds.pairs) labels.matchable.insert(p.source);
  for (EntityId id : dangling) {
    if (id >= source.entity_count()) throw DataError("dangling id " + std::to_string(id) + " outside source KG");
    if (labels.matchable.count(id)) {
      throw DataError("entity '" + source.entities.name(id) + "' is both dangling and a seed source");
    }
    labels.dangling.insert(id);
  }
  return labels;
}

namespace {

template <typename T>
void cut(std::vector<T> items, const SplitRatios& r, Rng rng, std::vector<T>& train, std::vector<T>& val,
         std::vector<T>& test) {
  std::shuffle(items.begin(), items.end(), rng.engine());
  const std::size_t n = items.size();
  const auto n_train = static_cast<std::size_t>(std::floor(r.train * double(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(r.validation * double(n)));
  train.assign(items.begin(), items.begin() + n_train);
  val.assign(items.begin() + n_train, items.begin() + n_train + n_val);
  test.assign(items.begin() + n_train + n_val, items.end());
}

}  // namespace

DatasetSplit split_dataset(const AlignmentSeeds& seeds, const std::vector<EntityId>& dangling,
                           const SplitRatios& ratios, std::uint64_t rng_seed) {
  for (double r : {ratios.train, ratios.validation, ratios.test}) {
    if (!(r >= 0.0 && r <= 1.0)) throw UsageError("split ratio " + std::to_string(r) + " outside [0, 1]");
  }
  if (std::abs(ratios.train + ratios.validation + ratios.test - 1.0) > 1e-9) {
    throw UsageError("split ratios must sum to 1");
  }
  if (seeds.pairs.empty() || dangling.empty()) throw DataError("split needs non-empty seeds and dangling sets");
  const Rng rng(rng_seed);
  Partition train, val, test;
  cut(seeds.pairs, ratios, rng.split(1), train.seeds, val.seeds, test.seeds);
  cut(dangling, ratios, rng.split(2), train.dangling, val.dangling, test.dangling);
  return DatasetSplit(std::move(train), std::move(val), std::move(test));
}

Dataset load_dataset(const std::filesystem::path& dir, std::vector<std::string>* warnings) {
  Dataset d;
  d.source = load_kg(dir / "source_triples.tsv", warnings);
  d.target = load_kg(dir / "target_triples.tsv", warnings);
  d.seeds = load_links(dir / "links.tsv", d.source, d.target);
  d.source_dangling = load_entity_list(dir / "source_dangling.tsv", d.source);
  make_dangling_labels(d.seeds, d.source_dangling, d.source);
  if (std::filesystem::exists(dir / "target_dangling.tsv")) {
    d.target_dangling = load_entity_list(dir / "target_dangling.tsv", d.target);
    std::unordered_set<EntityId> seed_targets;
    for (const auto& p : d.seeds.pairs) seed_targets.insert(p.target);
    for (EntityId id : d.target_dangling) {
      if (seed_targets.count(id)) {
        throw DataError("target entity '" + d.target.entities.name(id) + "' is both dangling and a seed target");
      }
    }
  }
  return d;
}

}  // namespace mhp
