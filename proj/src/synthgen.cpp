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

#include "mhp/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "mhp/error.hpp"
#include "mhp/rng.hpp"

namespace mhp {

void validate(const SynthConfig& c) {
  if (c.n_matchable < 1) throw UsageError("synth: n_matchable must be >= 1");
  if (c.n_relations < 1) throw UsageError("synth: n_relations must be >= 1");
  if (!(c.avg_degree > 0.0)) throw UsageError("synth: avg_degree must be > 0");
  if (!(c.edge_noise >= 0.0 && c.edge_noise <= 1.0)) throw UsageError("synth: edge_noise must lie in [0, 1]");
  if (!(c.hub_exponent >= 0.0)) throw UsageError("synth: hub_exponent must be >= 0");
  if (!(c.specific_share >= 0.0 && c.specific_share <= 1.0)) {
    throw UsageError("synth: specific_share must lie in [0, 1]");
  }
  if (c.specific_share > 0.0 && c.specific_relations == 0) {
    throw UsageError("synth: specific_share > 0 needs specific_relations >= 1");
  }
}

namespace {

// Node triple among core nodes, indices into the core (not KG ids).
struct Edge {
  std::size_t head;
  std::size_t relation;
  std::size_t tail;
};

std::uint64_t pair_key(std::size_t a, std::size_t b) {
  if (a > b) std::swap(a, b);
  return (std::uint64_t(a) << 32) | std::uint64_t(b);
}

class EndpointSampler {
 public:
  EndpointSampler(std::size_t n, double exponent, Rng& rng) : n_(n) {
    if (exponent <= 0.0) return;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng.engine());
    std::vector<double> weights(n);
    for (std::size_t rank = 0; rank < n; ++rank) weights[order[rank]] = std::pow(double(rank + 1), -exponent);
    cumulative_.resize(n);
    std::partial_sum(weights.begin(), weights.end(), cumulative_.begin());
  }

  std::size_t operator()(Rng& rng) const {
    if (cumulative_.empty()) return rng.below(n_);
    const double u = rng.uniform() * cumulative_.back();
    return std::size_t(std::upper_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin());
  }

 private:
  std::size_t n_;
  std::vector<double> cumulative_;
};

}  // namespace

SynthPair generate(const SynthConfig& config) {
  validate(config);
  const std::size_t n = config.n_matchable;
  const auto target_edges = static_cast<std::size_t>(std::llround(config.avg_degree * double(n) / 2.0));
  const std::size_t capacity = n * (n - 1) / 2;
  if (target_edges > capacity) {
    throw UsageError("synth: avg_degree " + std::to_string(config.avg_degree) + " needs " +
                     std::to_string(target_edges) + " edges but a simple graph on " + std::to_string(n) +
                     " entities holds at most " + std::to_string(capacity));
  }
  if (n > 1 && target_edges < n - 1) {
    throw UsageError("synth: avg_degree too small to connect every matchable entity");
  }

  const Rng root(config.rng_seed);
  Rng core_rng = root.split(1);
  Rng dangling_rng = root.split(2);
  Rng noise_rng = root.split(3);
  Rng label_rng = root.split(4);

  // Core: a random spanning tree, then degree-targeted random edges.
  const EndpointSampler endpoint(n, config.hub_exponent, core_rng);
  std::vector<Edge> core;
  std::unordered_set<std::uint64_t> used_pairs;
  auto add_core = [&](std::size_t a, std::size_t b) {
    if (a == b || !used_pairs.insert(pair_key(a, b)).second) return false;
    const std::size_t rel = core_rng.below(config.n_relations);
    if (core_rng.bernoulli(0.5)) std::swap(a, b);
    core.push_back({a, rel, b});
    return true;
  };
  for (std::size_t i = 1; i < n; ++i) add_core(i, core_rng.below(i));
  std::size_t attempts = 0;
  const std::size_t max_attempts = 200 * target_edges + 1000;
  while (core.size() < target_edges) {
    if (++attempts > max_attempts) throw UsageError("synth: could not place the requested number of core edges");
    add_core(endpoint(core_rng), endpoint(core_rng));
  }

  // Dangling attachments: each dangling entity gets `dangling_degree` triples to distinct core nodes.
  const auto dangling_degree =
      config.dangling_degree > 0
          ? config.dangling_degree
          : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.avg_degree)));
  auto attach = [&](std::size_t count) {
    std::vector<std::vector<Edge>> edges(count);  // head/tail: core index, or n + dangling index
    for (std::size_t d = 0; d < count; ++d) {
      std::unordered_set<std::size_t> neighbours;
      while (edges[d].size() < std::min(dangling_degree, n)) {
        const std::size_t c = endpoint(dangling_rng);
        if (!neighbours.insert(c).second) continue;
        const std::size_t rel = config.specific_share > 0.0 && dangling_rng.bernoulli(config.specific_share)
                                    ? config.n_relations + dangling_rng.below(config.specific_relations)
                                    : dangling_rng.below(config.n_relations);
        if (dangling_rng.bernoulli(0.5)) {
          edges[d].push_back({n + d, rel, c});
        } else {
          edges[d].push_back({c, rel, n + d});
        }
      }
    }
    return edges;
  };
  const auto source_dangling_edges = attach(config.n_dangling_source);
  const auto target_dangling_edges = attach(config.n_dangling_target);

  // Target core copy with rewired tails.
  std::vector<Edge> target_core = core;
  std::vector<std::size_t> degree(n, 0);
  for (const auto& e : target_core) {
    ++degree[e.head];
    ++degree[e.tail];
  }
  const auto n_perturb = static_cast<std::size_t>(std::floor(config.edge_noise * double(target_core.size())));
  std::vector<std::size_t> order(target_core.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), noise_rng.engine());
  std::unordered_set<std::uint64_t> target_pairs = used_pairs;
  std::size_t perturbed = 0;
  for (std::size_t idx : order) {
    if (perturbed == n_perturb) break;
    Edge& e = target_core[idx];
    if (degree[e.tail] < 2 || n < 3) continue;  // keep every core entity present
    for (int tries = 0; tries < 64; ++tries) {
      const std::size_t new_tail = noise_rng.below(n);
      if (new_tail == e.head || new_tail == e.tail || target_pairs.count(pair_key(e.head, new_tail))) continue;
      target_pairs.erase(pair_key(e.head, e.tail));
      target_pairs.insert(pair_key(e.head, new_tail));
      --degree[e.tail];
      ++degree[new_tail];
      e.tail = new_tail;
      ++perturbed;
      break;
    }
  }
  if (perturbed != n_perturb) throw UsageError("synth: edge_noise too high to rewire while keeping entities present");

  // Names. Target core entities get a random relabelling.
  std::vector<std::size_t> relabel(n);
  std::iota(relabel.begin(), relabel.end(), 0);
  std::shuffle(relabel.begin(), relabel.end(), label_rng.engine());

  auto source_name = [&](std::size_t node) {
    return node < n ? "s/e" + std::to_string(node) : "s/d" + std::to_string(node - n);
  };
  auto target_name = [&](std::size_t node) {
    return node < n ? "t/e" + std::to_string(relabel[node]) : "t/d" + std::to_string(node - n);
  };

  SynthPair out;
  out.core_triples = core.size();
  out.perturbed_triples = perturbed;

  auto build = [&](const std::vector<Edge>& core_edges, const std::vector<std::vector<Edge>>& dangling_edges,
                   const auto& name, const std::string& rel_prefix, Rng shuffle_rng) {
    std::vector<Edge> all = core_edges;
    for (const auto& es : dangling_edges) all.insert(all.end(), es.begin(), es.end());
    std::shuffle(all.begin(), all.end(), shuffle_rng.engine());
    KnowledgeGraph kg;
    for (const auto& e : all) {
      kg.triples.push_back({kg.entities.intern(name(e.head)), kg.relations.intern(rel_prefix + std::to_string(e.relation)),
                            kg.entities.intern(name(e.tail))});
    }
    return kg;
  };
  out.source = build(core, source_dangling_edges, source_name, "sr", root.split(5));
  out.target = build(target_core, target_dangling_edges, target_name, "tr", root.split(6));
  if (out.source.triples.empty() || out.target.triples.empty()) {
    throw UsageError("synth: configuration produces an empty knowledge graph");
  }

  for (std::size_t i = 0; i < n; ++i) {
    out.seeds.pairs.push_back({*out.source.entities.find(source_name(i)), *out.target.entities.find(target_name(i))});
  }
  for (std::size_t d = 0; d < config.n_dangling_source; ++d) {
    out.source_dangling.push_back(*out.source.entities.find(source_name(n + d)));
  }
  for (std::size_t d = 0; d < config.n_dangling_target; ++d) {
    out.target_dangling.push_back(*out.target.entities.find(target_name(n + d)));
  }
  return out;
}

void write_synth(const SynthPair& pair, const SynthConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_kg(pair.source, dir / "source_triples.tsv");
  save_kg(pair.target, dir / "target_triples.tsv");
  save_links(pair.seeds, pair.source, pair.target, dir / "links.tsv");
  save_entity_list(pair.source_dangling, pair.source, dir / "source_dangling.tsv");
  save_entity_list(pair.target_dangling, pair.target, dir / "target_dangling.tsv");

  nlohmann::ordered_json meta;
  meta["generator"] = "mhp synth";
  meta["rng_seed"] = config.rng_seed;
  meta["n_matchable"] = config.n_matchable;
  meta["n_dangling_source"] = config.n_dangling_source;
  meta["n_dangling_target"] = config.n_dangling_target;
  meta["n_relations"] = config.n_relations;
  meta["avg_degree"] = config.avg_degree;
  meta["edge_noise"] = config.edge_noise;
  meta["hub_exponent"] = config.hub_exponent;
  meta["dangling_degree"] = config.dangling_degree;
  meta["specific_relations"] = config.specific_relations;
  meta["specific_share"] = config.specific_share;
  meta["source_triples"] = pair.source.triples.size();
  meta["target_triples"] = pair.target.triples.size();
  meta["core_triples"] = pair.core_triples;
  meta["perturbed_triples"] = pair.perturbed_triples;
  std::ofstream out(dir / "meta.json", std::ios::trunc);
  if (!out) throw DataError("cannot write " + (dir / "meta.json").string());
  out << meta.dump(2) << '\n';
}

}  // namespace mhp
