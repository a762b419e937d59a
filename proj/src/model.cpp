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

#include "mhp/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mhp/error.hpp"
#include "mhp/nn_search.hpp"

namespace mhp {

std::string to_string(DanglingLoss loss) { return loss == DanglingLoss::kMarginRanking ? "mr" : "br"; }

DanglingLoss dangling_loss_from_string(const std::string& name) {
  if (name == "mr") return DanglingLoss::kMarginRanking;
  if (name == "br") return DanglingLoss::kBackgroundRanking;
  throw UsageError("unknown dangling loss '" + name + "' (expected mr or br)");
}

ModelState init_model(const TrainingData& data, const ModelConfig& config) {
  require(config.dim >= 1, "model dim must be >= 1");
  Rng rng = Rng(config.seed).split(7001);
  ModelState s;
  s.source = init_embeddings(data.source_entities, data.source_relations, config.dim, rng);
  s.target = init_embeddings(data.target_entities, data.target_relations, config.dim, rng);
  s.mapper.m = xavier_init(config.dim, config.dim, rng);
  s.ot = make_ot_state(config.dim, config.ot, rng);
  s.classifier = make_classifier(config.detect.feature_dim(), config.detect.classifier_hidden, rng);
  const AdamConfig base{config.learning_rate};
  s.source_triple_opt = Adam(base);
  s.target_triple_opt = Adam(base);
  s.mapping_opt = Adam(base);
  s.nca_opt = Adam(base);
  s.dangling_opt = Adam(base);
  s.classifier_opt = Adam(base);
  return s;
}

namespace {

template <typename T>
std::vector<T> shuffled(std::span<const T> items, Rng& rng) {
  std::vector<T> v(items.begin(), items.end());
  std::shuffle(v.begin(), v.end(), rng.engine());
  return v;
}

// Batch sizes shrink on small data so that an epoch still takes at least
// `min_batches` steps.
std::size_t effective_batch(std::size_t configured, std::size_t n, std::size_t min_batches) {
  const std::size_t scaled = (n + min_batches - 1) / std::max<std::size_t>(1, min_batches);
  return std::max<std::size_t>(1, std::min(configured, scaled));
}

// Calls f(batch) over consecutive chunks; returns the number of batches.
template <typename T, typename F>
std::size_t for_each_batch(const std::vector<T>& items, std::size_t batch_size, F&& f) {
  const std::size_t step = std::max<std::size_t>(1, std::min(batch_size, items.size()));
  std::size_t batches = 0;
  for (std::size_t start = 0; start < items.size(); start += step) {
    const std::size_t end = std::min(items.size(), start + step);
    f(std::span<const T>(items.data() + start, end - start));
    ++batches;
  }
  return batches;
}

void check_loss(double value, const char* what) {
  if (!std::isfinite(value)) throw NumericError(std::string("non-finite ") + what);
}

// Applies a mapped-loss gradient to the mapper and, unless frozen, both
// entity tables.
void apply_mapped(Adam& opt, ModelState& s, const MappedLoss<float>& g, bool freeze_entities) {
  std::vector<ParamSlot> slots{{"mapper", s.mapper.m.values(), g.mapper.values()}};
  if (!freeze_entities) {
    slots.push_back({"source.entities", s.source.entities.values(), g.source.values()});
    slots.push_back({"target.entities", s.target.entities.values(), g.target.values()});
  }
  opt.step(slots);
  if (!freeze_entities) {
    clip_entity_norms(s.source.entities);
    clip_entity_norms(s.target.entities);
  }
}

double train_triples(EmbeddingTable<float>& table, Adam& opt, std::span<const Triple> triples,
                     const ModelConfig& config, Rng rng) {
  if (triples.empty()) return 0.0;
  const auto order = shuffled(triples, rng);
  double total = 0.0;
  const std::size_t batches = for_each_batch(order, effective_batch(config.triple_batch, order.size(), config.min_batches), [&](std::span<const Triple> batch) {
    const auto negatives = sample_negatives(batch, config.negatives, table.entities.rows(), rng);
    const auto loss = triple_loss(table, batch, negatives, config.negatives, config.triple_margin);
    check_loss(loss.loss, "triple loss");
    total += loss.loss;
    const ParamSlot slots[] = {{"entities", table.entities.values(), loss.entities.values()},
                               {"relations", table.relations.values(), loss.relations.values()}};
    opt.step(slots);
    clip_entity_norms(table.entities);
  });
  return total / double(batches);
}

}  // namespace

EpochStats train_alignment_epoch(ModelState& s, const TrainingData& data, const ModelConfig& config,
                                 std::size_t epoch) {
  const Rng base = Rng(config.seed).split(1000003 * (epoch + 1));
  EpochStats stats;
  const double t_src = train_triples(s.source, s.source_triple_opt, data.source_triples, config, base.split(1));
  const double t_tgt = train_triples(s.target, s.target_triple_opt, data.target_triples, config, base.split(2));
  stats.triple_loss = 0.5 * (t_src + t_tgt);

  if (!data.seeds.empty()) {
    Rng rng = base.split(3);
    const auto order = shuffled(std::span<const SeedPair>(data.seeds), rng);
    double total = 0.0;
    const std::size_t batches = for_each_batch(order, effective_batch(config.mapping_batch, order.size(), config.min_batches), [&](std::span<const SeedPair> batch) {
      const auto loss = mapping_loss(s.mapper, batch, s.source.entities, s.target.entities);
      check_loss(loss.loss, "mapping loss");
      total += loss.loss;
      apply_mapped(s.mapping_opt, s, loss, config.freeze_entities_in_mapping);
    });
    stats.mapping_loss = total / double(batches);
  }

  if (config.use_ot && !data.seeds.empty() && !data.target_ids.empty()) {
    Rng rng = base.split(4);
    std::vector<EntityId> matchable;
    for (const auto& p : data.seeds) matchable.push_back(p.source);
    const OtPools pools{&s.source.entities, &s.target.entities, matchable, data.target_ids, data.dangling};
    for (std::size_t r = 0; r < config.ot_rounds; ++r) {
      const auto round = ot_round(s.ot, s.mapper, pools, config.ot, rng);
      check_loss(round.mapper_loss, "OT mapper loss");
      stats.ot_dual = round.dual_estimate;
      stats.ot_mapper_loss = round.mapper_loss;
      stats.ot_clip_calls += round.clip_calls;
    }
  }

  if (config.use_nca && data.seeds.size() >= 1) {
    Rng rng = base.split(5);
    const auto order = shuffled(std::span<const SeedPair>(data.seeds), rng);
    double total = 0.0;
    const std::size_t batches = for_each_batch(order, effective_batch(config.nca_batch, order.size(), config.min_batches), [&](std::span<const SeedPair> batch) {
      const auto loss = nca_alignment_loss(s.mapper, batch, s.source.entities, s.target.entities, config.nca);
      check_loss(loss.loss, "NCA loss");
      total += loss.loss;
      apply_mapped(s.nca_opt, s, loss, config.freeze_entities_in_mapping);
    });
    stats.nca_loss = total / double(batches);
  }
  return stats;
}

void train_detection_epoch(ModelState& s, const TrainingData& data, const ModelConfig& config, std::size_t epoch,
                           EpochStats& stats) {
  const Rng base = Rng(config.seed).split(2000003 * (epoch + 1));
  if (!data.dangling.empty()) {
    Rng rng = base.split(1);
    const auto order = shuffled(std::span<const EntityId>(data.dangling), rng);
    double total = 0.0;
    const std::size_t batches = for_each_batch(order, effective_batch(config.dangling_batch, order.size(), config.min_batches), [&](std::span<const EntityId> batch) {
      MappedLoss<float> loss;
      if (config.dangling_loss == DanglingLoss::kMarginRanking) {
        const auto nearest_ids =
            nn::nearest(map_rows(s.mapper.m, gather_rows(s.source.entities, batch)), s.target.entities);
        loss = mr_loss(s.mapper, batch, nearest_ids, s.source.entities, s.target.entities, config.detect.margin);
      } else {
        const auto samples =
            sample_background(batch.size(), config.detect.br_samples, s.target.entities.rows(), rng);
        loss = br_loss(s.mapper, batch, samples, config.detect.br_samples, s.source.entities, s.target.entities,
                       config.detect.margin);
      }
      check_loss(loss.loss, "dangling loss");
      total += loss.loss;
      apply_mapped(s.dangling_opt, s, loss, config.freeze_entities_in_detection);
    });
    stats.dangling_loss = total / double(batches);
  }

  if (config.use_classifier && !data.seeds.empty() && !data.dangling.empty()) {
    Rng rng = base.split(2);
    std::vector<EntityId> ids;
    std::vector<std::uint8_t> labels;
    for (const auto& p : data.seeds) {
      ids.push_back(p.source);
      labels.push_back(0);
    }
    for (EntityId d : data.dangling) {
      ids.push_back(d);
      labels.push_back(1);
    }
    const auto features =
        build_features(ids, s.mapper, s.source.entities, s.target.entities, config.detect.k, config.detect.m);
    std::vector<std::size_t> all(ids.size());
    std::iota(all.begin(), all.end(), 0);
    double total = 0.0;
    for (std::size_t step = 0; step < config.classifier_steps; ++step) {
      std::shuffle(all.begin(), all.end(), rng.engine());
      const std::size_t n = effective_batch(config.classifier_batch, all.size(), config.min_batches);
      Matrix<float> batch(n, features.cols());
      std::vector<std::uint8_t> batch_labels(n);
      for (std::size_t i = 0; i < n; ++i) {
        auto src = features.row(all[i]);
        std::copy(src.begin(), src.end(), batch.row(i).begin());
        batch_labels[i] = labels[all[i]];
      }
      const auto loss = classifier_loss(s.classifier, batch, batch_labels);
      check_loss(loss.loss, "classifier loss");
      total += loss.loss;
      std::vector<ParamSlot> slots;
      std::size_t idx = 0;
      std::vector<std::span<const float>> grads;
      loss.gradients.for_each_parameter([&](std::span<const float> g) { grads.push_back(g); });
      s.classifier.for_each_parameter([&](std::span<float> p) {
        slots.push_back({"classifier." + std::to_string(idx), p, grads[idx]});
        ++idx;
      });
      s.classifier_opt.step(slots);
    }
    if (config.classifier_steps > 0) stats.classifier_loss = total / double(config.classifier_steps);
  }
}

std::vector<double> nearest_distance_scores(const ModelState& s, std::span<const EntityId> sources) {
  const auto mapped = map_rows(s.mapper.m, gather_rows(s.source.entities, sources));
  const auto nearest_ids = nn::nearest(mapped, s.target.entities);
  std::vector<double> scores(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    auto u = mapped.row(i);
    auto v = s.target.entities.row(nearest_ids[i]);
    double acc = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      const double d = double(u[k]) - double(v[k]);
      acc += d * d;
    }
    scores[i] = std::sqrt(acc);
  }
  return scores;
}

DetectorKind default_detector(const ModelConfig& config) {
  return config.use_classifier ? DetectorKind::kClassifier : DetectorKind::kNearestDistance;
}

Decisions detect(const ModelState& s, const ModelConfig& config, std::span<const EntityId> sources,
                 DetectorKind kind) {
  if (kind == DetectorKind::kClassifier) {
    const auto features =
        build_features(sources, s.mapper, s.source.entities, s.target.entities, config.detect.k, config.detect.m);
    return decide(s.classifier, features);
  }
  return decide(nearest_distance_scores(s, sources));
}

namespace {

std::string join_activations(const Net& net) {
  std::string out;
  for (const auto& l : net.layers) {
    if (!out.empty()) out += ',';
    out += to_string(l.activation);
  }
  return out;
}

void add_net(Checkpoint& c, const std::string& prefix, const Net& net) {
  c.set_meta(prefix + ".activations", join_activations(net));
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    c.add(prefix + "." + std::to_string(i) + ".weight", l.weight);
    DenseMatrix bias(1, l.bias.size());
    std::copy(l.bias.begin(), l.bias.end(), bias.values().begin());
    c.add(prefix + "." + std::to_string(i) + ".bias", bias);
  }
}

Net read_net(const Checkpoint& c, const std::string& prefix) {
  Net net;
  std::istringstream acts(c.meta(prefix + ".activations"));
  std::string name;
  std::size_t i = 0;
  while (std::getline(acts, name, ',')) {
    const auto& w = c.get(prefix + "." + std::to_string(i) + ".weight");
    const auto& b = c.get(prefix + "." + std::to_string(i) + ".bias");
    if (b.cols() != w.rows() || (i > 0 && net.layers.back().weight.rows() != w.cols())) {
      throw DataError("checkpoint: inconsistent shapes in " + prefix + " layer " + std::to_string(i));
    }
    net.layers.push_back({w, std::vector<float>(b.values().begin(), b.values().end()), activation_from_string(name)});
    ++i;
  }
  return net;
}

}  // namespace

Checkpoint to_checkpoint(const ModelState& s) {
  Checkpoint c;
  c.set_meta("format", "mhp-model");
  std::ostringstream clip;
  clip.precision(17);
  clip << s.ot.critic.clip;
  c.set_meta("critic.clip", clip.str());
  c.add("source.entities", s.source.entities);
  c.add("source.relations", s.source.relations);
  c.add("target.entities", s.target.entities);
  c.add("target.relations", s.target.relations);
  c.add("mapper", s.mapper.m);
  add_net(c, "critic", s.ot.critic.net);
  add_net(c, "classifier", s.classifier);
  return c;
}

ModelState from_checkpoint(const Checkpoint& c) {
  ModelState s;
  s.source = {c.get("source.entities"), c.get("source.relations")};
  s.target = {c.get("target.entities"), c.get("target.relations")};
  s.mapper.m = c.get("mapper");
  const std::size_t dim = s.mapper.m.rows();
  if (s.mapper.m.cols() != dim || s.source.entities.cols() != dim || s.target.entities.cols() != dim) {
    throw DataError("checkpoint: embedding and mapper dimensions disagree");
  }
  s.ot.critic.net = read_net(c, "critic");
  s.ot.critic.clip = std::stod(c.meta("critic.clip"));
  s.classifier = read_net(c, "classifier");
  return s;
}

}  // namespace mhp
