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

#include "mhp/ot.hpp"

#include <algorithm>
#include <numeric>

namespace mhp {

Critic make_critic(std::size_t dim, std::size_t hidden, double clip, Rng& rng) {
  require(clip > 0.0, "critic clip bound must be positive");
  Critic critic;
  critic.clip = clip;
  if (hidden == 0) {
    critic.net = make_net({dim, 1}, {Activation::kIdentity}, rng);
  } else {
    critic.net = make_net({dim, hidden, 1}, {Activation::kRelu, Activation::kIdentity}, rng);
  }
  clip_weights(critic);
  return critic;
}

template <typename T>
void clip_weights(FeedForwardNet<T>& net, double bound) {
  const T lo = static_cast<T>(-bound);
  const T hi = static_cast<T>(bound);
  net.for_each_parameter([&](std::span<T> values) {
    for (T& v : values) v = std::clamp(v, lo, hi);
  });
}

void clip_weights(Critic& critic) { clip_weights(critic.net, critic.clip); }

namespace {

template <typename T>
Matrix<T> apply_mapper(const Mapper<T>& mapper, const Matrix<T>& rows) {
  return map_rows(mapper.m, rows);
}

template <typename T>
Matrix<T> constant_grad(std::size_t n, double value) {
  return Matrix<T>(n, 1, static_cast<T>(value));
}

template <typename T>
double mean_output(const Matrix<T>& out) {
  return sum(out.values()) / double(out.rows());
}

template <typename T>
void accumulate(NetGradients<T>& into, const NetGradients<T>& from) {
  for (std::size_t l = 0; l < into.weight.size(); ++l) {
    auto a = into.weight[l].values();
    auto b = from.weight[l].values();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    for (std::size_t i = 0; i < into.bias[l].size(); ++i) into.bias[l][i] += from.bias[l][i];
  }
}

// d loss / d M given d loss / d (M x) rows.
template <typename T>
Matrix<T> mapper_grad(const Matrix<T>& input_grad, const Matrix<T>& raw_rows) {
  const std::size_t dim = input_grad.cols();
  Matrix<double> g(dim, raw_rows.cols());
  for (std::size_t s = 0; s < raw_rows.rows(); ++s) {
    auto x = raw_rows.row(s);
    auto d = input_grad.row(s);
    for (std::size_t r = 0; r < dim; ++r) {
      if (d[r] == T(0)) continue;
      auto gr = g.row(r);
      for (std::size_t c = 0; c < x.size(); ++c) gr[c] += double(d[r]) * double(x[c]);
    }
  }
  return g.template cast<T>();
}

template <typename T>
MapperObjective<T> signed_mapper_objective(const FeedForwardNet<T>& critic, const Mapper<T>& mapper,
                                           const Matrix<T>& batch, double sign) {
  require(batch.rows() > 0, "mapper objective: empty batch");
  const auto mapped = apply_mapper(mapper, batch);
  const auto fwd = forward(critic, mapped);
  const double n = double(batch.rows());
  const auto grads = backward(critic, fwd.cache, constant_grad<T>(batch.rows(), sign / n));
  return {sign * mean_output(fwd.output), mapper_grad(grads.input, batch)};
}

}  // namespace

template <typename T>
CriticObjective<T> critic_objective(const FeedForwardNet<T>& critic, const Mapper<T>& mapper,
                                    const Matrix<T>& source_batch, const Matrix<T>& target_batch) {
  require(source_batch.rows() > 0 && target_batch.rows() > 0, "critic_objective: empty batch");
  const auto fwd_t = forward(critic, target_batch);
  const auto fwd_s = forward(critic, apply_mapper(mapper, source_batch));
  CriticObjective<T> out;
  out.value = mean_output(fwd_t.output) - mean_output(fwd_s.output);
  out.gradients = backward(critic, fwd_t.cache, constant_grad<T>(target_batch.rows(), 1.0 / double(target_batch.rows())), false);
  const auto gs = backward(critic, fwd_s.cache, constant_grad<T>(source_batch.rows(), -1.0 / double(source_batch.rows())), false);
  accumulate(out.gradients, gs);
  return out;
}

template <typename T>
MapperObjective<T> mapper_alignment_objective(const FeedForwardNet<T>& critic, const Mapper<T>& mapper,
                                              const Matrix<T>& source_batch) {
  return signed_mapper_objective(critic, mapper, source_batch, -1.0);
}

template <typename T>
MapperObjective<T> mapper_dangling_objective(const FeedForwardNet<T>& critic, const Mapper<T>& mapper,
                                             const Matrix<T>& dangling_batch) {
  return signed_mapper_objective(critic, mapper, dangling_batch, 1.0);
}

OtState make_ot_state(std::size_t dim, const OtConfig& config, Rng& rng) {
  const AdamConfig adam{config.learning_rate};
  return {make_critic(dim, config.hidden, config.clip, rng), Adam(adam), Adam(adam)};
}

Matrix<float> gather_rows(const Matrix<float>& table, std::span<const EntityId> ids) {
  Matrix<float> out(ids.size(), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto src = table.row(ids[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

std::vector<EntityId> sample_ids(std::span<const EntityId> pool, std::size_t count, Rng& rng) {
  std::vector<EntityId> ids(pool.begin(), pool.end());
  const std::size_t n = std::min(count, ids.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + rng.below(ids.size() - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(n);
  return ids;
}

OtRoundStats ot_round(OtState& state, Mapper<float>& mapper, const OtPools& pools, const OtConfig& config, Rng& rng) {
  require(config.n_critic >= 1, "ot_round: n_critic must be >= 1");
  require(pools.source && pools.target, "ot_round: missing embedding tables");
  require(!pools.matchable_source.empty() && !pools.target_ids.empty(), "ot_round: empty source or target pool");
  OtRoundStats stats;
  auto& net = state.critic.net;
  for (std::size_t it = 0; it < config.n_critic; ++it) {
    const auto src = gather_rows(*pools.source, sample_ids(pools.matchable_source, config.batch_size, rng));
    const auto tgt = gather_rows(*pools.target, sample_ids(pools.target_ids, config.batch_size, rng));
    auto objective = critic_objective(net, mapper, src, tgt);
    // Ascend: hand the optimizer the negated gradient.
    std::vector<std::vector<float>> negated;
    objective.gradients.for_each_parameter([&](std::span<const float> g) {
      negated.emplace_back(g.size());
      std::transform(g.begin(), g.end(), negated.back().begin(), [](float v) { return -v; });
    });
    std::vector<ParamSlot> slots;
    std::size_t idx = 0;
    net.for_each_parameter([&](std::span<float> p) {
      slots.push_back({"critic." + std::to_string(idx), p, negated[idx]});
      ++idx;
    });
    state.critic_optimizer.step(slots);
    clip_weights(state.critic);
    ++stats.critic_steps;
    ++stats.clip_calls;
    stats.dual_estimate = objective.value;
  }

  const auto src = gather_rows(*pools.source, sample_ids(pools.matchable_source, config.batch_size, rng));
  auto align = mapper_alignment_objective(net, mapper, src);
  double loss = align.loss;
  if (config.dangling_repulsion && !pools.dangling.empty()) {
    const auto dang = gather_rows(*pools.source, sample_ids(pools.dangling, config.batch_size, rng));
    const auto repel = mapper_dangling_objective(net, mapper, dang);
    loss += repel.loss;
    auto g = align.mapper.values();
    auto h = repel.mapper.values();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += h[i];
  }
  const ParamSlot slot{"mapper", mapper.m.values(), align.mapper.values()};
  state.mapper_optimizer.step(std::span<const ParamSlot>(&slot, 1));
  stats.mapper_updates = 1;
  stats.mapper_loss = loss;
  return stats;
}

template void clip_weights(FeedForwardNet<float>&, double);
template void clip_weights(FeedForwardNet<double>&, double);
template CriticObjective<float> critic_objective(const FeedForwardNet<float>&, const Mapper<float>&,
                                                 const Matrix<float>&, const Matrix<float>&);
template CriticObjective<double> critic_objective(const FeedForwardNet<double>&, const Mapper<double>&,
                                                  const Matrix<double>&, const Matrix<double>&);
template MapperObjective<float> mapper_alignment_objective(const FeedForwardNet<float>&, const Mapper<float>&,
                                                           const Matrix<float>&);
template MapperObjective<double> mapper_alignment_objective(const FeedForwardNet<double>&, const Mapper<double>&,
                                                            const Matrix<double>&);
template MapperObjective<float> mapper_dangling_objective(const FeedForwardNet<float>&, const Mapper<float>&,
                                                          const Matrix<float>&);
template MapperObjective<double> mapper_dangling_objective(const FeedForwardNet<double>&, const Mapper<double>&,
                                                           const Matrix<double>&);

}  // namespace mhp
