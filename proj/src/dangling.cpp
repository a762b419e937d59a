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

#include "mhp/dangling.hpp"

#include <algorithm>
#include <cmath>

#include "mhp/nn_search.hpp"
#include "mhp/ot.hpp"

namespace mhp {

namespace {

// Accumulates the gradient of scale * |M x - y| into `out`.
template <typename T>
void add_distance_grad(MappedLoss<T>& out, const Mapper<T>& mapper, EntityId sid, EntityId tid,
                       std::span<const T> x, const std::vector<double>& diff, double dist, double scale) {
  if (dist == 0.0 || scale == 0.0) return;
  const std::size_t dim = diff.size();
  auto gs = out.source.row(sid);
  auto gt = out.target.row(tid);
  for (std::size_t r = 0; r < dim; ++r) {
    const double g = scale * diff[r] / dist;
    auto gm = out.mapper.row(r);
    auto mr = mapper.m.row(r);
    for (std::size_t c = 0; c < dim; ++c) {
      gm[c] += static_cast<T>(g * double(x[c]));
      gs[c] += static_cast<T>(g * double(mr[c]));
    }
    gt[r] -= static_cast<T>(g);
  }
}

template <typename T>
double mapped_distance(const Mapper<T>& mapper, std::span<const T> x, std::span<const T> y, std::vector<double>& diff) {
  diff = matvec(mapper.m, x);
  double acc = 0.0;
  for (std::size_t k = 0; k < diff.size(); ++k) {
    diff[k] -= double(y[k]);
    acc += diff[k] * diff[k];
  }
  return std::sqrt(acc);
}

template <typename T>
MappedLoss<T> empty_loss(const Mapper<T>& mapper, const Matrix<T>& source, const Matrix<T>& target) {
  const std::size_t dim = mapper.m.rows();
  return {0.0, Matrix<T>(dim, dim), Matrix<T>(source.rows(), source.cols()), Matrix<T>(target.rows(), target.cols())};
}

}  // namespace

template <typename T>
MappedLoss<T> mr_loss(const Mapper<T>& mapper, std::span<const EntityId> dangling,
                      std::span<const EntityId> nearest_targets, const Matrix<T>& source, const Matrix<T>& target,
                      double margin) {
  require(dangling.size() == nearest_targets.size(), "mr_loss: one nearest target per dangling entity");
  auto out = empty_loss(mapper, source, target);
  if (dangling.empty()) return out;
  const double scale = 1.0 / double(dangling.size());
  std::vector<double> diff;
  for (std::size_t i = 0; i < dangling.size(); ++i) {
    const auto x = source.row(dangling[i]);
    const double dist = mapped_distance(mapper, x, target.row(nearest_targets[i]), diff);
    const double hinge = margin - dist;
    if (hinge <= 0.0) continue;
    out.loss += scale * hinge;
    add_distance_grad(out, mapper, dangling[i], nearest_targets[i], x, diff, dist, -scale);
  }
  return out;
}

std::vector<EntityId> sample_background(std::size_t n_dangling, std::size_t per_entity, std::size_t n_targets,
                                        Rng& rng) {
  std::vector<EntityId> ids(n_dangling * per_entity);
  for (auto& id : ids) id = static_cast<EntityId>(rng.below(n_targets));
  return ids;
}

template <typename T>
MappedLoss<T> br_loss(const Mapper<T>& mapper, std::span<const EntityId> dangling,
                      std::span<const EntityId> sampled_targets, std::size_t per_entity, const Matrix<T>& source,
                      const Matrix<T>& target, double margin) {
  require(per_entity >= 1, "br_loss: need at least one background sample");
  require(sampled_targets.size() == dangling.size() * per_entity, "br_loss: samples do not match batch");
  auto out = empty_loss(mapper, source, target);
  if (dangling.empty()) return out;
  const double scale = 1.0 / double(sampled_targets.size());
  std::vector<double> diff;
  for (std::size_t i = 0; i < dangling.size(); ++i) {
    const auto x = source.row(dangling[i]);
    for (std::size_t j = 0; j < per_entity; ++j) {
      const EntityId v = sampled_targets[i * per_entity + j];
      const double dist = mapped_distance(mapper, x, target.row(v), diff);
      const double dev = dist - margin;
      out.loss += scale * std::abs(dev);
      const double sign = dev > 0.0 ? 1.0 : (dev < 0.0 ? -1.0 : 0.0);
      add_distance_grad(out, mapper, dangling[i], v, x, diff, dist, sign * scale);
    }
  }
  return out;
}

std::vector<double> ProximityFeature::values() const {
  std::vector<double> v(d1);
  v.insert(v.end(), d2.begin(), d2.end());
  return v;
}

namespace {

void check_feature_args(std::size_t k, std::size_t m, const Matrix<float>& source, const Matrix<float>& target) {
  require(k >= 1 && m >= 1, "build_feature: k and m must be >= 1");
  require(k <= target.rows(), "build_feature: k exceeds the number of targets");
  require(m <= source.rows(), "build_feature: m exceeds the number of sources");
}

}  // namespace

ProximityFeature build_feature(EntityId source_id, const Mapper<float>& mapper, const Matrix<float>& source,
                               const Matrix<float>& target, std::size_t k, std::size_t m) {
  const auto rows = build_features(std::span<const EntityId>(&source_id, 1), mapper, source, target, k, m);
  ProximityFeature f;
  auto r = rows.row(0);
  f.d1.assign(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(k));
  f.d2.assign(r.begin() + static_cast<std::ptrdiff_t>(k), r.end());
  return f;
}

Matrix<float> build_features(std::span<const EntityId> sources, const Mapper<float>& mapper,
                             const Matrix<float>& source, const Matrix<float>& target, std::size_t k, std::size_t m) {
  check_feature_args(k, m, source, target);
  const auto mapped = map_rows(mapper.m, source);
  const auto queries = gather_rows(mapped, sources);
  const auto first = nn::top_k(queries, target, k);

  // Reverse search only for the targets some query actually retrieved.
  std::vector<EntityId> needed;
  for (const auto& list : first) {
    for (const auto& nb : list.neighbors) needed.push_back(nb.id);
  }
  std::sort(needed.begin(), needed.end());
  needed.erase(std::unique(needed.begin(), needed.end()), needed.end());
  const auto reverse = nn::top_k(gather_rows(target, needed), mapped, m);
  std::vector<std::size_t> slot(target.rows(), 0);
  for (std::size_t i = 0; i < needed.size(); ++i) slot[needed[i]] = i;

  Matrix<float> out(sources.size(), k * (1 + m));
#pragma omp parallel for schedule(static)
  for (std::size_t q = 0; q < sources.size(); ++q) {
    auto row = out.row(q);
    const auto& nbs = first[q].neighbors;
    for (std::size_t j = 0; j < k; ++j) {
      row[j] = static_cast<float>(nbs[j].similarity);
      const auto& back = reverse[slot[nbs[j].id]].neighbors;
      for (std::size_t i = 0; i < m; ++i) row[k + j * m + i] = static_cast<float>(back[i].similarity);
    }
  }
  return out;
}

namespace reference {

Matrix<float> build_features(std::span<const EntityId> sources, const Mapper<float>& mapper,
                             const Matrix<float>& source, const Matrix<float>& target, std::size_t k, std::size_t m) {
  check_feature_args(k, m, source, target);
  const auto mapped = map_rows(mapper.m, source);
  Matrix<float> out(sources.size(), k * (1 + m));
  for (std::size_t q = 0; q < sources.size(); ++q) {
    const auto query = gather_rows(mapped, std::span<const EntityId>(&sources[q], 1));
    const auto first = nn::reference::top_k(query, target, k).front().neighbors;
    for (std::size_t j = 0; j < k; ++j) {
      out(q, j) = static_cast<float>(first[j].similarity);
      const EntityId t = first[j].id;
      const auto back = nn::reference::top_k(gather_rows(target, std::span<const EntityId>(&t, 1)), mapped, m);
      for (std::size_t i = 0; i < m; ++i) out(q, k + j * m + i) = static_cast<float>(back.front().neighbors[i].similarity);
    }
  }
  return out;
}

}  // namespace reference

Net make_classifier(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  return make_net({input_dim, hidden, 1}, {Activation::kRelu, Activation::kSigmoid}, rng);
}

template <typename T>
ClassifierLoss<T> classifier_loss(const FeedForwardNet<T>& classifier, const Matrix<T>& features,
                                  std::span<const std::uint8_t> labels) {
  require(features.rows() == labels.size(), "classifier_loss: one label per feature row");
  require(!labels.empty(), "classifier_loss: empty batch");
  constexpr double kLo = 1e-7;
  constexpr double kHi = 1.0 - 1e-7;
  const auto fwd = forward(classifier, features);
  const double n = double(labels.size());
  Matrix<T> grad(labels.size(), 1);
  ClassifierLoss<T> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] <= 1, "classifier_loss: labels must be 0 or 1");
    const double raw = double(fwd.output(i, 0));
    const double p = std::clamp(raw, kLo, kHi);
    const double y = labels[i];
    out.loss -= (y * std::log(p) + (1.0 - y) * std::log(1.0 - p)) / n;
    if (raw > kLo && raw < kHi) grad(i, 0) = static_cast<T>(-(y / p - (1.0 - y) / (1.0 - p)) / n);
  }
  out.gradients = backward(classifier, fwd.cache, grad);
  return out;
}

std::vector<double> predict(const Net& classifier, const Matrix<float>& features) {
  const auto fwd = forward(classifier, features);
  std::vector<double> p(features.rows());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = fwd.output(i, 0);
  return p;
}

Decisions decide(std::span<const double> probabilities, ThresholdPolicy) {
  require(!probabilities.empty(), "decide: empty evaluation set");
  Decisions d;
  d.threshold = sum(probabilities) / double(probabilities.size());
  d.probability.assign(probabilities.begin(), probabilities.end());
  d.dangling.resize(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) d.dangling[i] = probabilities[i] > d.threshold;
  return d;
}

Decisions decide(const Net& classifier, const Matrix<float>& features, ThresholdPolicy policy) {
  const auto p = predict(classifier, features);
  return decide(p, policy);
}

template MappedLoss<float> mr_loss(const Mapper<float>&, std::span<const EntityId>, std::span<const EntityId>,
                                   const Matrix<float>&, const Matrix<float>&, double);
template MappedLoss<double> mr_loss(const Mapper<double>&, std::span<const EntityId>, std::span<const EntityId>,
                                    const Matrix<double>&, const Matrix<double>&, double);
template MappedLoss<float> br_loss(const Mapper<float>&, std::span<const EntityId>, std::span<const EntityId>,
                                   std::size_t, const Matrix<float>&, const Matrix<float>&, double);
template MappedLoss<double> br_loss(const Mapper<double>&, std::span<const EntityId>, std::span<const EntityId>,
                                    std::size_t, const Matrix<double>&, const Matrix<double>&, double);
template ClassifierLoss<float> classifier_loss(const FeedForwardNet<float>&, const Matrix<float>&,
                                               std::span<const std::uint8_t>);
template ClassifierLoss<double> classifier_loss(const FeedForwardNet<double>&, const Matrix<double>&,
                                                std::span<const std::uint8_t>);

}  // namespace mhp
