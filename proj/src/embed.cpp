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

#include "mhp/embed.hpp"

#include <algorithm>
#include <cmath>

#include "mhp/ffn.hpp"

namespace mhp {

EmbeddingTable<float> init_embeddings(std::size_t n_entities, std::size_t n_relations, std::size_t dim, Rng& rng) {
  EmbeddingTable<float> table{xavier_init(n_entities, dim, rng), xavier_init(n_relations, dim, rng)};
  clip_entity_norms(table.entities);
  return table;
}

void clip_entity_norms(Matrix<float>& entities) {
  for (std::size_t i = 0; i < entities.rows(); ++i) {
    auto row = entities.row(i);
    const double norm = l2_norm(std::span<const float>(row));
    if (norm > 1.0) {
      for (float& v : row) v = static_cast<float>(double(v) / norm);
    }
  }
}

std::vector<Triple> sample_negatives(std::span<const Triple> batch, std::size_t per_triple, std::size_t n_entities,
                                     Rng& rng) {
  std::vector<Triple> out;
  out.reserve(batch.size() * per_triple);
  for (const auto& t : batch) {
    for (std::size_t j = 0; j < per_triple; ++j) {
      Triple corrupted = t;
      if (rng.bernoulli(0.5)) {
        corrupted.tail = static_cast<EntityId>(rng.below(n_entities));
      } else {
        corrupted.head = static_cast<EntityId>(rng.below(n_entities));
      }
      out.push_back(corrupted);
    }
  }
  return out;
}

namespace {

template <typename T>
std::vector<double> translation(const EmbeddingTable<T>& table, const Triple& t) {
  const std::size_t dim = table.dim();
  std::vector<double> v(dim);
  auto h = table.entities.row(t.head);
  auto r = table.relations.row(t.relation);
  auto tl = table.entities.row(t.tail);
  for (std::size_t k = 0; k < dim; ++k) v[k] = double(h[k]) + double(r[k]) - double(tl[k]);
  return v;
}

double norm(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

template <typename T>
void add_translation_grad(TripleLoss<T>& out, const Triple& t, const std::vector<double>& v, double length,
                          double scale) {
  if (length == 0.0) return;
  auto gh = out.entities.row(t.head);
  auto gr = out.relations.row(t.relation);
  auto gt = out.entities.row(t.tail);
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double g = scale * v[k] / length;
    gh[k] += static_cast<T>(g);
    gr[k] += static_cast<T>(g);
    gt[k] -= static_cast<T>(g);
  }
}

}  // namespace

template <typename T>
TripleLoss<T> triple_loss(const EmbeddingTable<T>& table, std::span<const Triple> batch,
                          std::span<const Triple> negatives, std::size_t per_triple, double margin) {
  require(!batch.empty(), "triple_loss: empty batch");
  require(negatives.size() == batch.size() * per_triple, "triple_loss: negatives do not match batch");
  TripleLoss<T> out{0.0, Matrix<T>(table.entities.rows(), table.dim()), Matrix<T>(table.relations.rows(), table.dim())};
  const double scale = 1.0 / double(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto pos = translation(table, batch[i]);
    const double pos_len = norm(pos);
    for (std::size_t j = 0; j < per_triple; ++j) {
      const Triple& corrupted = negatives[i * per_triple + j];
      const auto neg = translation(table, corrupted);
      const double neg_len = norm(neg);
      const double hinge = margin + pos_len - neg_len;
      if (hinge <= 0.0) continue;
      out.loss += scale * hinge;
      add_translation_grad(out, batch[i], pos, pos_len, scale);
      add_translation_grad(out, corrupted, neg, neg_len, -scale);
    }
  }
  return out;
}

template <typename T>
MappedLoss<T> mapping_loss(const Mapper<T>& mapper, std::span<const SeedPair> pairs, const Matrix<T>& source,
                           const Matrix<T>& target) {
  const std::size_t dim = mapper.m.rows();
  MappedLoss<T> out{0.0, Matrix<T>(dim, dim), Matrix<T>(source.rows(), source.cols()),
                    Matrix<T>(target.rows(), target.cols())};
  if (pairs.empty()) return out;
  const double scale = 1.0 / double(pairs.size());
  for (const auto& p : pairs) {
    const auto x = source.row(p.source);
    const auto y = target.row(p.target);
    auto diff = matvec(mapper.m, x);
    for (std::size_t k = 0; k < dim; ++k) diff[k] -= double(y[k]);
    const double dist = norm(diff);
    out.loss += scale * dist;
    if (dist == 0.0) continue;
    auto gs = out.source.row(p.source);
    auto gt = out.target.row(p.target);
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
  return out;
}

namespace {

// log(1 + sum_i exp(a_i)) and the softmax weights exp(a_i) / (1 + sum).
double log1p_sum_exp(const std::vector<double>& a, std::vector<double>& weights) {
  double mx = 0.0;
  for (double v : a) mx = std::max(mx, v);
  double acc = std::exp(-mx);
  for (double v : a) acc += std::exp(v - mx);
  const double lse = mx + std::log(acc);
  weights.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) weights[i] = std::exp(a[i] - lse);
  return lse;
}

}  // namespace

NcaResult nca_loss(const Matrix<double>& s, const NcaConfig& config) {
  require(s.rows() == s.cols(), "nca_loss: similarity matrix must be square");
  require(s.rows() >= 1, "nca_loss: empty batch");
  require(config.alpha > 0.0 && config.beta > 0.0, "nca_loss: alpha and beta must be positive");
  const std::size_t n = s.rows();
  const double alpha = config.alpha;
  const double inv_n = 1.0 / double(n);
  NcaResult out{0.0, Matrix<double>(n, n)};
  std::vector<double> a, w;
  for (std::size_t i = 0; i < n; ++i) {
    a.clear();
    for (std::size_t m = 0; m < n; ++m) {
      if (m != i) a.push_back(alpha * s(i, m));
    }
    double term = log1p_sum_exp(a, w) / alpha;
    for (std::size_t m = 0, idx = 0; m < n; ++m) {
      if (m != i) out.grad(i, m) += inv_n * w[idx++];
    }

    a.clear();
    for (std::size_t r = 0; r < n; ++r) {
      if (r != i) a.push_back(alpha * s(r, i));
    }
    term += log1p_sum_exp(a, w) / alpha;
    for (std::size_t r = 0, idx = 0; r < n; ++r) {
      if (r != i) out.grad(r, i) += inv_n * w[idx++];
    }

    // log(1 + beta e^{S_ii}) = softplus(S_ii + log beta)
    const double z = s(i, i) + std::log(config.beta);
    const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    term -= softplus;
    out.grad(i, i) -= inv_n / (1.0 + std::exp(-z));
    out.loss += inv_n * term;
  }
  return out;
}

namespace {

template <typename T>
Matrix<double> mapped_rows(const Mapper<T>& mapper, std::span<const SeedPair> pairs, const Matrix<T>& source) {
  Matrix<double> u(pairs.size(), mapper.m.rows());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto y = matvec(mapper.m, source.row(pairs[i].source));
    std::copy(y.begin(), y.end(), u.row(i).begin());
  }
  return u;
}

}  // namespace

template <typename T>
Matrix<double> batch_similarity(const Mapper<T>& mapper, std::span<const SeedPair> pairs, const Matrix<T>& source,
                                const Matrix<T>& target) {
  const auto u = mapped_rows(mapper, pairs, source);
  const std::size_t n = pairs.size();
  std::vector<double> un(n), vn(n);
  for (std::size_t i = 0; i < n; ++i) {
    un[i] = l2_norm(u.row(i));
    vn[i] = l2_norm(target.row(pairs[i].target));
  }
  Matrix<double> s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      s(i, j) = std::clamp(dot(u.row(i), target.row(pairs[j].target)) / (un[i] * vn[j]), -1.0, 1.0);
    }
  }
  return s;
}

template <typename T>
MappedLoss<T> batch_similarity_backward(const Mapper<T>& mapper, std::span<const SeedPair> pairs,
                                        const Matrix<T>& source, const Matrix<T>& target,
                                        const Matrix<double>& similarity_grad) {
  const std::size_t n = pairs.size();
  const std::size_t dim = mapper.m.rows();
  require(similarity_grad.rows() == n && similarity_grad.cols() == n, "batch_similarity_backward: shape mismatch");
  const auto u = mapped_rows(mapper, pairs, source);
  std::vector<double> un(n), vn(n);
  for (std::size_t i = 0; i < n; ++i) {
    un[i] = l2_norm(u.row(i));
    vn[i] = l2_norm(target.row(pairs[i].target));
  }
  Matrix<double> du(n, dim), dv(n, dim);
  for (std::size_t i = 0; i < n; ++i) {
    auto ui = u.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double g = similarity_grad(i, j);
      if (g == 0.0) continue;
      auto vj = target.row(pairs[j].target);
      const double inv = 1.0 / (un[i] * vn[j]);
      const double c = dot(ui, vj) * inv;
      auto dui = du.row(i);
      auto dvj = dv.row(j);
      for (std::size_t k = 0; k < dim; ++k) {
        dui[k] += g * (double(vj[k]) * inv - c * ui[k] / (un[i] * un[i]));
        dvj[k] += g * (ui[k] * inv - c * double(vj[k]) / (vn[j] * vn[j]));
      }
    }
  }
  MappedLoss<T> out{0.0, Matrix<T>(dim, dim), Matrix<T>(source.rows(), source.cols()),
                    Matrix<T>(target.rows(), target.cols())};
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = source.row(pairs[i].source);
    auto gs = out.source.row(pairs[i].source);
    auto gt = out.target.row(pairs[i].target);
    for (std::size_t r = 0; r < dim; ++r) {
      const double g = du(i, r);
      auto gm = out.mapper.row(r);
      auto mr = mapper.m.row(r);
      for (std::size_t c = 0; c < dim; ++c) {
        gm[c] += static_cast<T>(g * double(x[c]));
        gs[c] += static_cast<T>(g * double(mr[c]));
      }
      gt[r] += static_cast<T>(dv(i, r));
    }
  }
  return out;
}

template <typename T>
MappedLoss<T> nca_alignment_loss(const Mapper<T>& mapper, std::span<const SeedPair> pairs, const Matrix<T>& source,
                                 const Matrix<T>& target, const NcaConfig& config) {
  const auto s = batch_similarity(mapper, pairs, source, target);
  const auto nca = nca_loss(s, config);
  auto out = batch_similarity_backward(mapper, pairs, source, target, nca.grad);
  out.loss = nca.loss;
  return out;
}

#define MHP_INSTANTIATE(T)                                                                                          \
  template TripleLoss<T> triple_loss(const EmbeddingTable<T>&, std::span<const Triple>, std::span<const Triple>,   \
                                     std::size_t, double);                                                         \
  template MappedLoss<T> mapping_loss(const Mapper<T>&, std::span<const SeedPair>, const Matrix<T>&,                \
                                      const Matrix<T>&);                                                           \
  template Matrix<double> batch_similarity(const Mapper<T>&, std::span<const SeedPair>, const Matrix<T>&,           \
                                           const Matrix<T>&);                                                      \
  template MappedLoss<T> batch_similarity_backward(const Mapper<T>&, std::span<const SeedPair>, const Matrix<T>&,   \
                                                   const Matrix<T>&, const Matrix<double>&);                       \
  template MappedLoss<T> nca_alignment_loss(const Mapper<T>&, std::span<const SeedPair>, const Matrix<T>&,          \
                                            const Matrix<T>&, const NcaConfig&);

MHP_INSTANTIATE(float)
MHP_INSTANTIATE(double)
#undef MHP_INSTANTIATE

}  // namespace mhp
