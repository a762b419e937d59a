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

// Serial reference kernels against their OpenMP versions.
//
//   mhp_bench --benchmark_filter=Similarity
//
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <numeric>

#include "mhp/dangling.hpp"
#include "mhp/nn_search.hpp"
#include "mhp/rng.hpp"

namespace {

mhp::DenseMatrix random_rows(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  mhp::Rng rng(seed);
  mhp::DenseMatrix m(rows, cols);
  for (float& v : m.values()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return m;
}

void BM_SimilaritySerial(benchmark::State& state) {
  const auto q = random_rows(std::size_t(state.range(0)), 64, 1);
  const auto c = random_rows(std::size_t(state.range(0)), 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mhp::nn::reference::similarity_matrix(q, c));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_SimilarityParallel(benchmark::State& state) {
  const auto q = random_rows(std::size_t(state.range(0)), 64, 1);
  const auto c = random_rows(std::size_t(state.range(0)), 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(mhp::nn::similarity_matrix(q, c));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

void BM_TopKSerial(benchmark::State& state) {
  const auto q = random_rows(std::size_t(state.range(0)), 64, 3);
  const auto c = random_rows(std::size_t(state.range(0)), 64, 4);
  for (auto _ : state) benchmark::DoNotOptimize(mhp::nn::reference::top_k(q, c, 10));
}

void BM_TopKParallel(benchmark::State& state) {
  const auto q = random_rows(std::size_t(state.range(0)), 64, 3);
  const auto c = random_rows(std::size_t(state.range(0)), 64, 4);
  for (auto _ : state) benchmark::DoNotOptimize(mhp::nn::top_k(q, c, 10));
}

struct FeatureInputs {
  mhp::DenseMatrix source, target;
  mhp::Mapper<float> mapper;
  std::vector<mhp::EntityId> ids;

  explicit FeatureInputs(std::size_t n)
      : source(random_rows(n, 64, 5)), target(random_rows(n, 64, 6)), mapper{random_rows(64, 64, 7)}, ids(n / 2) {
    std::iota(ids.begin(), ids.end(), mhp::EntityId{0});
  }
};

void BM_FeaturesSerial(benchmark::State& state) {
  const FeatureInputs in(std::size_t(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(mhp::reference::build_features(in.ids, in.mapper, in.source, in.target, 5, 5));
  }
}

void BM_FeaturesParallel(benchmark::State& state) {
  const FeatureInputs in(std::size_t(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mhp::build_features(in.ids, in.mapper, in.source, in.target, 5, 5));
}

BENCHMARK(BM_SimilaritySerial)->Arg(500)->Arg(1500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimilarityParallel)->Arg(500)->Arg(1500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TopKSerial)->Arg(500)->Arg(1500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TopKParallel)->Arg(500)->Arg(1500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FeaturesSerial)->Arg(500)->Arg(1500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FeaturesParallel)->Arg(500)->Arg(1500)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
