/* Copyright 2026 The dynbatch Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Microbenchmarks of the kernels, the Tree-LSTM cell, scheduling and the
// executor on batches of random trees.

#include <cstdint>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "dynbatch/bench/bench.h"
#include "dynbatch/compiler.h"
#include "dynbatch/executor.h"
#include "dynbatch/kernels.h"
#include "dynbatch/ops.h"
#include "dynbatch/parameters.h"
#include "dynbatch/tensor.h"

namespace dynbatch {
namespace {

Tensor RandomTensor(Shape shape, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(shape.num_elements());
  for (double& x : v) x = u(rng);
  return Tensor::FromDoubles(DType::kFloat32, std::move(shape), v);
}

std::vector<HostValue> RandomTrees(int64_t count, int64_t leaves, int64_t vocab) {
  std::mt19937_64 rng(1);
  std::vector<HostValue> trees;
  for (int64_t i = 0; i < count; ++i) {
    trees.push_back(bench::GenRandomTree(leaves, bench::ShapeMode::kRandom, vocab, rng));
  }
  return trees;
}

// Args: rows m, inner k, columns n.
void BM_MatMul(benchmark::State& state) {
  const int64_t m = state.range(0), k = state.range(1), n = state.range(2);
  const Tensor a = RandomTensor(Shape{m, k}, 1);
  const Tensor b = RandomTensor(Shape{k, n}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::MatMul(a, b));
  state.counters["flops"] = benchmark::Counter(
      2.0 * static_cast<double>(m * k * n), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_MatMul)->Args({1, 128, 320})->Args({64, 128, 320})->Args({256, 128, 320});

// Packed Tree-LSTM cell at state size 64; arg: batch rows.
void BM_TreeLstmCellForward(benchmark::State& state) {
  const int64_t rows = state.range(0), s = 64;
  const auto cell = TreeLstmCell("cell", {.state_dim = s, .packed = true});
  ParameterStore params;
  params.Initialize(cell->parameters(), 1);
  const std::vector<Tensor> inputs = {RandomTensor(Shape{rows, 2 * s}, 3),
                                      RandomTensor(Shape{rows, 2 * s}, 4)};
  for (auto _ : state) benchmark::DoNotOptimize(cell->Forward(inputs, params));
  state.SetItemsProcessed(state.iterations() * rows);
}
BENCHMARK(BM_TreeLstmCellForward)->Arg(1)->Arg(16)->Arg(64)->Arg(256);

// Tracing, merging and scheduling; arg: trees of 128 leaves.
void BM_Plan(benchmark::State& state) {
  const bench::TreeBench tb(64, 16, 1);
  const std::vector<HostValue> trees = RandomTrees(state.range(0), 128, 16);
  for (auto _ : state) benchmark::DoNotOptimize(tb.model().Plan(trees));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Plan)->Arg(1)->Arg(64)->Unit(benchmark::kMicrosecond);

// Inference over a prebuilt schedule; arg: trees of 128 leaves.
void BM_ExecutorForward(benchmark::State& state) {
  const bench::TreeBench tb(64, 16, 1);
  const std::vector<HostValue> trees = RandomTrees(state.range(0), 128, 16);
  const BatchPlan plan = tb.model().Plan(trees);
  const Executor executor = tb.model().MakeExecutor();
  for (auto _ : state) {
    benchmark::DoNotOptimize(executor.Forward(plan.schedule, tb.params(), Mode::kInfer));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ExecutorForward)->Arg(1)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

}  // namespace
}  // namespace dynbatch

BENCHMARK_MAIN();
