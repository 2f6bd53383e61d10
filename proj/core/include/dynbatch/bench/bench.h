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

// Timing harness comparing three ways of running a batch of binary trees
// through the packed Tree-LSTM (models/tree_rnn.h):
//
//   manual        one kernel call per tree node, batched across trees of one
//                 shape, with no gather or concat between calls
//   dynamic       the dynamic-batching schedule over trees of one shape
//   full_dynamic  the dynamic-batching schedule over trees of random shapes

#ifndef DYNBATCH_BENCH_BENCH_H_
#define DYNBATCH_BENCH_BENCH_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dynbatch/compiler.h"
#include "dynbatch/host_value.h"
#include "dynbatch/models/tree_rnn.h"
#include "dynbatch/operation.h"
#include "dynbatch/parameters.h"

namespace dynbatch::bench {

enum class ShapeMode { kFixed, kRandom };
enum class BatchMode { kManual, kDynamic, kFullDynamic };
enum class Phase { kInfer, kTrain };

std::string ToString(BatchMode mode);  // manual, dynamic, full_dynamic
std::string ToString(Phase phase);     // infer, train
std::string ToString(ShapeMode mode);  // fixed, random
// Accepts the ToString spellings and "full-dynamic". Throws kConfig.
BatchMode ParseBatchMode(std::string_view text);
Phase ParsePhase(std::string_view text);
ShapeMode ParseShapeMode(std::string_view text);

// Binary tree with `leaves` leaves and word ids in [0, vocab). Fixed mode
// splits every node at n/2 (the complete tree when leaves is a power of
// two); random mode draws the topology uniformly among all binary trees with
// that many leaves.
HostValue GenRandomTree(int64_t leaves, ShapeMode mode, int64_t vocab,
                        std::mt19937_64& rng);
HostValue GenRandomTree(int64_t leaves, ShapeMode mode, int64_t vocab, uint64_t seed);

// Shape-specialized plan for trees sharing one topology.
class ManualBaseline {
 public:
  ManualBaseline(const Operation* embedding, const Operation* cell,
                 const HostValue& shape);

  struct Batch {
    int64_t size = 0;
    std::vector<Tensor> leaf_words;  // per leaf in left-to-right order, i32 [size]
  };
  // Throws kConfig if a tree's topology differs from the plan's.
  Batch Prepare(std::span<const HostValue> trees) const;

  // Per-node outputs kept for Backward.
  struct Tape {
    std::vector<Tensor> outputs;
  };
  // Returns the root states, (batch, 2s).
  Tensor Forward(const Batch& batch, const ParameterStore& params, Tape* tape = nullptr,
                 int64_t* embedding_calls = nullptr, int64_t* cell_calls = nullptr) const;
  void Backward(const Batch& batch, const Tape& tape, const ParameterStore& params,
                const Tensor& root_grad, GradientStore* grads) const;

  int64_t num_leaves() const { return num_leaves_; }
  int64_t num_nodes() const { return static_cast<int64_t>(nodes_.size()); }

 private:
  struct Node {
    int64_t leaf = -1;  // leaf index, or -1 for an internal node
    int64_t left = -1, right = -1;
  };
  int64_t Build(const HostValue& tree);

  const Operation* embedding_;
  const Operation* cell_;
  HostValue shape_;
  std::vector<Node> nodes_;  // children before parents; root last
  int64_t num_leaves_ = 0;
};

struct BenchConfig {
  std::vector<BatchMode> modes = {BatchMode::kManual, BatchMode::kDynamic,
                                  BatchMode::kFullDynamic};
  Phase phase = Phase::kInfer;
  std::vector<int64_t> batch_sizes = {1, 8, 32, 64, 256};
  int64_t tree_size = 128;
  int64_t state_size = 64;
  int64_t vocab_size = 16;
  int repeats = 5;
  uint64_t seed = 1;
  // Overrides the mode's tree shapes (manual and dynamic use fixed shapes,
  // full_dynamic random ones). Manual with random shapes is a kConfig error.
  std::optional<ShapeMode> shape;
  bool include_compile = false;  // time tracing and scheduling too
  int threads = 1;
  double learning_rate = 1e-3;  // Sgd step of the train phase
};

// Throws kConfig on an invalid config.
void ValidateConfig(const BenchConfig& config);

struct BenchRow {
  BatchMode mode = BatchMode::kManual;
  Phase phase = Phase::kInfer;
  int64_t batch_size = 0;
  int64_t tree_size = 0;
  int64_t state_size = 0;
  double batch_time_s = 0;
  double tree_time_s = 0;
  // dynamic rows: dynamic / manual per-tree time at the same batch size.
  std::optional<double> cost_ratio;
  // full_dynamic rows: manual per-tree time at batch 1 / this row's.
  std::optional<double> speedup_ratio;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  const BenchRow* Find(BatchMode mode, int64_t batch_size) const;
};

BenchReport RunBenchmark(const BenchConfig& config);

// Process-wide: keeps freed memory in the heap (glibc) so repeated runs do
// not pay page faults for fresh mappings. Call once before timing.
void KeepFreedMemoryForTiming();
// Fills cost_ratio and speedup_ratio from the measured times.
void ComputeRatios(BenchReport& report);

extern const char kCsvHeader[];
void WriteCsv(const BenchReport& report, std::ostream& out);
// Parses and checks a CSV written by WriteCsv: header, field count, value
// ranges and ratio consistency. Throws kIO with the line number on failure.
BenchReport ReadCsv(std::istream& in);

// Everything needed to run one tree batch in any mode.
class TreeBench {
 public:
  TreeBench(int64_t state_size, int64_t vocab_size, uint64_t seed,
            DType dtype = DType::kFloat32);

  const CompiledModel& model() const { return model_; }
  const models::TreeRnnModel& tree_model() const { return tree_model_; }
  const Operation* embedding() const;
  const Operation* cell() const;
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

 private:
  OperationRegistry registry_;
  models::TreeRnnModel tree_model_;
  CompiledModel model_;
  ParameterStore params_;
};

}  // namespace dynbatch::bench

#endif  // DYNBATCH_BENCH_BENCH_H_
