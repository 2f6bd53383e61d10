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

// The compiler front door: validates and type-checks a block, enumerates its
// operations, and turns batches of host inputs into schedules.

#ifndef DYNBATCH_COMPILER_H_
#define DYNBATCH_COMPILER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dynbatch/block.h"
#include "dynbatch/executor.h"
#include "dynbatch/graph.h"
#include "dynbatch/operation.h"
#include "dynbatch/schedule.h"
#include "dynbatch/tracer.h"

namespace dynbatch {

struct CompileOptions {
  TraceOptions trace;
};

// A batch of inputs lowered to one schedule.
struct BatchPlan {
  InvocationGraph graph;        // merged, pass-throughs inserted
  std::vector<int32_t> depths;  // per node of `graph`
  Schedule schedule;
  // Input k's outputs are schedule.results()[result_begin[k], result_begin[k+1]).
  std::vector<int64_t> result_begin;
  int64_t invocations = 0;  // Function and Sum applications in the batch

  std::span<const Tensor> ResultsOf(std::span<const Tensor> results, size_t k) const {
    return results.subspan(result_begin[k], result_begin[k + 1] - result_begin[k]);
  }
};

class CompiledModel {
 public:
  // `registry` must outlive the model; generic operations are instantiated
  // in it. Throws kType/kValidation with the offending block path.
  static CompiledModel Compile(const Block& root, OperationRegistry& registry,
                               const CompileOptions& options = {});

  // The annotated copy of the block tree.
  const Block& root() const { return root_; }
  const BlockType& input_type() const { return *root_.input_type(); }
  const BlockType& output_type() const { return *root_.output_type(); }

  // The operation enumeration; index k is op id k in graphs and schedules.
  const std::vector<OpSignature>& ops() const { return ops_; }
  std::vector<std::string> op_names() const;
  const std::vector<const Operation*>& kernels() const { return kernels_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  std::vector<ParameterSpec> parameters() const;
  void InitializeParameters(ParameterStore& params, uint64_t seed) const;

  // Traces one input (on a large-stack thread).
  TracedGraph Trace(const HostValue& input) const;
  // Traces, merges and schedules a batch.
  BatchPlan Plan(std::span<const HostValue> inputs) const;
  // Schedules already traced graphs.
  BatchPlan PlanGraphs(std::span<const InvocationGraph> graphs) const;

  Executor MakeExecutor(ExecutorOptions options = {}) const {
    return Executor(kernels_, options);
  }

  // Forward pass over a batch; out[k] holds input k's output tensors.
  std::vector<std::vector<Tensor>> Evaluate(std::span<const HostValue> inputs,
                                            const ParameterStore& params) const;

  std::string Dump() const { return DumpBlock(root_); }

 private:
  Block root_;
  std::vector<OpSignature> ops_;
  std::vector<const Operation*> kernels_;
  std::vector<std::string> warnings_;
  CompileOptions options_;
};

}  // namespace dynbatch

#endif  // DYNBATCH_COMPILER_H_
