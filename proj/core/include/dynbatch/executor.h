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

// Runs a Schedule: the depth loop over per-type concatenated state, forward
// and backward.

#ifndef DYNBATCH_EXECUTOR_H_
#define DYNBATCH_EXECUTOR_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dynbatch/graph.h"
#include "dynbatch/operation.h"
#include "dynbatch/parameters.h"
#include "dynbatch/schedule.h"

namespace dynbatch {

enum class Mode { kInfer, kTrain };

struct RunStats {
  int64_t kernel_calls = 0;  // operation kernel invocations, pass-throughs excluded
  int64_t pass_through_groups = 0;
  std::map<std::string, int64_t> calls_per_op;
};

// Saved tensors of a train-mode forward pass. Pass-through groups keep no
// tensors: their rows resolve to the operation outputs they forward.
struct Tape {
  struct GroupRecord {
    std::vector<Tensor> inputs;   // gathered (and column-concatenated) inputs
    std::vector<Tensor> outputs;  // kernel outputs, before placement
  };
  // groups[d - 1][g] for d in [1, max_depth].
  std::vector<std::vector<GroupRecord>> groups;

  int32_t max_depth() const { return static_cast<int32_t>(groups.size()); }
};

struct ForwardResult {
  std::vector<Tensor> results;  // one per result label, unbatched shape
  RunStats stats;
  std::optional<Tape> tape;     // train mode only
};

struct ExecutorOptions {
  // Worker threads for the independent groups of one depth (forward only).
  int num_threads = 1;
};

class Executor {
 public:
  // ops[k] implements operation k of the schedule's enumeration.
  explicit Executor(std::vector<const Operation*> ops, ExecutorOptions options = {});

  ForwardResult Forward(const Schedule& schedule, const ParameterStore& params,
                        Mode mode) const;

  // result_grads[k] is d(loss)/d(result k), with the result's shape. Adds
  // parameter gradients to `grads`.
  void Backward(const Schedule& schedule, const Tape& tape,
                const ParameterStore& params, std::span<const Tensor> result_grads,
                GradientStore* grads) const;

 private:
  std::vector<const Operation*> ops_;
  ExecutorOptions options_;
};

// Reference evaluator: walks the graph node by node and calls each kernel
// with a batch of one. Returns the graph's results, unbatched.
std::vector<Tensor> EvaluateNaive(const InvocationGraph& graph,
                                  std::span<const Operation* const> ops,
                                  const ParameterStore& params,
                                  int64_t* kernel_calls = nullptr);

}  // namespace dynbatch

#endif  // DYNBATCH_EXECUTOR_H_
