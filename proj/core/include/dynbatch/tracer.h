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

// Applies a typed block tree to one host input, emitting the invocation
// graph: constants for Scalar/TensorInput/Zeros, one invocation per Function
// application, and nothing for the host-side combinators.

#ifndef DYNBATCH_TRACER_H_
#define DYNBATCH_TRACER_H_

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "dynbatch/block.h"
#include "dynbatch/graph.h"
#include "dynbatch/host_value.h"

namespace dynbatch {

// What a block produced during tracing.
struct TraceValue {
  enum class Kind { kVoid, kHost, kTensor, kConcat, kTuple, kSeq, kBroadcast };

  Kind kind = Kind::kVoid;
  HostValue host;                 // kHost
  NodeRef ref;                    // kTensor
  TensorType type;                // kTensor, kConcat (the concatenated type)
  std::vector<TraceValue> items;  // tuple/seq elements, concat parts, or the
                                  // single repeated element of a broadcast

  static TraceValue Void() { return TraceValue{}; }
  static TraceValue Host(HostValue v);
  static TraceValue Tensor(NodeRef ref, TensorType type);
  static TraceValue Tuple(std::vector<TraceValue> items);
  static TraceValue Seq(std::vector<TraceValue> items);
  static TraceValue Broadcast(TraceValue element);

  // Tensor refs in depth-first order (concat parts individually).
  void CollectRefs(std::vector<NodeRef>* out) const;
};

struct TraceOptions {
  // Nesting limit for forward-declaration expansions.
  int max_recursion_depth = 10000;
};

struct TracedGraph {
  InvocationGraph graph;  // results() = output tensor refs, depth first
  TraceValue output;
};

// Traces `root` (types inferred) on `input`. `ops` is the operation
// enumeration; Function and Sum nodes are bound through their resolved
// operation names. Throws kTrace on malformed host data or runaway recursion.
TracedGraph Trace(const Block& root, const HostValue& input,
                  std::span<const OpSignature> ops,
                  const TraceOptions& options = {});

// Runs `fn` on a thread with a large stack so deep recursive traces do not
// exhaust the caller's stack. Exceptions propagate to the caller.
void RunWithLargeStack(const std::function<void()>& fn,
                       size_t stack_bytes = size_t{1} << 30);

}  // namespace dynbatch

#endif  // DYNBATCH_TRACER_H_
