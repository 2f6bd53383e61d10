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

// The invocation graph: a DAG of operation invocations traced from applying
// a block to host inputs. Source nodes are constants; every other node is an
// operation invocation or an inserted pass-through (identity).

#ifndef DYNBATCH_GRAPH_H_
#define DYNBATCH_GRAPH_H_

#include <cstdint>
#include <span>
#include <vector>

#include "dynbatch/tensor.h"
#include "dynbatch/types.h"

namespace dynbatch {

// One output of one node.
struct NodeRef {
  int32_t node = -1;
  int32_t slot = 0;

  friend bool operator==(const NodeRef&, const NodeRef&) = default;
  friend auto operator<=>(const NodeRef&, const NodeRef&) = default;
};

// An operation input. With several parts, the gathered rows are concatenated
// along the feature axis before the kernel runs (this is how Concat blocks
// are realized).
struct InputSlot {
  std::vector<NodeRef> parts;
};

struct GraphNode {
  enum class Kind : uint8_t { kConstant, kInvocation, kPassThrough };

  Kind kind = Kind::kConstant;
  int32_t op = -1;  // invocation: index into the operation enumeration
  std::vector<InputSlot> inputs;
  std::vector<TensorType> outputs;
  Tensor value;  // constant only; shape == outputs[0].shape
};

class InvocationGraph {
 public:
  int32_t AddConstant(Tensor value);
  int32_t AddInvocation(int32_t op, std::vector<InputSlot> inputs,
                        std::vector<TensorType> outputs);
  int32_t AddPassThrough(NodeRef source, TensorType type);

  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const GraphNode& node(int32_t i) const { return nodes_.at(i); }
  GraphNode& mutable_node(int32_t i) { return nodes_.at(i); }
  int32_t size() const { return static_cast<int32_t>(nodes_.size()); }

  const TensorType& TypeOf(NodeRef ref) const;

  // Requested outputs, in order.
  std::vector<NodeRef>& results() { return results_; }
  const std::vector<NodeRef>& results() const { return results_; }

  int64_t CountInvocations() const;

 private:
  std::vector<GraphNode> nodes_;
  std::vector<NodeRef> results_;
};

// Disjoint union. Node order and result order are preserved graph by graph;
// `node_offsets` (optional) receives the index of each graph's first node.
InvocationGraph MergeGraphs(std::span<const InvocationGraph> graphs,
                            std::vector<int32_t>* node_offsets = nullptr);

// depth(constant) = 0, depth(n) = 1 + max depth of n's inputs.
// Throws kSchedule on a reference to a later node (a cycle).
std::vector<int32_t> AssignDepths(const InvocationGraph& graph);

// Returns a graph in which every edge spans exactly one depth level. Inserted
// pass-throughs are appended after the original nodes, one chain per source
// ref shared by all consumers; `depths` is extended to cover them.
InvocationGraph InsertPassThroughs(const InvocationGraph& graph,
                                   std::vector<int32_t>& depths);

}  // namespace dynbatch

#endif  // DYNBATCH_GRAPH_H_
