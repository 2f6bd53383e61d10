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

#include "dynbatch/graph.h"

#include <algorithm>
#include <map>
#include <string>

namespace dynbatch {

int32_t InvocationGraph::AddConstant(Tensor value) {
  GraphNode n;
  n.kind = GraphNode::Kind::kConstant;
  n.outputs.emplace_back(value.dtype(), value.shape());
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return size() - 1;
}

int32_t InvocationGraph::AddInvocation(int32_t op, std::vector<InputSlot> inputs,
                                       std::vector<TensorType> outputs) {
  GraphNode n;
  n.kind = GraphNode::Kind::kInvocation;
  n.op = op;
  n.inputs = std::move(inputs);
  n.outputs = std::move(outputs);
  nodes_.push_back(std::move(n));
  return size() - 1;
}

int32_t InvocationGraph::AddPassThrough(NodeRef source, TensorType type) {
  GraphNode n;
  n.kind = GraphNode::Kind::kPassThrough;
  n.inputs.push_back(InputSlot{{source}});
  n.outputs.push_back(std::move(type));
  nodes_.push_back(std::move(n));
  return size() - 1;
}

const TensorType& InvocationGraph::TypeOf(NodeRef ref) const {
  if (ref.node < 0 || ref.node >= size()) {
    throw Error(ErrorCode::kSchedule, "reference to unknown node " +
                                          std::to_string(ref.node));
  }
  const GraphNode& n = nodes_[ref.node];
  if (ref.slot < 0 || ref.slot >= static_cast<int32_t>(n.outputs.size())) {
    throw Error(ErrorCode::kSchedule, "reference to unknown output slot " +
                                          std::to_string(ref.slot) + " of node " +
                                          std::to_string(ref.node));
  }
  return n.outputs[ref.slot];
}

int64_t InvocationGraph::CountInvocations() const {
  return std::count_if(nodes_.begin(), nodes_.end(), [](const GraphNode& n) {
    return n.kind == GraphNode::Kind::kInvocation;
  });
}

InvocationGraph MergeGraphs(std::span<const InvocationGraph> graphs,
                            std::vector<int32_t>* node_offsets) {
  InvocationGraph merged;
  if (node_offsets) node_offsets->clear();
  for (const InvocationGraph& g : graphs) {
    const int32_t offset = merged.size();
    if (node_offsets) node_offsets->push_back(offset);
    auto shift = [offset](NodeRef r) { return NodeRef{r.node + offset, r.slot}; };
    for (const GraphNode& n : g.nodes()) {
      std::vector<InputSlot> inputs = n.inputs;
      for (InputSlot& s : inputs) {
        for (NodeRef& p : s.parts) p = shift(p);
      }
      switch (n.kind) {
        case GraphNode::Kind::kConstant:
          merged.AddConstant(n.value);
          break;
        case GraphNode::Kind::kInvocation:
          merged.AddInvocation(n.op, std::move(inputs), n.outputs);
          break;
        case GraphNode::Kind::kPassThrough:
          merged.AddPassThrough(inputs[0].parts[0], n.outputs[0]);
          break;
      }
    }
    for (NodeRef r : g.results()) merged.results().push_back(shift(r));
  }
  return merged;
}

std::vector<int32_t> AssignDepths(const InvocationGraph& graph) {
  std::vector<int32_t> depth(graph.size(), 0);
  for (int32_t i = 0; i < graph.size(); ++i) {
    const GraphNode& n = graph.node(i);
    if (n.kind == GraphNode::Kind::kConstant) continue;
    int32_t d = 0;
    for (const InputSlot& s : n.inputs) {
      for (NodeRef p : s.parts) {
        // Tracing appends producers before consumers, so a forward or self
        // reference can only come from a malformed (cyclic) graph.
        if (p.node >= i || p.node < 0) {
          throw Error(ErrorCode::kSchedule,
                      "cycle: node " + std::to_string(i) + " reads node " +
                          std::to_string(p.node));
        }
        graph.TypeOf(p);
        d = std::max(d, depth[p.node]);
      }
    }
    depth[i] = d + 1;
  }
  return depth;
}

InvocationGraph InsertPassThroughs(const InvocationGraph& graph,
                                   std::vector<int32_t>& depths) {
  InvocationGraph out = graph;
  // chains[ref][k] = pass-through carrying ref at depth(ref) + 1 + k.
  std::map<NodeRef, std::vector<int32_t>> chains;
  auto carry = [&](NodeRef ref, int32_t needed_depth) -> NodeRef {
    const int32_t base = depths[ref.node];
    if (needed_depth <= base) return ref;
    auto& chain = chains[ref];
    const TensorType type = out.TypeOf(ref);
    while (static_cast<int32_t>(chain.size()) < needed_depth - base) {
      NodeRef prev = chain.empty() ? ref : NodeRef{chain.back(), 0};
      chain.push_back(out.AddPassThrough(prev, type));
      depths.push_back(base + static_cast<int32_t>(chain.size()));
    }
    return NodeRef{chain[needed_depth - base - 1], 0};
  };
  const int32_t original = graph.size();
  for (int32_t i = 0; i < original; ++i) {
    const GraphNode& n = graph.node(i);
    if (n.kind == GraphNode::Kind::kConstant) continue;
    std::vector<InputSlot> inputs = n.inputs;
    for (InputSlot& s : inputs) {
      for (NodeRef& p : s.parts) p = carry(p, depths[i] - 1);
    }
    out.mutable_node(i).inputs = std::move(inputs);
  }
  return out;
}

}  // namespace dynbatch
