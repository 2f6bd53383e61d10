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

#include "dynbatch/schedule.h"

#include <algorithm>
#include <map>
#include <sstream>

#include "dynbatch/kernels.h"

namespace dynbatch {

int64_t Schedule::rows(int32_t depth, int32_t type) const {
  if (depth == 0) return initial_state_.at(type).rows();
  return levels_.at(depth - 1).rows.at(type);
}

int32_t Schedule::TypeIndex(const TensorType& type) const {
  auto it = std::find(types_.begin(), types_.end(), type);
  return it == types_.end() ? -1 : static_cast<int32_t>(it - types_.begin());
}

std::string Schedule::GroupName(const OpGroup& group) const {
  return group.is_pass_through() ? std::string("pass") : op_names_.at(group.op);
}

namespace {

// Identifies a batch group within one depth: the operation plus, for
// operations fed through concatenated inputs, the per-slot part types.
struct GroupKey {
  int32_t op;
  int32_t pass_type;
  std::vector<std::vector<int32_t>> part_types;

  auto operator<=>(const GroupKey&) const = default;
};

}  // namespace

Schedule BuildSchedule(const InvocationGraph& graph,
                       std::span<const int32_t> depths,
                       std::vector<std::string> op_names) {
  if (static_cast<int32_t>(depths.size()) != graph.size()) {
    throw Error(ErrorCode::kSchedule, "depth list does not cover the graph");
  }
  Schedule s;
  s.op_names_ = std::move(op_names);
  const int32_t num_ops = static_cast<int32_t>(s.op_names_.size());

  std::map<TensorType, int32_t> type_index;
  auto type_of = [&](const TensorType& t) {
    auto [it, inserted] = type_index.emplace(t, static_cast<int32_t>(s.types_.size()));
    if (inserted) s.types_.push_back(t);
    return it->second;
  };
  int32_t max_depth = 0;
  for (int32_t i = 0; i < graph.size(); ++i) {
    for (const TensorType& t : graph.node(i).outputs) type_of(t);
    max_depth = std::max(max_depth, depths[i]);
  }
  const auto num_types = static_cast<int32_t>(s.types_.size());
  s.node_labels_.resize(graph.size());

  // Depth 0: constants stacked per type in node order.
  std::vector<std::vector<Tensor>> constants(num_types);
  for (int32_t i = 0; i < graph.size(); ++i) {
    const GraphNode& n = graph.node(i);
    if (depths[i] != 0) continue;
    if (n.kind != GraphNode::Kind::kConstant) {
      throw Error(ErrorCode::kSchedule, "non-constant node " + std::to_string(i) +
                                            " at depth 0");
    }
    const int32_t t = type_of(n.outputs[0]);
    s.node_labels_[i].push_back(
        EdgeLabel{0, t, static_cast<int32_t>(constants[t].size())});
    constants[t].push_back(n.value.Reshaped(n.value.shape().WithLeading(1)));
  }
  for (int32_t t = 0; t < num_types; ++t) {
    if (constants[t].empty()) {
      s.initial_state_.emplace_back(s.types_[t].dtype,
                                    s.types_[t].shape.WithLeading(0));
    } else {
      s.initial_state_.push_back(kernels::ConcatRows(constants[t]));
    }
  }

  // Bucket nodes by depth, preserving node order.
  std::vector<std::vector<int32_t>> by_depth(max_depth + 1);
  for (int32_t i = 0; i < graph.size(); ++i) by_depth[depths[i]].push_back(i);

  auto label_of = [&](NodeRef r, int32_t consumer, int32_t expected_depth) {
    if (depths[r.node] != expected_depth) {
      throw Error(ErrorCode::kSchedule,
                  "edge from node " + std::to_string(r.node) + " (depth " +
                      std::to_string(depths[r.node]) + ") to node " +
                      std::to_string(consumer) + " (depth " +
                      std::to_string(expected_depth + 1) +
                      ") spans more than one level; insert pass-throughs first");
    }
    return s.node_labels_.at(r.node).at(r.slot);
  };

  for (int32_t d = 1; d <= max_depth; ++d) {
    ScheduleLevel level;
    std::map<GroupKey, std::vector<int32_t>> buckets;
    for (int32_t i : by_depth[d]) {
      const GraphNode& n = graph.node(i);
      GroupKey key{OpGroup::kPassThrough, -1, {}};
      if (n.kind == GraphNode::Kind::kInvocation) {
        if (n.op < 0 || n.op >= num_ops) {
          throw Error(ErrorCode::kSchedule,
                      "node " + std::to_string(i) + " invokes operation " +
                          std::to_string(n.op) + " absent from the enumeration");
        }
        key.op = n.op;
      } else {
        // Pass-throughs sort after every operation.
        key.op = num_ops;
        key.pass_type = type_of(n.outputs[0]);
      }
      for (const InputSlot& slot : n.inputs) {
        std::vector<int32_t> parts;
        for (NodeRef p : slot.parts) parts.push_back(type_of(graph.TypeOf(p)));
        key.part_types.push_back(std::move(parts));
      }
      buckets[key].push_back(i);
    }

    std::vector<int64_t> counter(num_types, 0);
    // Buckets of one op with different part layouts keep first-seen order.
    std::vector<std::pair<const GroupKey*, const std::vector<int32_t>*>> ordered;
    for (const auto& [key, nodes] : buckets) ordered.emplace_back(&key, &nodes);
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
      if (a.first->op != b.first->op) return a.first->op < b.first->op;
      if (a.first->pass_type != b.first->pass_type) {
        return a.first->pass_type < b.first->pass_type;
      }
      return a.second->front() < b.second->front();
    });

    for (const auto& [key, nodes] : ordered) {
      OpGroup g;
      g.op = key->op == num_ops ? OpGroup::kPassThrough : key->op;
      g.pass_type = key->pass_type;
      g.instances = static_cast<int32_t>(nodes->size());
      g.nodes = *nodes;
      const GraphNode& proto = graph.node(nodes->front());

      // Output placement: instance-major, slot order within an instance.
      std::vector<int32_t> per_type(num_types, 0);
      for (const TensorType& t : proto.outputs) {
        OutputPlacement p;
        p.type = type_of(t);
        p.rank = per_type[p.type]++;
        g.outputs.push_back(p);
      }
      for (OutputPlacement& p : g.outputs) {
        p.stride = per_type[p.type];
        p.offset = counter[p.type];
      }
      for (int32_t t = 0; t < num_types; ++t) {
        counter[t] += static_cast<int64_t>(per_type[t]) * g.instances;
      }
      for (int32_t j = 0; j < g.instances; ++j) {
        const int32_t node = (*nodes)[j];
        auto& labels = s.node_labels_[node];
        for (const OutputPlacement& p : g.outputs) {
          labels.push_back(EdgeLabel{
              d, p.type, static_cast<int32_t>(p.offset + j * p.stride + p.rank)});
        }
      }

      g.inputs.resize(proto.inputs.size());
      for (size_t k = 0; k < proto.inputs.size(); ++k) {
        for (int32_t t : key->part_types[k]) {
          g.inputs[k].push_back(GatherPart{t, {}});
        }
      }
      for (int32_t node : *nodes) {
        const GraphNode& n = graph.node(node);
        for (size_t k = 0; k < n.inputs.size(); ++k) {
          for (size_t q = 0; q < n.inputs[k].parts.size(); ++q) {
            const EdgeLabel l = label_of(n.inputs[k].parts[q], node, d - 1);
            g.inputs[k][q].indices.push_back(l.index);
          }
        }
      }
      level.groups.push_back(std::move(g));
    }
    level.rows = std::move(counter);
    s.levels_.push_back(std::move(level));
  }

  // Index validity against the previous depth's extents.
  for (int32_t d = 1; d <= max_depth; ++d) {
    for (const OpGroup& g : s.level(d).groups) {
      for (const auto& slot : g.inputs) {
        for (const GatherPart& p : slot) {
          const int64_t extent = s.rows(d - 1, p.type);
          for (int32_t i : p.indices) {
            if (i < 0 || i >= extent) {
              throw Error(ErrorCode::kSchedule,
                          "gather index " + std::to_string(i) + " out of range at d=" +
                              std::to_string(d) + " op=" + s.GroupName(g));
            }
          }
        }
      }
    }
  }

  for (NodeRef r : graph.results()) {
    s.results_.push_back(s.node_labels_.at(r.node).at(r.slot));
  }
  return s;
}

std::string Schedule::Dump() const {
  std::ostringstream os;
  for (size_t t = 0; t < types_.size(); ++t) {
    if (initial_state_[t].rows() == 0) continue;
    os << "d=0 op=const out_rows=" << initial_state_[t].rows()
       << " type=" << types_[t].ToString() << "\n";
  }
  for (int32_t d = 1; d <= max_depth(); ++d) {
    for (const OpGroup& g : level(d).groups) {
      os << "d=" << d << " op=" << GroupName(g);
      for (size_t k = 0; k < g.inputs.size(); ++k) {
        os << " in" << k << "=";
        for (size_t q = 0; q < g.inputs[k].size(); ++q) {
          if (q > 0) os << "+";
          os << "[";
          const auto& idx = g.inputs[k][q].indices;
          for (size_t i = 0; i < idx.size(); ++i) {
            if (i > 0) os << ",";
            os << idx[i];
          }
          os << "]";
        }
      }
      std::vector<TensorType> out_types;
      for (const OutputPlacement& p : g.outputs) out_types.push_back(types_[p.type]);
      os << " out_rows=" << g.instances
         << " type=" << TensorsAsBlockType(out_types).ToString() << "\n";
    }
  }
  for (const EdgeLabel& l : results_) {
    os << "result (" << l.depth << "," << types_[l.type].ToString() << ","
       << l.index << ")\n";
  }
  return os.str();
}

}  // namespace dynbatch
