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

// The compiled batch plan: for every depth, the batched operation groups and
// the row indices each group gathers from the previous depth's per-type
// state; plus the depth-0 constants and the labels of the requested outputs.

#ifndef DYNBATCH_SCHEDULE_H_
#define DYNBATCH_SCHEDULE_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dynbatch/graph.h"

namespace dynbatch {

// (d, t, i): row i of the concatenated outputs of type t at depth d.
struct EdgeLabel {
  int32_t depth = 0;
  int32_t type = 0;  // index into Schedule::types()
  int32_t index = 0;

  friend bool operator==(const EdgeLabel&, const EdgeLabel&) = default;
};

struct GatherPart {
  int32_t type = 0;
  std::vector<int32_t> indices;  // one per instance
};

// Where output slot k of a group lands in the (d, type) state: instance j
// goes to row offset + j * stride + rank.
struct OutputPlacement {
  int32_t type = 0;
  int64_t offset = 0;
  int32_t stride = 1;
  int32_t rank = 0;
};

struct OpGroup {
  static constexpr int32_t kPassThrough = -1;

  int32_t op = kPassThrough;  // index into Schedule::op_names()
  int32_t pass_type = -1;     // carried type, pass-through groups only
  int32_t instances = 0;
  std::vector<std::vector<GatherPart>> inputs;  // per input slot
  std::vector<OutputPlacement> outputs;         // per output slot
  std::vector<int32_t> nodes;                   // graph nodes, in order

  bool is_pass_through() const { return op == kPassThrough; }
};

struct ScheduleLevel {
  std::vector<OpGroup> groups;
  std::vector<int64_t> rows;  // per type: rows of the state after this depth
};

class Schedule {
 public:
  const std::vector<TensorType>& types() const { return types_; }
  const std::vector<std::string>& op_names() const { return op_names_; }

  // Per type: the depth-0 constants stacked as (rows, shape...).
  const std::vector<Tensor>& initial_state() const { return initial_state_; }
  int32_t max_depth() const { return static_cast<int32_t>(levels_.size()); }
  // d in [1, max_depth].
  const ScheduleLevel& level(int32_t d) const { return levels_.at(d - 1); }
  int64_t rows(int32_t depth, int32_t type) const;

  const std::vector<EdgeLabel>& results() const { return results_; }
  // Label of every output of every node of the scheduled graph.
  const std::vector<std::vector<EdgeLabel>>& node_labels() const {
    return node_labels_;
  }

  int32_t TypeIndex(const TensorType& type) const;  // -1 if absent
  std::string GroupName(const OpGroup& group) const;

  // Byte-stable text form:
  //   d=<int> op=<name> in0=[i,...] in1=[...] out_rows=<n> type=<type>
  // one line per (depth, group), depth 0 listing constants per type, then
  //   result (d,<type>,i)
  // per requested output. Multi-part (concatenated) inputs print as
  // [..]+[..].
  std::string Dump() const;

 private:
  friend Schedule BuildSchedule(const InvocationGraph&, std::span<const int32_t>,
                                std::vector<std::string>);

  std::vector<TensorType> types_;
  std::vector<std::string> op_names_;
  std::vector<Tensor> initial_state_;
  std::vector<ScheduleLevel> levels_;
  std::vector<EdgeLabel> results_;
  std::vector<std::vector<EdgeLabel>> node_labels_;
};

// Batches same-operation/same-depth invocations and computes edge labels.
// Requires pass-throughs to be inserted (every edge spans one level).
// Operation groups at a depth follow the order of `op_names` with
// pass-through groups last (ordered by type); instances keep node order.
Schedule BuildSchedule(const InvocationGraph& graph,
                       std::span<const int32_t> depths,
                       std::vector<std::string> op_names);

}  // namespace dynbatch

#endif  // DYNBATCH_SCHEDULE_H_
