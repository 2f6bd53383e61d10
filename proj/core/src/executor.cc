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

#include "dynbatch/executor.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <optional>
#include <thread>

#include "dynbatch/kernels.h"

namespace dynbatch {
namespace {

Tensor Unbatched(const Tensor& row, const TensorType& type) {
  return row.Reshaped(type.shape);
}

std::string Where(const Schedule& s, int32_t depth, const OpGroup& g) {
  return "d=" + std::to_string(depth) + " op=" + s.GroupName(g);
}

// Where the value of a state row physically lives: row `row` of output
// `slot` of operation group `group` at `depth`, or row `row` of the initial
// state when group < 0. Pass-through rows resolve to the row they forward,
// so pass-through groups never move data.
struct RowSource {
  int32_t depth = 0;
  int32_t group = -1;
  int32_t slot = 0;
  int32_t row = 0;
};

// sources[d][t][r] for every state row of the schedule.
using Sources = std::vector<std::vector<std::vector<RowSource>>>;

Sources ResolveSources(const Schedule& s) {
  const size_t num_types = s.types().size();
  Sources src(s.max_depth() + 1);
  src[0].resize(num_types);
  for (size_t t = 0; t < num_types; ++t) {
    const int64_t rows = s.rows(0, static_cast<int32_t>(t));
    src[0][t].resize(rows);
    for (int64_t r = 0; r < rows; ++r) src[0][t][r].row = static_cast<int32_t>(r);
  }
  for (int32_t d = 1; d <= s.max_depth(); ++d) {
    const ScheduleLevel& level = s.level(d);
    src[d].resize(num_types);
    for (size_t t = 0; t < num_types; ++t) src[d][t].resize(level.rows[t]);
    for (size_t gi = 0; gi < level.groups.size(); ++gi) {
      const OpGroup& g = level.groups[gi];
      for (size_t k = 0; k < g.outputs.size(); ++k) {
        const OutputPlacement& p = g.outputs[k];
        auto& out = src[d][p.type];
        for (int32_t j = 0; j < g.instances; ++j) {
          RowSource& r = out[p.offset + static_cast<int64_t>(j) * p.stride + p.rank];
          if (g.is_pass_through()) {
            const GatherPart& in = g.inputs[0][0];
            r = src[d - 1][in.type][in.indices[j]];
          } else {
            r = {d, static_cast<int32_t>(gi), static_cast<int32_t>(k), j};
          }
        }
      }
    }
  }
  return src;
}

// Operation outputs per depth and group; [0] is unused.
using GroupOutputs = std::vector<std::vector<Tape::GroupRecord>>;

const Tensor& SourceTensor(const Schedule& s, const GroupOutputs& groups,
                           const RowSource& r, int32_t type) {
  if (r.group < 0) return s.initial_state()[type];
  return groups[r.depth][r.group].outputs[r.slot];
}

// Gathers one input slot of a group at depth d from depth d - 1; the parts
// of a multi-part slot are laid side by side.
Tensor GatherSlot(const Schedule& s, const Sources& src, const GroupOutputs& groups,
                  int32_t d, const std::vector<GatherPart>& parts, int32_t instances) {
  const auto& types = s.types();
  const TensorType& first = types[parts[0].type];
  Tensor out;
  if (parts.size() == 1) {
    out = Tensor::Uninitialized(first.dtype, first.shape.WithLeading(instances));
  } else {
    int64_t width = 0;
    for (const GatherPart& p : parts) {
      if (types[p.type].dtype != first.dtype) {
        throw Error(ErrorCode::kType, "concatenated parts differ in dtype");
      }
      width += types[p.type].shape.num_elements();
    }
    out = Tensor::Uninitialized(first.dtype, Shape{instances, width});
  }
  DispatchDType(first.dtype, [&](auto tag) {
    using T = decltype(tag);
    T* dst = out.mutable_data<T>().data();
    const int64_t out_width = out.row_size();
    int64_t col = 0;
    for (const GatherPart& p : parts) {
      const int64_t w = types[p.type].shape.num_elements();
      const auto& rows = src[d - 1][p.type];
      for (int32_t j = 0; j < instances; ++j) {
        const RowSource& r = rows[p.indices[j]];
        const T* from = SourceTensor(s, groups, r, p.type).template data<T>().data() +
                        static_cast<int64_t>(r.row) * w;
        std::copy_n(from, w, dst + j * out_width + col);
      }
      col += w;
    }
  });
  return out;
}

}  // namespace

Executor::Executor(std::vector<const Operation*> ops, ExecutorOptions options)
    : ops_(std::move(ops)), options_(options) {}

ForwardResult Executor::Forward(const Schedule& schedule, const ParameterStore& params,
                                Mode mode) const {
  if (ops_.size() != schedule.op_names().size()) {
    throw Error(ErrorCode::kContract, "executor binds " + std::to_string(ops_.size()) +
                                          " operations, schedule enumerates " +
                                          std::to_string(schedule.op_names().size()));
  }
  const auto& types = schedule.types();
  const Sources src = ResolveSources(schedule);
  GroupOutputs groups(schedule.max_depth() + 1);
  ForwardResult result;

  for (int32_t d = 1; d <= schedule.max_depth(); ++d) {
    const ScheduleLevel& level = schedule.level(d);
    auto& records = groups[d];
    records.resize(level.groups.size());

    auto run_group = [&](size_t gi) {
      const OpGroup& g = level.groups[gi];
      if (g.is_pass_through()) return;
      Tape::GroupRecord& rec = records[gi];
      try {
        for (const auto& slot : g.inputs) {
          rec.inputs.push_back(GatherSlot(schedule, src, groups, d, slot, g.instances));
        }
        const Operation& op = *ops_[g.op];
        rec.outputs = op.Forward(rec.inputs, params);
        // Gathered inputs only serve the backward pass.
        if (mode == Mode::kInfer) rec.inputs = {};
        const auto& sig = op.signature();
        if (rec.outputs.size() != sig.outputs.size()) {
          throw Error(ErrorCode::kShape, "kernel returned " +
                                             std::to_string(rec.outputs.size()) + " outputs");
        }
        for (size_t k = 0; k < rec.outputs.size(); ++k) {
          const Tensor& o = rec.outputs[k];
          if (o.dtype() != sig.outputs[k].dtype ||
              o.shape() != sig.outputs[k].shape.WithLeading(g.instances)) {
            throw Error(ErrorCode::kShape,
                        "kernel output " + std::to_string(k) + " has shape " +
                            std::string(DTypeName(o.dtype())) + o.shape().ToString() +
                            ", expected " + sig.outputs[k].ToString() + " x " +
                            std::to_string(g.instances));
          }
        }
      } catch (const Error& e) {
        throw e.WithContext(Where(schedule, d, g));
      }
    };

    const int threads = std::min<int>(options_.num_threads, level.groups.size());
    if (threads <= 1) {
      for (size_t gi = 0; gi < level.groups.size(); ++gi) run_group(gi);
    } else {
      std::vector<std::exception_ptr> errors(threads);
      std::vector<std::thread> workers;
      for (int w = 0; w < threads; ++w) {
        workers.emplace_back([&, w] {
          try {
            for (size_t gi = w; gi < level.groups.size(); gi += threads) run_group(gi);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (std::thread& t : workers) t.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }

    for (const OpGroup& g : level.groups) {
      if (g.is_pass_through()) {
        ++result.stats.pass_through_groups;
      } else {
        ++result.stats.kernel_calls;
        ++result.stats.calls_per_op[schedule.op_names()[g.op]];
      }
    }
  }

  for (const EdgeLabel& l : schedule.results()) {
    const RowSource& r = src[l.depth][l.type][l.index];
    result.results.push_back(Unbatched(
        SourceTensor(schedule, groups, r, l.type).SliceRows(r.row, 1), types[l.type]));
  }
  if (mode == Mode::kTrain) {
    result.tape.emplace();
    result.tape->groups.assign(std::make_move_iterator(groups.begin() + 1),
                               std::make_move_iterator(groups.end()));
  }
  return result;
}

namespace {

// dst row `dst_row` += columns [col, col + width) of src row `src_row`.
void AddRow(Tensor& dst, int64_t dst_row, const Tensor& src, int64_t src_row, int64_t col,
            int64_t width) {
  DispatchFloating(dst.dtype(), "AddRow", [&](auto tag) {
    using T = decltype(tag);
    T* d = dst.mutable_data<T>().data() + dst_row * width;
    const T* s = src.data<T>().data() + src_row * src.row_size() + col;
    for (int64_t i = 0; i < width; ++i) d[i] += s[i];
  });
}

}  // namespace

void Executor::Backward(const Schedule& schedule, const Tape& tape,
                        const ParameterStore& params, std::span<const Tensor> result_grads,
                        GradientStore* grads) const {
  if (tape.max_depth() != schedule.max_depth()) {
    throw Error(ErrorCode::kContract, "tape does not match the schedule");
  }
  if (result_grads.size() != schedule.results().size()) {
    throw Error(ErrorCode::kContract, "expected " +
                                          std::to_string(schedule.results().size()) +
                                          " result gradients, got " +
                                          std::to_string(result_grads.size()));
  }
  const auto& types = schedule.types();
  auto floating = [&](int32_t t) { return IsFloating(types[t].dtype); };
  const Sources src = ResolveSources(schedule);

  // Gradients of operation outputs, dout[d][g][k], created on first use.
  std::vector<std::vector<std::vector<std::optional<Tensor>>>> dout(schedule.max_depth() +
                                                                   1);
  for (int32_t d = 1; d <= schedule.max_depth(); ++d) {
    const auto& level = schedule.level(d);
    dout[d].resize(level.groups.size());
    for (size_t gi = 0; gi < level.groups.size(); ++gi) {
      dout[d][gi].resize(level.groups[gi].outputs.size());
    }
  }
  auto grad_of = [&](const RowSource& r, int32_t type) -> Tensor& {
    auto& slot = dout[r.depth][r.group][r.slot];
    if (!slot) {
      const int32_t n = schedule.level(r.depth).groups[r.group].instances;
      slot.emplace(types[type].dtype, types[type].shape.WithLeading(n));
    }
    return *slot;
  };

  for (size_t k = 0; k < result_grads.size(); ++k) {
    const EdgeLabel& l = schedule.results()[k];
    if (!floating(l.type)) continue;
    const Tensor& g = result_grads[k];
    if (g.num_elements() != types[l.type].shape.num_elements() ||
        g.dtype() != types[l.type].dtype) {
      throw Error(ErrorCode::kShape, "result gradient " + std::to_string(k) +
                                         " does not match " + types[l.type].ToString());
    }
    const RowSource& r = src[l.depth][l.type][l.index];
    if (r.group < 0) continue;  // constants take no gradient
    AddRow(grad_of(r, l.type), r.row, g, 0, 0, g.num_elements());
  }

  for (int32_t d = schedule.max_depth(); d >= 1; --d) {
    const ScheduleLevel& level = schedule.level(d);
    for (size_t gi = 0; gi < level.groups.size(); ++gi) {
      const OpGroup& g = level.groups[gi];
      if (g.is_pass_through()) continue;
      auto& douts = dout[d][gi];
      if (std::none_of(douts.begin(), douts.end(), [](const auto& t) { return t; })) continue;
      const Tape::GroupRecord& rec = tape.groups[d - 1][gi];
      try {
        std::vector<Tensor> dy;
        for (size_t k = 0; k < g.outputs.size(); ++k) {
          const int32_t t = g.outputs[k].type;
          if (!floating(t)) {
            dy.emplace_back();
          } else if (douts[k]) {
            dy.push_back(std::move(*douts[k]));
          } else {
            dy.emplace_back(types[t].dtype, types[t].shape.WithLeading(g.instances));
          }
        }
        const std::vector<Tensor> din =
            ops_[g.op]->Backward(rec.inputs, rec.outputs, dy, params, grads);
        for (size_t k = 0; k < g.inputs.size(); ++k) {
          int64_t col = 0;
          for (const GatherPart& p : g.inputs[k]) {
            const int64_t w = types[p.type].shape.num_elements();
            if (floating(p.type) && din[k].num_elements() > 0) {
              const auto& rows = src[d - 1][p.type];
              for (int32_t j = 0; j < g.instances; ++j) {
                const RowSource& r = rows[p.indices[j]];
                if (r.group < 0) continue;
                AddRow(grad_of(r, p.type), r.row, din[k], j, col, w);
              }
            }
            col += w;
          }
        }
      } catch (const Error& e) {
        throw e.WithContext(Where(schedule, d, g));
      }
      douts.clear();
    }
  }
}

std::vector<Tensor> EvaluateNaive(const InvocationGraph& graph,
                                  std::span<const Operation* const> ops,
                                  const ParameterStore& params, int64_t* kernel_calls) {
  // values[node][slot], each with a leading batch dimension of one.
  std::vector<std::vector<Tensor>> values(graph.size());
  int64_t calls = 0;
  for (int32_t i = 0; i < graph.size(); ++i) {
    const GraphNode& n = graph.node(i);
    switch (n.kind) {
      case GraphNode::Kind::kConstant:
        values[i].push_back(n.value.Reshaped(n.value.shape().WithLeading(1)));
        break;
      case GraphNode::Kind::kPassThrough:
        values[i].push_back(values[n.inputs[0].parts[0].node][n.inputs[0].parts[0].slot]);
        break;
      case GraphNode::Kind::kInvocation: {
        std::vector<Tensor> inputs;
        for (const InputSlot& slot : n.inputs) {
          if (slot.parts.size() == 1) {
            inputs.push_back(values[slot.parts[0].node][slot.parts[0].slot]);
            continue;
          }
          std::vector<Tensor> pieces;
          for (NodeRef r : slot.parts) {
            const Tensor& v = values[r.node][r.slot];
            pieces.push_back(v.Reshaped(Shape{1, v.row_size()}));
          }
          inputs.push_back(kernels::ConcatColumns(pieces));
        }
        values[i] = ops[n.op]->Forward(inputs, params);
        ++calls;
        break;
      }
    }
  }
  if (kernel_calls) *kernel_calls = calls;
  std::vector<Tensor> out;
  for (NodeRef r : graph.results()) {
    out.push_back(Unbatched(values[r.node][r.slot], graph.TypeOf(r)));
  }
  return out;
}

}  // namespace dynbatch
