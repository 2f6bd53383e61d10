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

#include "dynbatch/compiler.h"

#include <set>

#include "dynbatch/type_inference.h"

namespace dynbatch {

CompiledModel CompiledModel::Compile(const Block& root, OperationRegistry& registry,
                                     const CompileOptions& options) {
  if (!root.valid()) throw Error(ErrorCode::kValidation, "cannot compile an empty block");
  CompiledModel m;
  m.options_ = options;
  m.root_ = CloneBlockTree(root);
  ValidateBlockTree(m.root_, &m.warnings_);
  InferTypes(m.root_, registry);
  if (!m.root_.input_type()->is_input()) {
    // Roots consume host data; a tensor-typed root would have no source.
    throw Error(ErrorCode::kType, "TypeMismatch at " + m.root_.node().path +
                                      " (root input): expected input, found " +
                                      m.root_.input_type()->ToString());
  }
  m.ops_ = CheckSchedulable(m.root_, registry);
  for (const OpSignature& sig : m.ops_) m.kernels_.push_back(&registry.Get(sig.name));
  return m;
}

std::vector<std::string> CompiledModel::op_names() const {
  std::vector<std::string> names;
  for (const OpSignature& s : ops_) names.push_back(s.name);
  return names;
}

std::vector<ParameterSpec> CompiledModel::parameters() const {
  std::vector<ParameterSpec> out;
  std::set<std::string> seen;
  for (const Operation* op : kernels_) {
    for (ParameterSpec& p : op->parameters()) {
      if (seen.insert(p.name).second) out.push_back(std::move(p));
    }
  }
  return out;
}

void CompiledModel::InitializeParameters(ParameterStore& params, uint64_t seed) const {
  params.Initialize(parameters(), seed);
}

TracedGraph CompiledModel::Trace(const HostValue& input) const {
  TracedGraph out;
  RunWithLargeStack([&] { out = dynbatch::Trace(root_, input, ops_, options_.trace); });
  return out;
}

BatchPlan CompiledModel::Plan(std::span<const HostValue> inputs) const {
  std::vector<InvocationGraph> graphs(inputs.size());
  RunWithLargeStack([&] {
    for (size_t k = 0; k < inputs.size(); ++k) {
      graphs[k] = dynbatch::Trace(root_, inputs[k], ops_, options_.trace).graph;
    }
  });
  return PlanGraphs(graphs);
}

BatchPlan CompiledModel::PlanGraphs(std::span<const InvocationGraph> graphs) const {
  BatchPlan plan;
  plan.result_begin.push_back(0);
  for (const InvocationGraph& g : graphs) {
    plan.result_begin.push_back(plan.result_begin.back() +
                                static_cast<int64_t>(g.results().size()));
  }
  InvocationGraph merged = MergeGraphs(graphs);
  plan.invocations = merged.CountInvocations();
  plan.depths = AssignDepths(merged);
  plan.graph = InsertPassThroughs(merged, plan.depths);
  plan.schedule = BuildSchedule(plan.graph, plan.depths, op_names());
  return plan;
}

std::vector<std::vector<Tensor>> CompiledModel::Evaluate(std::span<const HostValue> inputs,
                                                         const ParameterStore& params) const {
  BatchPlan plan = Plan(inputs);
  ForwardResult fwd = MakeExecutor().Forward(plan.schedule, params, Mode::kInfer);
  std::vector<std::vector<Tensor>> out;
  for (size_t k = 0; k < inputs.size(); ++k) {
    auto r = plan.ResultsOf(fwd.results, k);
    out.emplace_back(r.begin(), r.end());
  }
  return out;
}

}  // namespace dynbatch
