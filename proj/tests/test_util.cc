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

#include "test_util.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dynbatch/trainer.h"

namespace dynbatch::testing {

double MaxRelErr(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return INFINITY;
  const auto x = a.ToDoubles();
  const auto y = b.ToDoubles();
  double diff = 0.0;
  double scale = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    diff = std::max(diff, std::abs(x[i] - y[i]));
    scale = std::max(scale, std::abs(y[i]));
  }
  if (std::isnan(diff)) return INFINITY;
  return scale > 0.0 ? diff / scale : diff;
}

double MaxRelErr(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
  if (a.size() != b.size()) return INFINITY;
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) worst = std::max(worst, MaxRelErr(a[i], b[i]));
  return worst;
}

Tensor RandomTensor(DType dtype, const Shape& shape, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  std::vector<double> v(static_cast<size_t>(shape.num_elements()));
  for (double& x : v) x = dist(rng);
  return Tensor::FromDoubles(dtype, shape, v);
}

Block ToyTreeBlock(const std::string& embed, const std::string& cell) {
  auto expr = ForwardDeclaration::Create("tree");
  Block leaf = Scalar(DType::kInt32) >> Function(embed);
  Block pair = Record({{"left", (*expr)()}, {"right", (*expr)()}}) >> Function(cell);
  expr->ResolveTo(OneOf([](const HostValue& h) { return HostValue(h.is_list() ? 2 : 1); },
                        {{1, leaf}, {2, pair}}));
  return (*expr)();
}

HostValue Figure1Tree() {
  return HostValue(HostValue::List{HostValue(HostValue::List{1, 3}), 5});
}

HostValue RandomHostTree(int leaves, int vocab, std::mt19937_64& rng) {
  if (leaves == 1) {
    return HostValue(static_cast<int64_t>(std::uniform_int_distribution<int>(0, vocab - 1)(rng)));
  }
  const int left = std::uniform_int_distribution<int>(1, leaves - 1)(rng);
  HostValue l = RandomHostTree(left, vocab, rng);
  HostValue r = RandomHostTree(leaves - left, vocab, rng);
  return HostValue(HostValue::List{l, r});
}

void RandomizeParameters(ParameterStore& params, std::mt19937_64& rng, double scale) {
  for (const std::string& name : params.names()) {
    Tensor& p = params.Mutable(name);
    if (IsFloating(p.dtype())) p = RandomTensor(p.dtype(), p.shape(), rng, scale);
  }
}

namespace {

const TensorType kA(DType::kFloat32, {2});
const TensorType kB(DType::kFloat32, {3});

}  // namespace

InvocationGraph RandomInvocationGraph(std::mt19937_64& rng, int max_nodes) {
  InvocationGraph g;
  std::vector<NodeRef> a_refs, b_refs;
  auto add_constant = [&](const TensorType& t) {
    const int32_t n = g.AddConstant(Tensor(t.dtype, t.shape));
    (t == kA ? a_refs : b_refs).push_back(NodeRef{n, 0});
  };
  auto pick = [&](const TensorType& t) {
    std::vector<NodeRef>& pool = t == kA ? a_refs : b_refs;
    if (pool.empty() || rng() % 5 == 0) add_constant(t);
    return InputSlot{{pool[rng() % pool.size()]}};
  };
  const int nodes = 1 + static_cast<int>(rng() % max_nodes);
  for (int i = 0; i < nodes; ++i) {
    switch (rng() % 4) {
      case 0:
        add_constant(rng() % 2 ? kA : kB);
        break;
      case 1: {
        const int32_t n = g.AddInvocation(0, {pick(kA)}, {kA});
        a_refs.push_back({n, 0});
        break;
      }
      case 2: {
        InputSlot x = pick(kA);
        InputSlot y = pick(kB);
        const int32_t n = g.AddInvocation(1, {x, y}, {kB});
        b_refs.push_back({n, 0});
        break;
      }
      default: {
        const int32_t n = g.AddInvocation(2, {pick(kB)}, {kA, kB});
        a_refs.push_back({n, 0});
        b_refs.push_back({n, 1});
        break;
      }
    }
  }
  if (a_refs.empty()) add_constant(kA);
  // A few requested outputs, always including the last node.
  g.results().push_back(NodeRef{g.size() - 1, 0});
  for (int k = 0; k < 3; ++k) {
    const auto& pool = rng() % 2 ? a_refs : b_refs;
    if (!pool.empty()) g.results().push_back(pool[rng() % pool.size()]);
  }
  return g;
}

const std::vector<std::string>& RandomGraphOpNames() {
  static const std::vector<std::string> names = {"op0", "op1", "op2"};
  return names;
}

Schedule LowerGraph(const InvocationGraph& g, const std::vector<std::string>& op_names,
                    InvocationGraph* with_pass, std::vector<int32_t>* depths_out) {
  std::vector<int32_t> depths = AssignDepths(g);
  InvocationGraph p = InsertPassThroughs(g, depths);
  Schedule s = BuildSchedule(p, depths, op_names);
  if (with_pass) *with_pass = p;
  if (depths_out) *depths_out = depths;
  return s;
}

std::string ScheduleViolation(const InvocationGraph& g) {
  InvocationGraph p;
  std::vector<int32_t> depths;
  const Schedule s = LowerGraph(g, RandomGraphOpNames(), &p, &depths);
  std::ostringstream why;
  if (depths.size() != static_cast<size_t>(p.size())) return "depth count";
  for (int32_t n = 0; n < p.size(); ++n) {
    for (const InputSlot& slot : p.node(n).inputs) {
      for (const NodeRef& r : slot.parts) {
        if (depths[r.node] + 1 != depths[n]) {
          why << "edge " << r.node << "->" << n << " spans " << depths[n] - depths[r.node];
          return why.str();
        }
      }
    }
  }
  std::vector<int> seen(p.size(), 0);
  for (int32_t d = 1; d <= s.max_depth(); ++d) {
    for (const OpGroup& group : s.level(d).groups) {
      if (static_cast<int32_t>(group.nodes.size()) != group.instances) return "group size";
      for (int32_t n : group.nodes) {
        ++seen[n];
        if (depths[n] != d) {
          why << "node " << n << " grouped at depth " << d;
          return why.str();
        }
      }
      for (const auto& slot : group.inputs) {
        for (const GatherPart& part : slot) {
          if (static_cast<int32_t>(part.indices.size()) != group.instances) return "gather size";
          for (int32_t i : part.indices) {
            if (i < 0 || i >= s.rows(d - 1, part.type)) {
              why << "gather index " << i << " out of range at depth " << d;
              return why.str();
            }
          }
        }
      }
    }
  }
  for (int32_t n = 0; n < p.size(); ++n) {
    const bool constant = p.node(n).kind == GraphNode::Kind::kConstant;
    if (seen[n] != (constant ? 0 : 1)) {
      why << "node " << n << " in " << seen[n] << " groups";
      return why.str();
    }
    for (const EdgeLabel& l : s.node_labels()[n]) {
      if (l.depth != depths[n] || l.index >= s.rows(l.depth, l.type)) {
        why << "bad label on node " << n;
        return why.str();
      }
    }
  }
  if (s.results().size() != g.results().size()) return "result count";
  if (LowerGraph(g, RandomGraphOpNames()).Dump() != s.Dump()) return "rebuild differs";
  return "";
}

double GradientCheck(const CompiledModel& model, const std::vector<HostValue>& batch,
                     ParameterStore& params, double step, std::string* worst_name,
                     ErrorScale scale) {
  BatchPlan plan = model.Plan(batch);
  GradientStore grads;
  LossAndGradients(model, plan, params, &grads);
  double worst = 0.0;
  double worst_diff = 0.0;
  double numeric_scale = 0.0;
  for (const std::string& name : params.names()) {
    Tensor analytic = grads.GetOrZeros(name, params);
    Tensor& p = params.Mutable(name);
    std::vector<double> numeric(static_cast<size_t>(p.num_elements()));
    for (int64_t i = 0; i < p.num_elements(); ++i) {
      const double original = p.ElementAsDouble(i);
      auto set = [&](double v) {
        DispatchFloating(p.dtype(), "GradientCheck",
                         [&](auto tag) { p.mutable_data<decltype(tag)>()[i] = v; });
      };
      set(original + step);
      const double up = Loss(model, plan, params);
      set(original - step);
      const double down = Loss(model, plan, params);
      set(original);
      numeric[i] = (up - down) / (2 * step);
    }
    const std::vector<double> a = analytic.ToDoubles();
    double diff = 0.0;
    for (size_t i = 0; i < numeric.size(); ++i) {
      diff = std::max(diff, std::abs(a[i] - numeric[i]));
      numeric_scale = std::max(numeric_scale, std::abs(numeric[i]));
    }
    const double err =
        MaxRelErr(analytic, Tensor::FromDoubles(p.dtype(), p.shape(), numeric));
    const bool worse = scale == ErrorScale::kPerTensor ? err > worst : diff > worst_diff;
    if (worse && worst_name) *worst_name = name;
    worst = std::max(worst, err);
    worst_diff = std::max(worst_diff, diff);
  }
  if (scale == ErrorScale::kPerTensor) return worst;
  return numeric_scale > 0.0 ? worst_diff / numeric_scale : worst_diff;
}

}  // namespace dynbatch::testing
