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

#include <gtest/gtest.h>

#include <random>

#include "dynbatch/compiler.h"
#include "dynbatch/error.h"
#include "dynbatch/ops.h"
#include "dynbatch/schedule.h"
#include "test_util.h"

namespace dynbatch {
namespace {

const TensorType kA(DType::kFloat32, {2});
const TensorType kB(DType::kFloat32, {3});

using testing::RandomInvocationGraph;

Schedule Lower(const InvocationGraph& g) {
  return testing::LowerGraph(g, testing::RandomGraphOpNames());
}

TEST(ScheduleProperties, RandomGraphs) {
  std::mt19937_64 rng(2026);
  for (int trial = 0; trial < 1000; ++trial) {
    ASSERT_EQ(testing::ScheduleViolation(RandomInvocationGraph(rng, 40)), "") << "trial " << trial;
  }
}

TEST(ScheduleProperties, SeedDeterminism) {
  std::mt19937_64 a(99), b(99);
  for (int trial = 0; trial < 50; ++trial) {
    EXPECT_EQ(Lower(RandomInvocationGraph(a, 30)).Dump(),
              Lower(RandomInvocationGraph(b, 30)).Dump());
  }
}

TEST(MergeGraphsTest, Examples) {
  std::mt19937_64 rng(5);
  InvocationGraph g = RandomInvocationGraph(rng, 10);
  std::vector<InvocationGraph> one = {g};
  InvocationGraph m1 = MergeGraphs(one);
  EXPECT_EQ(m1.size(), g.size());
  EXPECT_EQ(m1.results(), g.results());

  InvocationGraph five;
  int32_t c = five.AddConstant(Tensor(DType::kFloat32, {2}));
  int32_t prev = c;
  for (int i = 0; i < 4; ++i) prev = five.AddInvocation(0, {InputSlot{{{prev, 0}}}}, {kA});
  five.results().push_back({prev, 0});
  std::vector<InvocationGraph> two = {five, five};
  std::vector<int32_t> offsets;
  InvocationGraph m2 = MergeGraphs(two, &offsets);
  EXPECT_EQ(m2.size(), 10);
  EXPECT_EQ(offsets, (std::vector<int32_t>{0, 5}));
  for (int32_t n = 5; n < 10; ++n) {
    for (const InputSlot& slot : m2.node(n).inputs) {
      for (const NodeRef& r : slot.parts) EXPECT_GE(r.node, 5);
    }
  }
  EXPECT_EQ(m2.results(), (std::vector<NodeRef>{{4, 0}, {9, 0}}));
}

TEST(AssignDepthsTest, Examples) {
  InvocationGraph single;
  single.AddConstant(Tensor(DType::kFloat32, {2}));
  EXPECT_EQ(AssignDepths(single), std::vector<int32_t>{0});

  InvocationGraph chain;
  int32_t prev = chain.AddConstant(Tensor(DType::kFloat32, {2}));
  for (int i = 0; i < 4; ++i) prev = chain.AddInvocation(0, {InputSlot{{{prev, 0}}}}, {kA});
  EXPECT_EQ(AssignDepths(chain), (std::vector<int32_t>{0, 1, 2, 3, 4}));

  InvocationGraph cyclic;
  cyclic.AddInvocation(0, {InputSlot{{{1, 0}}}}, {kA});
  cyclic.AddConstant(Tensor(DType::kFloat32, {2}));
  EXPECT_THROW(AssignDepths(cyclic), Error);
}

TEST(InsertPassThroughsTest, ConstantConsumedAtDepthThree) {
  InvocationGraph g;
  int32_t c0 = g.AddConstant(Tensor(DType::kFloat32, {2}));
  int32_t x = g.AddInvocation(0, {InputSlot{{{c0, 0}}}}, {kA});
  int32_t y = g.AddInvocation(0, {InputSlot{{{x, 0}}}}, {kA});
  int32_t late = g.AddConstant(Tensor(DType::kFloat32, {3}));
  int32_t z = g.AddInvocation(1, {InputSlot{{{y, 0}}}, InputSlot{{{late, 0}}}}, {kB});
  g.results().push_back({z, 0});
  std::vector<int32_t> depths = AssignDepths(g);
  EXPECT_EQ(depths[z], 3);
  InvocationGraph p = InsertPassThroughs(g, depths);
  int pass = 0;
  for (const GraphNode& n : p.nodes()) {
    if (n.kind == GraphNode::Kind::kPassThrough) {
      ++pass;
      EXPECT_EQ(n.outputs[0], kB);
    }
  }
  EXPECT_EQ(pass, 2);
  // Adjacent edges stay as they were.
  EXPECT_EQ(p.node(y).inputs[0].parts[0], (NodeRef{x, 0}));
}

TEST(InsertPassThroughsTest, ChainsAreSharedByConsumers) {
  InvocationGraph g;
  int32_t c = g.AddConstant(Tensor(DType::kFloat32, {2}));
  int32_t x = g.AddInvocation(0, {InputSlot{{{c, 0}}}}, {kA});
  int32_t y = g.AddInvocation(0, {InputSlot{{{x, 0}}}}, {kA});
  int32_t late = g.AddConstant(Tensor(DType::kFloat32, {3}));
  // Two depth-3 consumers of the same depth-0 constant.
  g.AddInvocation(1, {InputSlot{{{y, 0}}}, InputSlot{{{late, 0}}}}, {kB});
  g.AddInvocation(1, {InputSlot{{{y, 0}}}, InputSlot{{{late, 0}}}}, {kB});
  std::vector<int32_t> depths = AssignDepths(g);
  InvocationGraph p = InsertPassThroughs(g, depths);
  int pass = 0;
  for (const GraphNode& n : p.nodes()) pass += n.kind == GraphNode::Kind::kPassThrough;
  EXPECT_EQ(pass, 2);
  EXPECT_EQ(p.node(4).inputs[1].parts[0], p.node(5).inputs[1].parts[0]);
}

TEST(BuildScheduleTest, SingleConstant) {
  InvocationGraph g;
  g.AddConstant(Tensor::FromVector<float>({2}, {1, 2}));
  g.results().push_back({0, 0});
  Schedule s = Lower(g);
  EXPECT_EQ(s.max_depth(), 0);
  ASSERT_EQ(s.results().size(), 1u);
  EXPECT_EQ(s.results()[0], (EdgeLabel{0, 0, 0}));
}

TEST(BuildScheduleTest, UnknownOperation) {
  InvocationGraph g;
  int32_t c = g.AddConstant(Tensor(DType::kFloat32, {2}));
  g.AddInvocation(7, {InputSlot{{{c, 0}}}}, {kA});
  std::vector<int32_t> depths = AssignDepths(g);
  InvocationGraph p = InsertPassThroughs(g, depths);
  EXPECT_THROW(BuildSchedule(p, depths, testing::RandomGraphOpNames()), Error);
}

TEST(BuildScheduleTest, TwoIdenticalTreesOffsetTheSecond) {
  OperationRegistry registry;
  registry.Register(Embedding("embed", 8, 4));
  registry.Register(TreeLstmCell("cell", {.state_dim = 2, .packed = true}));
  CompiledModel m = CompiledModel::Compile(testing::ToyTreeBlock("embed", "cell"), registry);
  std::vector<HostValue> two = {testing::Figure1Tree(), testing::Figure1Tree()};
  EXPECT_EQ(m.Plan(two).schedule.Dump(),
            "d=0 op=const out_rows=6 type=i32[]\n"
            "d=1 op=embed in0=[0,1,2,3,4,5] out_rows=6 type=f32[4]\n"
            "d=2 op=cell in0=[0,3] in1=[1,4] out_rows=2 type=f32[4]\n"
            "d=2 op=pass in0=[2,5] out_rows=2 type=f32[4]\n"
            "d=3 op=cell in0=[0,1] in1=[2,3] out_rows=2 type=f32[4]\n"
            "result (3,f32[4],0)\n"
            "result (3,f32[4],1)\n");
}

}  // namespace
}  // namespace dynbatch
