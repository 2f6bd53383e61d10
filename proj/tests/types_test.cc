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

#include "dynbatch/types.h"

#include <gtest/gtest.h>

#include "dynbatch/block.h"
#include "dynbatch/compiler.h"
#include "dynbatch/error.h"
#include "dynbatch/models/text_pipeline.h"
#include "dynbatch/models/tree_rnn.h"
#include "dynbatch/ops.h"
#include "dynbatch/type_inference.h"

namespace dynbatch {
namespace {

BlockType F32(Shape s) { return BlockType::Tensor(DType::kFloat32, std::move(s)); }

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kContract;
}

TEST(TypeEqualTest, Examples) {
  EXPECT_TRUE(TypeEqual(F32({3}), F32({3})));
  EXPECT_FALSE(TypeEqual(BlockType::Seq(F32({3})), F32({3})));
  EXPECT_FALSE(TypeEqual(F32({3}), BlockType::Tensor(DType::kFloat64, {3})));
  EXPECT_TRUE(TypeEqual(BlockType::Input(), BlockType::Input()));
  // A jagged array: a scalar paired with a sequence of 3x4 integer matrices.
  BlockType jagged = BlockType::Tuple(
      {F32({}), BlockType::Seq(BlockType::Tensor(DType::kInt32, {3, 4}))});
  EXPECT_TRUE(TypeEqual(jagged, jagged));
  // One-element tuples do not collapse.
  EXPECT_FALSE(TypeEqual(BlockType::Tuple({F32({3})}), F32({3})));
}

TEST(TypeEqualTest, TupleArityMustBePositive) {
  EXPECT_THROW(BlockType::Tuple({}), Error);
}

TEST(TypePrinterTest, Grammar) {
  EXPECT_EQ(F32({2, 3}).ToString(), "f32[2,3]");
  EXPECT_EQ(BlockType::Tensor(DType::kInt32, {}).ToString(), "i32[]");
  EXPECT_EQ(BlockType::Tuple({F32({1}), BlockType::Seq(F32({2}))}).ToString(),
            "(f32[1], seq<f32[2]>)");
  EXPECT_EQ(BlockType::Input().ToString(), "input");
  EXPECT_EQ(BlockType::Void().ToString(), "void");
  EXPECT_EQ(ParseTensorType("f64[4,1]"), TensorType(DType::kFloat64, {4, 1}));
  EXPECT_EQ(ParseTensorType("i32[]"), TensorType(DType::kInt32, {}));
  EXPECT_THROW(ParseTensorType("f16[2]"), Error);
}

TEST(TypeTreeTest, FlattenTensors) {
  BlockType t = BlockType::Tuple({F32({1}), BlockType::Tuple({F32({2}), F32({3})})});
  EXPECT_TRUE(t.IsTensorTree());
  EXPECT_EQ(t.FlattenTensors().size(), 3u);
  EXPECT_FALSE(BlockType::Seq(F32({1})).IsTensorTree());
  EXPECT_TRUE(BlockType::Seq(F32({1})).FlattenTensors().empty());
}

class InferTest : public ::testing::Test {
 protected:
  InferTest() : registry_(OperationRegistry::WithBuiltins()) {
    registry_.Register(Embedding("embed", 10, 4));
    registry_.Register(FullyConnected("fc", 4, 4, kernels::UnaryKind::kRelu));
    registry_.Register(FullyConnected("rnn", 8, 4, kernels::UnaryKind::kRelu));
  }

  Block Infer(Block b) {
    Block copy = CloneBlockTree(b.WithInputType(BlockType::Input()));
    InferTypes(copy, registry_);
    return copy;
  }

  OperationRegistry registry_;
};

TEST_F(InferTest, ScalarIsRankZero) {
  Block b = Infer(Scalar(DType::kInt32));
  EXPECT_EQ(*b.output_type(), BlockType::Tensor(DType::kInt32, {}));
}

TEST_F(InferTest, MapLiftsElementTypes) {
  Block b = Infer(Map(Scalar(DType::kInt32) >> Function("embed")));
  EXPECT_EQ(*b.output_type(), BlockType::Seq(F32({4})));
}

TEST_F(InferTest, FoldTakesTheStateType) {
  Block b = Infer(Map(Scalar(DType::kInt32) >> Function("embed")) >>
                  Fold(Concat() >> Function("rnn"), Zeros(TensorType(DType::kFloat32, {4}))));
  EXPECT_EQ(*b.output_type(), F32({4}));
}

TEST_F(InferTest, Idempotent) {
  Block b = Infer(Map(Scalar(DType::kInt32) >> Function("embed")) >> Sum());
  const std::string before = DumpBlock(b);
  InferTypes(b, registry_);
  EXPECT_EQ(DumpBlock(b), before);
}

TEST_F(InferTest, MismatchNamesTheLocation) {
  // embed produces f32[4] but rnn expects f32[8].
  try {
    Infer(Scalar(DType::kInt32) >> Function("embed") >> Function("rnn"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kType);
    EXPECT_NE(std::string(e.what()).find("TypeMismatch"), std::string::npos) << e.what();
  }
}

TEST_F(InferTest, UnknownOperation) {
  try {
    Infer(Scalar(DType::kFloat32) >> Function("nope"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("nope"), std::string::npos) << e.what();
  }
}

TEST_F(InferTest, UnderdeterminedZerosOnlyWhenNothingPinsThem) {
  // Sum over an input sequence whose element type is never pinned.
  try {
    Infer(Sum());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kType);
  }
}

TEST_F(InferTest, OneOfCasesMustAgree) {
  Block b = OneOf([](const HostValue&) { return HostValue(0); },
                  {{0, Scalar(DType::kInt32)}, {1, Scalar(DType::kFloat32)}});
  EXPECT_EQ(CodeOf([&] { Infer(b); }), ErrorCode::kType);
}

TEST(CheckSchedulableTest, PipelineEnumeration) {
  OperationRegistry registry = OperationRegistry::WithBuiltins();
  models::TextPipelineConfig config;
  config.word_matrix = Tensor(DType::kFloat32, {3, 5});
  config.word_idx = {{"a", 1}, {"b", 2}};
  config.state_dim = 4;
  config.num_classes = 3;
  models::TextPipeline p = models::BuildTextPipeline(config, registry);
  CompiledModel m = CompiledModel::Compile(p.loss, registry);
  EXPECT_EQ(m.op_names(), (std::vector<std::string>{"text/embedding", "text/rnn_cell",
                                                    "text/logits",
                                                    "softmax_cross_entropy<(f32[3],i32[])>"}));
}

TEST(CheckSchedulableTest, TreeRnnHasTwoOperations) {
  OperationRegistry registry;
  models::TreeRnnModel t = models::BuildTreeRnn({.vocab_size = 4, .state_dim = 2}, registry);
  CompiledModel m = CompiledModel::Compile(t.tree, registry);
  EXPECT_EQ(m.ops().size(), 2u);
  // Stable across compilations.
  EXPECT_EQ(CompiledModel::Compile(t.tree, registry).op_names(), m.op_names());
}

TEST(CheckSchedulableTest, NoFunctionsNoOperations) {
  OperationRegistry registry;
  CompiledModel m = CompiledModel::Compile(
      AllOf({Scalar(DType::kFloat32), Zeros(TensorType(DType::kFloat32, {2}))}), registry);
  EXPECT_TRUE(m.ops().empty());
}

}  // namespace
}  // namespace dynbatch
