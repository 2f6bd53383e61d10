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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <sstream>

#include "dynbatch/checkpoint.h"
#include "dynbatch/compiler.h"
#include "dynbatch/error.h"
#include "dynbatch/ops.h"
#include "dynbatch/optimizer.h"
#include "dynbatch/trainer.h"
#include "test_util.h"

namespace dynbatch {
namespace {

using testing::MaxRelErr;
using testing::RandomTensor;

double Dot(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
  double s = 0;
  for (size_t k = 0; k < a.size(); ++k) {
    const auto x = a[k].ToDoubles();
    const auto y = b[k].ToDoubles();
    for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  }
  return s;
}

// Checks an operation's Backward against central differences of
// <Forward(inputs), w> for random w, over float inputs and parameters.
double OpGradientError(const Operation& op, std::vector<Tensor> inputs, ParameterStore& params,
                       std::mt19937_64& rng) {
  std::vector<Tensor> outputs = op.Forward(inputs, params);
  std::vector<Tensor> w;
  for (const Tensor& o : outputs) w.push_back(RandomTensor(o.dtype(), o.shape(), rng));
  GradientStore grads;
  std::vector<Tensor> dx = op.Backward(inputs, outputs, w, params, &grads);
  auto objective = [&] { return Dot(op.Forward(inputs, params), w); };
  const double h = 1e-6;
  double worst = 0;
  auto check = [&](Tensor& x, const Tensor& analytic) {
    std::vector<double> num(static_cast<size_t>(x.num_elements()));
    auto d = x.mutable_data<double>();
    for (size_t i = 0; i < num.size(); ++i) {
      const double orig = d[i];
      d[i] = orig + h;
      const double up = objective();
      d[i] = orig - h;
      const double down = objective();
      d[i] = orig;
      num[i] = (up - down) / (2 * h);
    }
    worst = std::max(worst, MaxRelErr(analytic, Tensor::FromVector<double>(x.shape(), num)));
  };
  for (size_t k = 0; k < inputs.size(); ++k) {
    if (inputs[k].dtype() == DType::kFloat64) check(inputs[k], dx[k]);
  }
  for (const std::string& name : params.names()) {
    Tensor analytic = grads.GetOrZeros(name, params);
    check(params.Mutable(name), analytic);
  }
  return worst;
}

TEST(OperationsTest, EmbeddingLooksUpRows) {
  Tensor table = Tensor::FromVector<float>({5, 3}, {0, 0, 0, 1, 1, 1, 7, 8, 9, 2, 2, 2, 3, 3, 3});
  auto op = Embedding("e", table);
  ParameterStore params;
  params.Initialize(op->parameters(), 1);
  std::vector<Tensor> in = {Tensor::FromVector<int32_t>({1}, {2})};
  EXPECT_EQ(op->Forward(in, params)[0], Tensor::FromVector<float>({1, 3}, {7, 8, 9}));
  std::vector<Tensor> bad = {Tensor::FromVector<int32_t>({1}, {5})};
  EXPECT_THROW(op->Forward(bad, params), Error);
}

TEST(OperationsTest, ZeroFullyConnectedIsZero) {
  auto op = FullyConnected("fc", 3, 2, kernels::UnaryKind::kRelu, DType::kFloat64);
  ParameterStore params;
  params.Initialize(op->parameters(), 1);
  params.Set("fc/weights", Tensor(DType::kFloat64, {3, 2}));
  std::mt19937_64 rng(1);
  std::vector<Tensor> in = {RandomTensor(DType::kFloat64, {4, 3}, rng)};
  EXPECT_EQ(op->Forward(in, params)[0], Tensor(DType::kFloat64, {4, 2}));
}

TEST(OperationsTest, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(2);
  const DType f64 = DType::kFloat64;
  struct Case {
    std::unique_ptr<Operation> op;
    std::vector<Shape> shapes;
  };
  std::vector<Case> cases;
  cases.push_back({FullyConnected("fc", 3, 4, kernels::UnaryKind::kTanh, f64), {{5, 3}}});
  cases.push_back({FullyConnected("lin", 3, 2, std::nullopt, f64), {{2, 3}}});
  cases.push_back({TreeLstmCell("packed", {.state_dim = 3, .packed = true, .dtype = f64}),
                   {{4, 6}, {4, 6}}});
  cases.push_back({TreeLstmCell("unpacked", {.input_dim = 2, .state_dim = 3, .dtype = f64}),
                   {{70, 2}, {70, 3}, {70, 3}, {70, 3}, {70, 3}}});
  for (Case& c : cases) {
    ParameterStore params;
    params.Initialize(c.op->parameters(), 3);
    // Nonzero biases so every term is exercised.
    for (const std::string& name : params.names()) {
      Tensor& p = params.Mutable(name);
      p = RandomTensor(f64, p.shape(), rng, 0.5);
    }
    std::vector<Tensor> inputs;
    for (const Shape& s : c.shapes) inputs.push_back(RandomTensor(f64, s, rng));
    EXPECT_LT(OpGradientError(*c.op, inputs, params, rng), 1e-6) << c.op->name();
  }
}

TEST(OperationsTest, EmbeddingGradientAccumulatesDuplicates) {
  auto op = Embedding("e", 4, 2, DType::kFloat64);
  ParameterStore params;
  params.Initialize(op->parameters(), 1);
  std::vector<Tensor> in = {Tensor::FromVector<int32_t>({3}, {1, 1, 3})};
  std::vector<Tensor> out = op->Forward(in, params);
  std::vector<Tensor> dy = {Tensor::FromVector<double>({3, 2}, {1, 2, 3, 4, 5, 6})};
  GradientStore grads;
  op->Backward(in, out, dy, params, &grads);
  EXPECT_EQ(*grads.Find("e"), Tensor::FromVector<double>({4, 2}, {0, 0, 4, 6, 0, 0, 5, 6}));
}

TEST(OperationsTest, TreeLstmHiddenStateIsBounded) {
  auto op = TreeLstmCell("c", {.state_dim = 4, .packed = true});
  ParameterStore params;
  params.Initialize(op->parameters(), 1);
  std::mt19937_64 rng(4);
  std::vector<Tensor> in = {RandomTensor(DType::kFloat32, {32, 8}, rng, 50.0),
                            RandomTensor(DType::kFloat32, {32, 8}, rng, 50.0)};
  Tensor out = op->Forward(in, params)[0];
  for (int r = 0; r < 32; ++r) {
    for (int j = 0; j < 4; ++j) EXPECT_LE(std::abs(out.ElementAsDouble(r * 8 + j)), 1.0);
  }
}

class TreeModelTest : public ::testing::Test {
 protected:
  void Build(DType dtype) {
    registry_ = OperationRegistry();
    registry_.Register(Embedding("embed", 16, 6, dtype));
    registry_.Register(TreeLstmCell("cell", {.state_dim = 3, .packed = true, .dtype = dtype}));
    model_ = CompiledModel::Compile(testing::ToyTreeBlock("embed", "cell"), registry_);
    params_ = ParameterStore();
    model_.InitializeParameters(params_, 7);
    // Nonzero biases.
    std::mt19937_64 rng(8);
    params_.Set("cell/b", RandomTensor(dtype, params_.Get("cell/b").shape(), rng));
  }

  std::vector<Tensor> Naive(const HostValue& tree) {
    TracedGraph t = model_.Trace(tree);
    return EvaluateNaive(t.graph, model_.kernels(), params_);
  }

  OperationRegistry registry_;
  CompiledModel model_;
  ParameterStore params_;
};

TEST_F(TreeModelTest, ForwardMatchesNaiveEvaluator) {
  std::mt19937_64 rng(9);
  for (DType dtype : {DType::kFloat32, DType::kFloat64}) {
    Build(dtype);
    const double tol = dtype == DType::kFloat32 ? 1e-6 : 1e-12;
    for (int trial = 0; trial < 30; ++trial) {
      HostValue tree = testing::RandomHostTree(1 + static_cast<int>(rng() % 20), 16, rng);
      std::vector<HostValue> batch = {tree};
      EXPECT_LT(MaxRelErr(model_.Evaluate(batch, params_)[0], Naive(tree)), tol);
    }
  }
}

TEST_F(TreeModelTest, MergedBatchMatchesIndependentRuns) {
  Build(DType::kFloat32);
  std::mt19937_64 rng(10);
  std::vector<HostValue> batch;
  for (int k = 0; k < 7; ++k) {
    batch.push_back(testing::RandomHostTree(1 + static_cast<int>(rng() % 12), 16, rng));
  }
  auto merged = model_.Evaluate(batch, params_);
  for (size_t k = 0; k < batch.size(); ++k) {
    std::vector<HostValue> one = {batch[k]};
    EXPECT_LT(MaxRelErr(merged[k], model_.Evaluate(one, params_)[0]), 1e-6);
  }
}

TEST_F(TreeModelTest, ThreadedForwardIsBitIdentical) {
  Build(DType::kFloat32);
  std::mt19937_64 rng(11);
  std::vector<HostValue> batch;
  for (int k = 0; k < 6; ++k) batch.push_back(testing::RandomHostTree(10, 16, rng));
  BatchPlan plan = model_.Plan(batch);
  ForwardResult one = model_.MakeExecutor().Forward(plan.schedule, params_, Mode::kInfer);
  ForwardResult four =
      model_.MakeExecutor({.num_threads = 4}).Forward(plan.schedule, params_, Mode::kInfer);
  ForwardResult again = model_.MakeExecutor().Forward(plan.schedule, params_, Mode::kInfer);
  EXPECT_EQ(one.results, four.results);
  EXPECT_EQ(one.results, again.results);
}

TEST_F(TreeModelTest, KernelCallsCountNonEmptyGroups) {
  Build(DType::kFloat32);
  std::vector<HostValue> batch = {testing::Figure1Tree()};
  BatchPlan plan = model_.Plan(batch);
  ForwardResult r = model_.MakeExecutor().Forward(plan.schedule, params_, Mode::kTrain);
  EXPECT_EQ(r.stats.kernel_calls, 3);  // embed at d=1, cell at d=2 and d=3
  EXPECT_EQ(r.stats.pass_through_groups, 1);
  EXPECT_EQ(r.stats.calls_per_op.at("embed"), 1);
  EXPECT_EQ(r.stats.calls_per_op.at("cell"), 2);
  ASSERT_TRUE(r.tape.has_value());
  EXPECT_EQ(r.tape->max_depth(), plan.schedule.max_depth());
}

TEST_F(TreeModelTest, GradientsMatchFiniteDifferences) {
  Build(DType::kFloat64);
  std::mt19937_64 rng(12);
  std::vector<HostValue> batch;
  for (int k = 0; k < 3; ++k) batch.push_back(testing::RandomHostTree(5, 16, rng));
  std::string worst;
  EXPECT_LT(testing::GradientCheck(model_, batch, params_, 1e-5, &worst), 1e-6) << worst;
}

TEST(ExecutorTest, SingleConstantReturnsIt) {
  OperationRegistry registry;
  CompiledModel m = CompiledModel::Compile(Scalar(DType::kFloat32), registry);
  ParameterStore params;
  std::vector<HostValue> batch = {HostValue(2.5)};
  EXPECT_EQ(m.Evaluate(batch, params)[0][0], Tensor::FromVector<float>({}, {2.5f}));
}

TEST(ExecutorTest, FigureOneSumsWordVectors) {
  // cell = [I; I] applied to the concatenated children: the root is the sum
  // of the three word vectors.
  OperationRegistry registry;
  Tensor table = Tensor::FromVector<double>({6, 2}, {0, 0, 1, 2, 0, 0, 10, 20, 0, 0, 100, 200});
  registry.Register(Embedding("embed", table));
  registry.Register(FullyConnected("cell", 4, 2, std::nullopt, DType::kFloat64));
  auto expr = ForwardDeclaration::Create();
  Block leaf = Scalar(DType::kInt32) >> Function("embed");
  Block pair = Record({{"l", (*expr)()}, {"r", (*expr)()}}) >> Concat() >> Function("cell");
  expr->ResolveTo(OneOf([](const HostValue& h) { return HostValue(h.is_list() ? 2 : 1); },
                        {{1, leaf}, {2, pair}}));
  CompiledModel m = CompiledModel::Compile((*expr)(), registry);
  ParameterStore params;
  m.InitializeParameters(params, 1);
  params.Set("cell/weights", Tensor::FromVector<double>({4, 2}, {1, 0, 0, 1, 1, 0, 0, 1}));
  params.Set("cell/bias", Tensor(DType::kFloat64, {2}));
  std::vector<HostValue> batch = {testing::Figure1Tree()};
  EXPECT_EQ(m.Evaluate(batch, params)[0][0], Tensor::FromVector<double>({2}, {111, 222}));
}

TEST(ExecutorTest, LinearLayerGradientIsTheInput) {
  // loss = sum(x W + b): dW[i][j] = mean over the batch of x_i, db = 1.
  OperationRegistry registry;
  registry.Register(FullyConnected("fc", 2, 3, std::nullopt, DType::kFloat64));
  CompiledModel m = CompiledModel::Compile(
      TensorInput(TensorType(DType::kFloat64, {2})) >> Function("fc"), registry);
  ParameterStore params;
  m.InitializeParameters(params, 1);
  std::vector<HostValue> batch = {HostValue(HostValue::List{1.0, 2.0}),
                                  HostValue(HostValue::List{3.0, -4.0})};
  GradientStore grads;
  LossAndGradients(m, m.Plan(batch), params, &grads);
  EXPECT_EQ(*grads.Find("fc/weights"),
            Tensor::FromVector<double>({2, 3}, {2, 2, 2, -1, -1, -1}));
  EXPECT_EQ(*grads.Find("fc/bias"), Tensor::FromVector<double>({3}, {1, 1, 1}));
}

TEST(ExecutorTest, SharedParameterSumsOverDepths) {
  OperationRegistry registry;
  registry.Register(FullyConnected("fc", 2, 2, kernels::UnaryKind::kTanh, DType::kFloat64));
  Block in = TensorInput(TensorType(DType::kFloat64, {2}));
  Block three = in >> Function("fc") >> Function("fc") >> Function("fc");
  CompiledModel m = CompiledModel::Compile(three, registry);
  ParameterStore params;
  m.InitializeParameters(params, 2);
  std::vector<HostValue> batch = {HostValue(HostValue::List{0.3, -0.7})};
  EXPECT_LT(testing::GradientCheck(m, batch, params), 1e-6);

  // Oracle: an untied copy with one layer per depth, all three starting
  // from the shared weights; the tied gradient is the sum of theirs.
  for (const char* name : {"fc_a", "fc_b", "fc_c"}) {
    registry.Register(FullyConnected(name, 2, 2, kernels::UnaryKind::kTanh, DType::kFloat64));
    params.Set(std::string(name) + "/weights", params.Get("fc/weights"));
    params.Set(std::string(name) + "/bias", params.Get("fc/bias"));
  }
  CompiledModel untied = CompiledModel::Compile(
      in >> Function("fc_a") >> Function("fc_b") >> Function("fc_c"), registry);
  GradientStore tied_grads, untied_grads;
  LossAndGradients(m, m.Plan(batch), params, &tied_grads);
  LossAndGradients(untied, untied.Plan(batch), params, &untied_grads);
  for (const char* suffix : {"/weights", "/bias"}) {
    Tensor sum = *untied_grads.Find(std::string("fc_a") + suffix);
    kernels::AddInto(sum, *untied_grads.Find(std::string("fc_b") + suffix));
    kernels::AddInto(sum, *untied_grads.Find(std::string("fc_c") + suffix));
    EXPECT_LT(MaxRelErr(*tied_grads.Find(std::string("fc") + suffix), sum), 1e-12);
  }
}

TEST(ExecutorTest, UnusedParametersGetZeroGradients) {
  ParameterStore params;
  params.Set("unused", Tensor::FromVector<double>({2}, {1, 2}));
  GradientStore grads;
  EXPECT_EQ(grads.Find("unused"), nullptr);
  EXPECT_EQ(grads.GetOrZeros("unused", params), Tensor(DType::kFloat64, {2}));
}

TEST(OptimizerTest, SgdStepsByTheGradient) {
  ParameterStore params;
  params.Set("x", Tensor::FromVector<double>({2}, {1, 2}));
  GradientStore grads;
  grads.Add("x", Tensor::FromVector<double>({2}, {0.5, -1}));
  Sgd(1.0).Step(params, grads);
  EXPECT_EQ(params.Get("x"), Tensor::FromVector<double>({2}, {0.5, 3}));
}

TEST(OptimizerTest, AdamFirstStepIsLearningRate) {
  for (double scale : {1e-4, 1.0, 1e4}) {
    ParameterStore params;
    params.Set("x", Tensor::FromVector<double>({1}, {0}));
    GradientStore grads;
    grads.Add("x", Tensor::FromVector<double>({1}, {scale}));
    Adam adam({.learning_rate = 0.01});
    adam.Step(params, grads);
    EXPECT_NEAR(params.Get("x").ElementAsDouble(0), -0.01, 1e-6) << scale;
    EXPECT_EQ(adam.steps(), 1);
  }
}

TEST(OptimizerTest, AdamMinimizesAQuadratic) {
  ParameterStore params;
  params.Set("x", Tensor::FromVector<double>({1}, {1}));
  Adam adam({.learning_rate = 0.05});
  for (int t = 0; t < 200; ++t) {
    GradientStore grads;
    grads.Add("x", Tensor::FromVector<double>({1}, {2 * params.Get("x").ElementAsDouble(0)}));
    adam.Step(params, grads);
  }
  EXPECT_LT(std::abs(params.Get("x").ElementAsDouble(0)), 1e-3);
}

TEST(ParameterStoreTest, InitializationIsSeededAndOrderIndependent) {
  std::vector<ParameterSpec> specs = {
      {.name = "w", .shape = {10, 6}},
      {.name = "b", .shape = {6}, .init = Initializer::kZeros},
  };
  ParameterStore a, b;
  a.Initialize(specs, 3);
  b.Initialize({specs[1], specs[0]}, 3);
  EXPECT_EQ(a.Get("w"), b.Get("w"));
  EXPECT_EQ(a.Get("b"), Tensor(DType::kFloat32, {6}));
  const double r = std::sqrt(6.0 / 16.0);
  double maxabs = 0;
  for (double v : a.Get("w").ToDoubles()) maxabs = std::max(maxabs, std::abs(v));
  EXPECT_LE(maxabs, r);
  EXPECT_GT(maxabs, r / 2);
  ParameterStore c;
  c.Initialize(specs, 4);
  EXPECT_NE(a.Get("w"), c.Get("w"));
  EXPECT_THROW(a.Initialize({{.name = "w", .shape = {2, 2}}}, 3), Error);
}

TEST(CheckpointTest, RoundTrip) {
  ParameterStore params;
  std::mt19937_64 rng(1);
  params.Set("a/w", RandomTensor(DType::kFloat32, {3, 4}, rng));
  params.Set("b", RandomTensor(DType::kFloat64, {5}, rng));
  params.Set("ids", Tensor::FromVector<int32_t>({2}, {7, -1}));
  params.Set("scalar", Tensor::FromVector<double>({}, {3.5}));
  std::stringstream buf;
  WriteCheckpoint(params, buf);
  ParameterStore back = ReadCheckpoint(buf);
  EXPECT_EQ(back.values(), params.values());

  const std::string path = ::testing::TempDir() + "/dynbatch_ckpt_test.bin";
  SaveCheckpoint(params, path);
  EXPECT_EQ(LoadCheckpoint(path).values(), params.values());
  std::remove(path.c_str());
}

TEST(CheckpointTest, MalformedInputIsAnIoError) {
  ParameterStore params;
  params.Set("w", Tensor::FromVector<float>({2}, {1, 2}));
  std::stringstream buf;
  WriteCheckpoint(params, buf);
  std::string bytes = buf.str();
  for (size_t cut : {size_t{0}, size_t{5}, bytes.size() - 1}) {
    std::stringstream truncated(bytes.substr(0, cut));
    try {
      ReadCheckpoint(truncated);
      ADD_FAILURE() << "cut " << cut;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kIO);
    }
  }
  EXPECT_THROW(LoadCheckpoint("/nonexistent/dir/ckpt.bin"), Error);
}

}  // namespace
}  // namespace dynbatch
