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

#include "dynbatch/bench/bench.h"

#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "dynbatch/error.h"
#include "dynbatch/io/tree.h"
#include "dynbatch/trainer.h"
#include "test_util.h"

namespace dynbatch::bench {
namespace {

using testing::MaxRelErr;

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kContract;
}

std::string ShapeKey(const HostValue& t) {
  if (io::IsLeaf(t)) return "x";
  return "(" + ShapeKey(io::Left(t)) + " " + ShapeKey(io::Right(t)) + ")";
}

TEST(GenRandomTreeTest, FixedShapeIsCompleteForPowersOfTwo) {
  for (int64_t n : {1, 2, 8, 128}) {
    HostValue t = GenRandomTree(n, ShapeMode::kFixed, 16, uint64_t{3});
    EXPECT_EQ(io::CountLeaves(t), n);
    int64_t height = 0;
    while ((int64_t{1} << height) < n) ++height;
    EXPECT_EQ(io::TreeHeight(t), height);
  }
  HostValue a = GenRandomTree(37, ShapeMode::kFixed, 16, uint64_t{1});
  HostValue b = GenRandomTree(37, ShapeMode::kFixed, 16, uint64_t{2});
  EXPECT_TRUE(io::SameShape(a, b));
}

TEST(GenRandomTreeTest, RandomShapesAreUniform) {
  // Binary trees with 4 leaves: Catalan(3) = 5 shapes, each with probability 1/5.
  std::mt19937_64 rng(4);
  std::map<std::string, int> counts;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    HostValue t = GenRandomTree(4, ShapeMode::kRandom, 16, rng);
    ASSERT_EQ(io::CountLeaves(t), 4);
    ++counts[ShapeKey(t)];
  }
  ASSERT_EQ(counts.size(), 5u);
  for (const auto& [shape, c] : counts) {
    EXPECT_NEAR(c, draws / 5.0, 5 * std::sqrt(draws * 0.2 * 0.8)) << shape;
  }
  for (int i = 0; i < 20; ++i) {
    HostValue t = GenRandomTree(128, ShapeMode::kRandom, 16, rng);
    EXPECT_EQ(io::CountLeaves(t), 128);
  }
  EXPECT_EQ(GenRandomTree(50, ShapeMode::kRandom, 16, uint64_t{9}),
            GenRandomTree(50, ShapeMode::kRandom, 16, uint64_t{9}));
}

TEST(ParseTest, Spellings) {
  EXPECT_EQ(ParseBatchMode("full-dynamic"), BatchMode::kFullDynamic);
  EXPECT_EQ(ParseBatchMode(ToString(BatchMode::kFullDynamic)), BatchMode::kFullDynamic);
  EXPECT_EQ(ParsePhase("train"), Phase::kTrain);
  EXPECT_EQ(ParseShapeMode("random"), ShapeMode::kRandom);
  EXPECT_EQ(CodeOf([] { ParseBatchMode("static"); }), ErrorCode::kConfig);
  EXPECT_EQ(CodeOf([] { ParsePhase("eval"); }), ErrorCode::kConfig);
}

TEST(ConfigTest, Validation) {
  BenchConfig c;
  EXPECT_NO_THROW(ValidateConfig(c));
  c.repeats = 2;
  EXPECT_EQ(CodeOf([&] { ValidateConfig(c); }), ErrorCode::kConfig);
  c = BenchConfig();
  c.tree_size = 0;
  EXPECT_EQ(CodeOf([&] { ValidateConfig(c); }), ErrorCode::kConfig);
  c = BenchConfig();
  c.shape = ShapeMode::kRandom;
  EXPECT_EQ(CodeOf([&] { ValidateConfig(c); }), ErrorCode::kConfig);
  c.modes = {BatchMode::kDynamic};
  EXPECT_NO_THROW(ValidateConfig(c));
}

class ManualTest : public ::testing::Test {
 protected:
  ManualTest() : bench_(5, 16, 7, DType::kFloat64) {}

  TreeBench bench_;
};

TEST_F(ManualTest, KernelCallsOnACompleteTree) {
  HostValue tree = GenRandomTree(128, ShapeMode::kFixed, 16, uint64_t{1});
  std::vector<HostValue> batch = {tree};
  BatchPlan plan = bench_.model().Plan(batch);
  ForwardResult r = bench_.model().MakeExecutor().Forward(plan.schedule, bench_.params(),
                                                          Mode::kInfer);
  EXPECT_EQ(r.stats.calls_per_op.at(bench_.tree_model().cell_op), 7);
  EXPECT_EQ(r.stats.calls_per_op.at(bench_.tree_model().embedding_op), 1);

  ManualBaseline manual(bench_.embedding(), bench_.cell(), tree);
  int64_t embeds = 0, cells = 0;
  manual.Forward(manual.Prepare(batch), bench_.params(), nullptr, &embeds, &cells);
  EXPECT_EQ(cells, 127);
  EXPECT_EQ(embeds, 128);
  EXPECT_EQ(manual.num_leaves(), 128);
  EXPECT_EQ(manual.num_nodes(), 255);
}

TEST_F(ManualTest, ModesAgree) {
  std::mt19937_64 rng(8);
  HostValue shape = GenRandomTree(13, ShapeMode::kRandom, 16, rng);
  std::vector<HostValue> trees;
  for (int i = 0; i < 6; ++i) {
    // Same topology as `shape`, fresh words.
    std::function<HostValue(const HostValue&)> rewrite = [&](const HostValue& s) {
      if (io::IsLeaf(s)) return io::MakeLeaf(static_cast<int64_t>(rng() % 16));
      return io::MakePair(rewrite(io::Left(s)), rewrite(io::Right(s)));
    };
    trees.push_back(rewrite(shape));
  }
  ManualBaseline manual(bench_.embedding(), bench_.cell(), shape);
  ManualBaseline::Batch batch = manual.Prepare(trees);
  ManualBaseline::Tape tape;
  Tensor roots = manual.Forward(batch, bench_.params(), &tape);
  auto dynamic = bench_.model().Evaluate(trees, bench_.params());
  for (size_t k = 0; k < trees.size(); ++k) {
    Tensor row = roots.SliceRows(static_cast<int64_t>(k), 1).Reshaped(dynamic[k][0].shape());
    EXPECT_LT(MaxRelErr(row, dynamic[k][0]), 1e-12);
  }

  // Training gradients: mean over the batch of the summed root state.
  GradientStore manual_grads, dynamic_grads;
  Tensor root_grad = Tensor::Filled(DType::kFloat64, roots.shape(), 1.0 / trees.size());
  manual.Backward(batch, tape, bench_.params(), root_grad, &manual_grads);
  LossAndGradients(bench_.model(), bench_.model().Plan(trees), bench_.params(), &dynamic_grads);
  for (const auto& [name, g] : dynamic_grads.grads()) {
    ASSERT_NE(manual_grads.Find(name), nullptr) << name;
    EXPECT_LT(MaxRelErr(*manual_grads.Find(name), g), 1e-12) << name;
  }
}

TEST_F(ManualTest, RejectsOtherShapes) {
  HostValue shape = GenRandomTree(8, ShapeMode::kFixed, 16, uint64_t{1});
  ManualBaseline manual(bench_.embedding(), bench_.cell(), shape);
  std::vector<HostValue> trees = {shape, io::MakePair(io::MakeLeaf(1), io::MakeLeaf(2))};
  EXPECT_EQ(CodeOf([&] { manual.Prepare(trees); }), ErrorCode::kConfig);
}

BenchReport SampleReport() {
  BenchReport r;
  auto row = [](BatchMode m, int64_t b, double batch_time) {
    BenchRow x;
    x.mode = m;
    x.batch_size = b;
    x.tree_size = 8;
    x.state_size = 4;
    x.batch_time_s = batch_time;
    x.tree_time_s = batch_time / b;
    return x;
  };
  r.rows = {row(BatchMode::kManual, 1, 1e-3), row(BatchMode::kManual, 4, 2e-3),
            row(BatchMode::kDynamic, 1, 2e-3), row(BatchMode::kDynamic, 4, 3e-3),
            row(BatchMode::kFullDynamic, 1, 2e-3), row(BatchMode::kFullDynamic, 4, 2e-3)};
  ComputeRatios(r);
  return r;
}

TEST(ReportTest, Ratios) {
  BenchReport r = SampleReport();
  EXPECT_DOUBLE_EQ(*r.Find(BatchMode::kDynamic, 1)->cost_ratio, 2.0);
  EXPECT_DOUBLE_EQ(*r.Find(BatchMode::kDynamic, 4)->cost_ratio, 1.5);
  EXPECT_DOUBLE_EQ(*r.Find(BatchMode::kFullDynamic, 4)->speedup_ratio, 2.0);
  EXPECT_FALSE(r.Find(BatchMode::kManual, 1)->cost_ratio.has_value());
  EXPECT_EQ(r.Find(BatchMode::kManual, 2), nullptr);
}

TEST(ReportTest, CsvRoundTrip) {
  BenchReport r = SampleReport();
  std::stringstream out;
  WriteCsv(r, out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), kCsvHeader);
  BenchReport back = ReadCsv(out);
  ASSERT_EQ(back.rows.size(), r.rows.size());
  for (size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].mode, r.rows[i].mode);
    EXPECT_EQ(back.rows[i].batch_size, r.rows[i].batch_size);
    EXPECT_DOUBLE_EQ(back.rows[i].batch_time_s, r.rows[i].batch_time_s);
    EXPECT_EQ(back.rows[i].cost_ratio.has_value(), r.rows[i].cost_ratio.has_value());
  }
}

TEST(ReportTest, CheckerRejectsBadFiles) {
  std::stringstream good;
  WriteCsv(SampleReport(), good);
  const std::string text = good.str();
  auto check = [](const std::string& s) {
    std::stringstream in(s);
    return CodeOf([&] { ReadCsv(in); });
  };
  EXPECT_EQ(check(""), ErrorCode::kIO);
  EXPECT_EQ(check("mode,phase\n"), ErrorCode::kIO);
  EXPECT_EQ(check(std::string(kCsvHeader) + "\nmanual,infer,1,8,4\n"), ErrorCode::kIO);
  EXPECT_EQ(check(std::string(kCsvHeader) + "\nmanual,infer,1,8,4,0.001,0.5,,\n"),
            ErrorCode::kIO);
  EXPECT_EQ(check(std::string(kCsvHeader) + "\nbogus,infer,1,8,4,0.001,0.001,,\n"),
            ErrorCode::kIO);
  EXPECT_EQ(check(std::string(kCsvHeader) + "\nmanual,infer,1,8,4,0.001,0.001,2,\n"),
            ErrorCode::kIO);
  // A ratio that does not follow from the times.
  std::string tampered = text;
  const size_t pos = tampered.find(",1.5");
  ASSERT_NE(pos, std::string::npos) << text;
  tampered.replace(pos, 4, ",1.7");
  try {
    std::stringstream in(tampered);
    ReadCsv(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
  }
}

TEST(RunBenchmarkTest, SmallRunIsConsistent) {
  for (Phase phase : {Phase::kInfer, Phase::kTrain}) {
    BenchConfig c;
    c.phase = phase;
    c.batch_sizes = {1, 4};
    c.tree_size = 8;
    c.state_size = 4;
    c.repeats = 3;
    BenchReport r = RunBenchmark(c);
    ASSERT_EQ(r.rows.size(), 6u);
    for (const BenchRow& row : r.rows) {
      EXPECT_EQ(row.phase, phase);
      EXPECT_GT(row.batch_time_s, 0);
      EXPECT_DOUBLE_EQ(row.tree_time_s, row.batch_time_s / row.batch_size);
    }
    std::stringstream csv;
    WriteCsv(r, csv);
    EXPECT_EQ(ReadCsv(csv).rows.size(), 6u);
  }
}

}  // namespace
}  // namespace dynbatch::bench
