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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <istream>
#if defined(__GLIBC__)
#include <malloc.h>
#endif
#include <ostream>
#include <sstream>

#include "dynbatch/io/tree.h"
#include "dynbatch/optimizer.h"
#include "dynbatch/trainer.h"

namespace dynbatch::bench {
namespace {

// log of the Catalan number C_n, the count of binary trees with n + 1 leaves.
double LogCatalan(int64_t n) {
  const double x = static_cast<double>(n);
  return std::lgamma(2 * x + 1) - std::lgamma(x + 1) - std::lgamma(x + 2);
}

int64_t RandomWord(int64_t vocab, std::mt19937_64& rng) {
  return std::uniform_int_distribution<int64_t>(0, vocab - 1)(rng);
}

HostValue FixedTree(int64_t leaves, int64_t vocab, std::mt19937_64& rng) {
  if (leaves == 1) return io::MakeLeaf(RandomWord(vocab, rng));
  HostValue left = FixedTree(leaves / 2, vocab, rng);
  return io::MakePair(std::move(left), FixedTree(leaves - leaves / 2, vocab, rng));
}

// A tree with n leaves splits into k and n - k leaves with probability
// C_{k-1} C_{n-k-1} / C_{n-1}, which makes every topology equally likely.
HostValue UniformTree(int64_t leaves, int64_t vocab, std::mt19937_64& rng) {
  if (leaves == 1) return io::MakeLeaf(RandomWord(vocab, rng));
  const double total = LogCatalan(leaves - 1);
  std::vector<double> weights(leaves - 1);
  for (int64_t k = 1; k < leaves; ++k) {
    weights[k - 1] = std::exp(LogCatalan(k - 1) + LogCatalan(leaves - k - 1) - total);
  }
  const int64_t left =
      1 + std::discrete_distribution<int64_t>(weights.begin(), weights.end())(rng);
  HostValue l = UniformTree(left, vocab, rng);
  return io::MakePair(std::move(l), UniformTree(leaves - left, vocab, rng));
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double Seconds(const std::function<void()>& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

ShapeMode ShapeFor(const BenchConfig& config, BatchMode mode) {
  if (config.shape) return *config.shape;
  return mode == BatchMode::kFullDynamic ? ShapeMode::kRandom : ShapeMode::kFixed;
}

[[noreturn]] void ConfigError(const std::string& msg) {
  throw Error(ErrorCode::kConfig, msg);
}

}  // namespace

std::string ToString(BatchMode mode) {
  switch (mode) {
    case BatchMode::kManual: return "manual";
    case BatchMode::kDynamic: return "dynamic";
    case BatchMode::kFullDynamic: return "full_dynamic";
  }
  return "?";
}

std::string ToString(Phase phase) { return phase == Phase::kInfer ? "infer" : "train"; }

std::string ToString(ShapeMode mode) {
  return mode == ShapeMode::kFixed ? "fixed" : "random";
}

BatchMode ParseBatchMode(std::string_view text) {
  if (text == "manual") return BatchMode::kManual;
  if (text == "dynamic") return BatchMode::kDynamic;
  if (text == "full_dynamic" || text == "full-dynamic") return BatchMode::kFullDynamic;
  ConfigError("unknown mode '" + std::string(text) + "'");
}

Phase ParsePhase(std::string_view text) {
  if (text == "infer") return Phase::kInfer;
  if (text == "train") return Phase::kTrain;
  ConfigError("unknown phase '" + std::string(text) + "'");
}

ShapeMode ParseShapeMode(std::string_view text) {
  if (text == "fixed") return ShapeMode::kFixed;
  if (text == "random") return ShapeMode::kRandom;
  ConfigError("unknown shape mode '" + std::string(text) + "'");
}

HostValue GenRandomTree(int64_t leaves, ShapeMode mode, int64_t vocab,
                        std::mt19937_64& rng) {
  if (leaves < 1) ConfigError("a tree needs at least one leaf");
  if (vocab < 1) ConfigError("vocabulary must not be empty");
  return mode == ShapeMode::kFixed ? FixedTree(leaves, vocab, rng)
                                   : UniformTree(leaves, vocab, rng);
}

HostValue GenRandomTree(int64_t leaves, ShapeMode mode, int64_t vocab, uint64_t seed) {
  std::mt19937_64 rng(seed);
  return GenRandomTree(leaves, mode, vocab, rng);
}

// ---------------------------------------------------------------------------
// ManualBaseline

ManualBaseline::ManualBaseline(const Operation* embedding, const Operation* cell,
                               const HostValue& shape)
    : embedding_(embedding), cell_(cell), shape_(shape) {
  Build(shape);
}

int64_t ManualBaseline::Build(const HostValue& tree) {
  Node node;
  if (io::IsLeaf(tree)) {
    node.leaf = num_leaves_++;
  } else {
    node.left = Build(io::Left(tree));
    node.right = Build(io::Right(tree));
  }
  nodes_.push_back(node);
  return static_cast<int64_t>(nodes_.size()) - 1;
}

ManualBaseline::Batch ManualBaseline::Prepare(std::span<const HostValue> trees) const {
  Batch batch;
  batch.size = static_cast<int64_t>(trees.size());
  std::vector<std::vector<int32_t>> words(num_leaves_);
  for (const HostValue& tree : trees) {
    if (!io::SameShape(tree, shape_)) {
      ConfigError("manual batching needs trees of one shape");
    }
    int64_t leaf = 0;
    std::function<void(const HostValue&)> visit = [&](const HostValue& t) {
      if (io::IsLeaf(t)) {
        words[leaf++].push_back(static_cast<int32_t>(io::Word(t)));
      } else {
        visit(io::Left(t));
        visit(io::Right(t));
      }
    };
    visit(tree);
  }
  for (auto& w : words) {
    batch.leaf_words.push_back(Tensor::FromVector(Shape{batch.size}, std::move(w)));
  }
  return batch;
}

Tensor ManualBaseline::Forward(const Batch& batch, const ParameterStore& params,
                               Tape* tape, int64_t* embedding_calls,
                               int64_t* cell_calls) const {
  std::vector<Tensor> out(nodes_.size());
  for (size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.leaf >= 0) {
      out[i] = std::move(embedding_->Forward({&batch.leaf_words[n.leaf], 1}, params)[0]);
      if (embedding_calls) ++*embedding_calls;
    } else {
      const Tensor in[2] = {out[n.left], out[n.right]};
      out[i] = std::move(cell_->Forward(in, params)[0]);
      if (cell_calls) ++*cell_calls;
    }
  }
  Tensor root = out.back();
  if (tape) tape->outputs = std::move(out);
  return root;
}

void ManualBaseline::Backward(const Batch& batch, const Tape& tape,
                              const ParameterStore& params, const Tensor& root_grad,
                              GradientStore* grads) const {
  const auto& out = tape.outputs;
  std::vector<Tensor> g(nodes_.size());
  g.back() = root_grad;
  for (size_t i = nodes_.size(); i-- > 0;) {
    const Node& n = nodes_[i];
    if (n.leaf >= 0) {
      embedding_->Backward({&batch.leaf_words[n.leaf], 1}, {&out[i], 1}, {&g[i], 1},
                           params, grads);
    } else {
      const Tensor in[2] = {out[n.left], out[n.right]};
      auto dx = cell_->Backward(in, {&out[i], 1}, {&g[i], 1}, params, grads);
      g[n.left] = std::move(dx[0]);
      g[n.right] = std::move(dx[1]);
    }
    g[i] = Tensor();
  }
}

// ---------------------------------------------------------------------------
// TreeBench

TreeBench::TreeBench(int64_t state_size, int64_t vocab_size, uint64_t seed, DType dtype)
    : registry_(OperationRegistry::WithBuiltins()),
      tree_model_(models::BuildTreeRnn({vocab_size, state_size, dtype, "tree_rnn"},
                                       registry_)),
      model_(CompiledModel::Compile(tree_model_.tree, registry_)) {
  model_.InitializeParameters(params_, seed);
}

const Operation* TreeBench::embedding() const {
  return &registry_.Get(tree_model_.embedding_op);
}

const Operation* TreeBench::cell() const { return &registry_.Get(tree_model_.cell_op); }

// ---------------------------------------------------------------------------
// RunBenchmark

void ValidateConfig(const BenchConfig& config) {
  if (config.modes.empty()) ConfigError("no modes requested");
  if (config.batch_sizes.empty()) ConfigError("no batch sizes requested");
  for (int64_t b : config.batch_sizes) {
    if (b < 1) ConfigError("batch size must be at least 1");
  }
  if (config.tree_size < 1) ConfigError("tree size must be at least 1");
  if (config.state_size < 1) ConfigError("state size must be at least 1");
  if (config.vocab_size < 1) ConfigError("vocabulary size must be at least 1");
  if (config.repeats < 3) ConfigError("repeats must be at least 3");
  if (config.threads < 1) ConfigError("threads must be at least 1");
  for (BatchMode mode : config.modes) {
    if (mode == BatchMode::kManual && ShapeFor(config, mode) == ShapeMode::kRandom) {
      ConfigError("manual batching cannot batch trees of different shapes");
    }
  }
}

const BenchRow* BenchReport::Find(BatchMode mode, int64_t batch_size) const {
  for (const BenchRow& r : rows) {
    if (r.mode == mode && r.batch_size == batch_size) return &r;
  }
  return nullptr;
}

void ComputeRatios(BenchReport& report) {
  const BenchRow* manual1 = report.Find(BatchMode::kManual, 1);
  for (BenchRow& r : report.rows) {
    r.cost_ratio.reset();
    r.speedup_ratio.reset();
    if (r.mode == BatchMode::kDynamic) {
      if (const BenchRow* m = report.Find(BatchMode::kManual, r.batch_size)) {
        r.cost_ratio = r.tree_time_s / m->tree_time_s;
      }
    }
    if (r.mode == BatchMode::kFullDynamic && manual1) {
      r.speedup_ratio = manual1->tree_time_s / r.tree_time_s;
    }
  }
}

BenchReport RunBenchmark(const BenchConfig& config) {
  ValidateConfig(config);
  TreeBench tb(config.state_size, config.vocab_size, config.seed);
  const ExecutorOptions exec_options{config.threads};
  const Executor executor = tb.model().MakeExecutor(exec_options);
  BenchReport report;

  for (int64_t batch_size : config.batch_sizes) {
    for (BatchMode mode : config.modes) {
      const ShapeMode shape = ShapeFor(config, mode);
      // Same seed per (batch size, shape): manual and dynamic see one batch.
      std::mt19937_64 rng(config.seed * 1000003 + batch_size * 2 +
                          (shape == ShapeMode::kRandom));
      std::vector<HostValue> trees;
      for (int64_t i = 0; i < batch_size; ++i) {
        trees.push_back(GenRandomTree(config.tree_size, shape, config.vocab_size, rng));
      }
      ParameterStore params = tb.params();
      Sgd sgd(config.learning_rate);
      GradientStore grads;
      std::function<void()> run;

      std::optional<ManualBaseline> manual;
      std::optional<ManualBaseline::Batch> manual_batch;
      std::optional<BatchPlan> plan;
      if (mode == BatchMode::kManual) {
        manual.emplace(tb.embedding(), tb.cell(), trees[0]);
        if (!config.include_compile) manual_batch = manual->Prepare(trees);
        const Tensor root_grad =
            Tensor::Filled(DType::kFloat32, Shape{batch_size, 2 * config.state_size},
                           1.0 / static_cast<double>(batch_size));
        run = [&, root_grad] {
          if (config.include_compile) manual_batch = manual->Prepare(trees);
          if (config.phase == Phase::kInfer) {
            manual->Forward(*manual_batch, params);
            return;
          }
          ManualBaseline::Tape tape;
          manual->Forward(*manual_batch, params, &tape);
          grads.Clear();
          manual->Backward(*manual_batch, tape, params, root_grad, &grads);
          sgd.Step(params, grads);
        };
      } else {
        if (!config.include_compile) plan = tb.model().Plan(trees);
        run = [&] {
          if (config.include_compile) plan = tb.model().Plan(trees);
          if (config.phase == Phase::kInfer) {
            executor.Forward(plan->schedule, params, Mode::kInfer);
            return;
          }
          grads.Clear();
          LossAndGradients(tb.model(), *plan, params, &grads, exec_options);
          sgd.Step(params, grads);
        };
      }

      run();  // warmup
      std::vector<double> times;
      for (int r = 0; r < config.repeats; ++r) times.push_back(Seconds(run));

      BenchRow row;
      row.mode = mode;
      row.phase = config.phase;
      row.batch_size = batch_size;
      row.tree_size = config.tree_size;
      row.state_size = config.state_size;
      row.batch_time_s = Median(times);
      row.tree_time_s = row.batch_time_s / static_cast<double>(batch_size);
      report.rows.push_back(row);
    }
  }
  ComputeRatios(report);
  return report;
}

void KeepFreedMemoryForTiming() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

// ---------------------------------------------------------------------------
// CSV

const char kCsvHeader[] =
    "mode,phase,batch_size,tree_size,state_size,batch_time_s,tree_time_s,cost_ratio,"
    "speedup_ratio";

namespace {

std::string FormatDouble(double v) {
  std::ostringstream s;
  s.precision(9);
  s << v;
  return s.str();
}

std::string FormatOptional(const std::optional<double>& v) {
  return v ? FormatDouble(*v) : std::string();
}

}  // namespace

void WriteCsv(const BenchReport& report, std::ostream& out) {
  out << kCsvHeader << "\n";
  for (const BenchRow& r : report.rows) {
    out << ToString(r.mode) << ',' << ToString(r.phase) << ',' << r.batch_size << ','
        << r.tree_size << ',' << r.state_size << ',' << FormatDouble(r.batch_time_s)
        << ',' << FormatDouble(r.tree_time_s) << ',' << FormatOptional(r.cost_ratio)
        << ',' << FormatOptional(r.speedup_ratio) << "\n";
  }
}

BenchReport ReadCsv(std::istream& in) {
  BenchReport report;
  std::string line;
  int64_t line_no = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw Error(ErrorCode::kIO, "report line " + std::to_string(line_no) + ": " + msg);
  };
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kIO, "report is empty");
  }
  ++line_no;
  if (line != kCsvHeader) fail("unexpected header '" + line + "'");
  auto to_int = [&](const std::string& s) {
    size_t used = 0;
    int64_t v = 0;
    try {
      v = std::stoll(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (s.empty() || used != s.size() || v < 1) fail("bad positive integer '" + s + "'");
    return v;
  };
  auto to_double = [&](const std::string& s) {
    size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (s.empty() || used != s.size() || !std::isfinite(v) || v < 0) {
      fail("bad non-negative number '" + s + "'");
    }
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 9) fail("expected 9 fields, got " + std::to_string(f.size()));
    BenchRow r;
    try {
      r.mode = ParseBatchMode(f[0]);
      r.phase = ParsePhase(f[1]);
    } catch (const Error& e) {
      fail(e.what());
    }
    r.batch_size = to_int(f[2]);
    r.tree_size = to_int(f[3]);
    r.state_size = to_int(f[4]);
    r.batch_time_s = to_double(f[5]);
    r.tree_time_s = to_double(f[6]);
    if (!f[7].empty()) r.cost_ratio = to_double(f[7]);
    if (!f[8].empty()) r.speedup_ratio = to_double(f[8]);
    const double expect = r.batch_time_s / static_cast<double>(r.batch_size);
    if (std::abs(r.tree_time_s - expect) > 1e-6 * std::max(expect, 1e-12)) {
      fail("tree_time_s is not batch_time_s / batch_size");
    }
    if (r.cost_ratio && r.mode != BatchMode::kDynamic) {
      fail("cost_ratio is only defined for dynamic rows");
    }
    if (r.speedup_ratio && r.mode != BatchMode::kFullDynamic) {
      fail("speedup_ratio is only defined for full_dynamic rows");
    }
    report.rows.push_back(r);
  }
  // The ratios must follow from the times in the file.
  BenchReport check = report;
  ComputeRatios(check);
  for (size_t i = 0; i < report.rows.size(); ++i) {
    line_no = static_cast<int64_t>(i) + 2;
    const auto& want = check.rows[i];
    const auto& got = report.rows[i];
    auto same = [](const std::optional<double>& a, const std::optional<double>& b) {
      if (a.has_value() != b.has_value()) return false;
      return !a || std::abs(*a - *b) <= 1e-6 * std::max(std::abs(*b), 1e-12);
    };
    if (!same(got.cost_ratio, want.cost_ratio)) fail("cost_ratio inconsistent with times");
    if (!same(got.speedup_ratio, want.speedup_ratio)) {
      fail("speedup_ratio inconsistent with times");
    }
  }
  return report;
}

}  // namespace dynbatch::bench
